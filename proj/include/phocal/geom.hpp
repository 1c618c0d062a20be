#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <span>

#include "phocal/errors.hpp"
#include "phocal/rng.hpp"

namespace phocal {

// Units: millimetres for lengths, degrees for every angle crossing an API.
// Radians only appear internally.

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Point3d = Vector3<double>;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
    return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
    return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Proper rotation stored as a unit quaternion.
template <typename Scalar>
class Rotation {
public:
    using Quaternion = Eigen::Quaternion<Scalar>;

    Rotation() : q_(Quaternion::Identity()) {}

    /// Takes any nonzero quaternion and normalizes it.
    explicit Rotation(const Quaternion& q) : q_(q.normalized()) {}

    /// Projects the matrix onto SO(3) first, so near-orthonormal input is fine.
    static Rotation from_matrix(const Matrix3<Scalar>& m) {
        Eigen::JacobiSVD<Matrix3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Matrix3<Scalar> d = Matrix3<Scalar>::Identity();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
        return Rotation(Quaternion(Matrix3<Scalar>(svd.matrixU() * d * svd.matrixV().transpose())));
    }

    static Rotation identity() { return Rotation(); }

    /// Stores q as given; callers guarantee unit length (loaders check it).
    static Rotation from_unit(const Quaternion& q) { return Rotation(q, Unchecked{}); }

    const Quaternion& quaternion() const { return q_; }
    Matrix3<Scalar> matrix() const { return q_.toRotationMatrix(); }

    Rotation inverse() const { return Rotation(q_.conjugate(), Unchecked{}); }

    Vector3<Scalar> operator*(const Vector3<Scalar>& v) const { return q_ * v; }

    /// Product without renormalization; see normalized().
    Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_, Unchecked{}); }

    Rotation normalized() const { return Rotation(q_); }

    template <typename Other>
    Rotation<Other> cast() const {
        return Rotation<Other>(q_.template cast<Other>());
    }

private:
    struct Unchecked {};
    Rotation(const Quaternion& q, Unchecked) : q_(q) {}

    Quaternion q_;
};

/// Rigid transform p -> R*p + t, translation in mm.
template <typename Scalar>
struct Pose3 {
    Rotation<Scalar> rotation;
    Vector3<Scalar> translation = Vector3<Scalar>::Zero();

    static Pose3 identity() { return {}; }

    static Pose3 from_translation(const Vector3<Scalar>& t) { return {Rotation<Scalar>(), t}; }

    Eigen::Matrix<Scalar, 4, 4> matrix() const {
        Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
        m.template topLeftCorner<3, 3>() = rotation.matrix();
        m.template topRightCorner<3, 1>() = translation;
        return m;
    }
};

using Rotationd = Rotation<double>;
using Pose3d = Pose3<double>;

/// result(x) = a(b(x)).
template <typename Scalar>
Pose3<Scalar> compose(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

template <typename Scalar>
Pose3<Scalar> operator*(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
    return compose(a, b);
}

template <typename Scalar>
Pose3<Scalar> invert(const Pose3<Scalar>& a) {
    const Rotation<Scalar> rt = a.rotation.inverse();
    return {rt, -(rt * a.translation)};
}

template <typename Scalar>
Vector3<Scalar> apply(const Pose3<Scalar>& a, const Vector3<Scalar>& p) {
    return a.rotation * p + a.translation;
}

/// Left-to-right product poses[0] * poses[1] * ..., renormalizing the
/// rotation every 8 factors to bound drift on long chains.
template <typename Scalar>
Pose3<Scalar> compose_chain(std::span<const Pose3<Scalar>> poses) {
    Pose3<Scalar> acc;
    int since_normalize = 0;
    for (const auto& p : poses) {
        acc = compose(acc, p);
        if (++since_normalize == 8) {
            acc.rotation = acc.rotation.normalized();
            since_normalize = 0;
        }
    }
    return acc;
}

/// Rotation about a unit axis by an angle in degrees.
template <typename Scalar>
Rotation<Scalar> axis_angle(const Vector3<Scalar>& axis, Scalar angle_deg) {
    using std::abs;
    if (!axis.allFinite() || abs(axis.norm() - Scalar(1)) > Scalar(1e-9)) {
        throw ValidationError("axis_angle: axis must be a unit vector (|axis| = 1 within 1e-9)");
    }
    return Rotation<Scalar>(
        Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(deg2rad(angle_deg), axis)));
}

/// Geodesic angle between two rotations in degrees, in [0, 180].
template <typename Scalar>
Scalar rotation_distance(const Rotation<Scalar>& a, const Rotation<Scalar>& b) {
    using std::abs;
    using std::atan2;
    const Eigen::Quaternion<Scalar> d = a.quaternion().conjugate() * b.quaternion();
    // atan2 form stays accurate near 0 and 180 where acos loses digits.
    return rad2deg(Scalar(2) * atan2(d.vec().norm(), abs(d.w())));
}

/// Uniform direction on the unit sphere from a normalized Gaussian triple.
inline Vector3<double> random_unit_vector(RngStream& rng) {
    for (;;) {
        Vector3<double> v(rng.normal(), rng.normal(), rng.normal());
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

/// Returns (translation error mm, rotation error degrees).
struct PoseError {
    double translation_mm = 0.0;
    double rotation_deg = 0.0;
};

template <typename Scalar>
PoseError pose_error(const Pose3<Scalar>& gt, const Pose3<Scalar>& est) {
    return {static_cast<double>((gt.translation - est.translation).norm()),
            static_cast<double>(rotation_distance(gt.rotation, est.rotation))};
}

/// Uniformly random rotation (Shoemake's method).
inline Rotationd random_rotation(RngStream& rng) {
    const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
    return Rotationd(Eigen::Quaterniond(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2),
                                        b * std::sin(t3)));
}

/// Right-handed frame whose +z axis points along `forward`; `up_hint` must
/// not be parallel to `forward`.
inline Rotationd look_rotation(const Vector3<double>& forward, const Vector3<double>& up_hint) {
    const Vector3<double> z = forward.normalized();
    const Vector3<double> x = up_hint.cross(z).normalized();
    const Vector3<double> y = z.cross(x);
    Matrix3<double> m;
    m.col(0) = x;
    m.col(1) = y;
    m.col(2) = z;
    return Rotationd::from_matrix(m);
}

}  // namespace phocal
