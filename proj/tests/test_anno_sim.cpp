#include <doctest.h>

#include <cmath>

#include "phocal/anno_sim.hpp"
#include "phocal/errors.hpp"
#include "phocal/metrics.hpp"
#include "support.hpp"

using namespace phocal;

namespace {

// Scene template with trajectories cut short so the tests stay quick.
SceneConfig small_scene(std::uint64_t seed, std::size_t stops = 12) {
    RngStream rng(seed);
    SceneConfig s = generate_scene("phocal-like", rng);
    for (auto& t : s.trajectories) t.stops.resize(std::min(stops, t.stops.size()));
    return s;
}

SimOptions quick() {
    SimOptions o;
    o.samples_per_object = 400;
    return o;
}

NoiseSpec noise(double t_mm, double r_deg, std::vector<double> targets, std::uint64_t seed = 3) {
    NoiseSpec n;
    n.obj_translation_noise_mm = t_mm;
    n.obj_rotation_noise_deg = r_deg;
    n.handeye_target_rmse_mm = std::move(targets);
    n.seed = seed;
    return n;
}

// Independent oracle for one frame: 4x4 matrix chain over the same samples.
double frame_oracle(const std::vector<Point3d>& pts, const Pose3d& cam, const Pose3d& cam_hat, const Pose3d& ee,
                    const Pose3d& obj, const Pose3d& obj_hat) {
    const Eigen::Matrix4d gt = test::homogeneous(cam).inverse() * test::homogeneous(ee).inverse() * test::homogeneous(obj);
    const Eigen::Matrix4d an =
        test::homogeneous(cam_hat).inverse() * test::homogeneous(ee).inverse() * test::homogeneous(obj_hat);
    double s = 0.0;
    for (const auto& p : pts) s += ((gt - an) * p.homogeneous()).squaredNorm();
    return std::sqrt(s / static_cast<double>(pts.size()));
}

std::vector<Point3d> samples_for(const SceneConfig& s, std::size_t i, const SimOptions& o) {
    MeshLibrary lib;
    RngStream rng = RngStream(o.sample_seed).derive(i);
    return sample_surface(lib.resolve(s.objects[i].mesh_ref), o.samples_per_object, rng);
}

}  // namespace

TEST_CASE("object perturbation has the exact configured magnitude") {
    RngStream rng(11);
    const NoiseSpec spec = noise(0.20, 0.38, {});
    int up = 0;
    constexpr int kDraws = 10'000;
    for (int k = 0; k < kDraws; ++k) {
        const Pose3d gt = test::random_pose(rng);
        const Pose3d hat = perturb_object_pose(gt, spec, rng);
        const PoseError e = pose_error(gt, hat);
        CHECK(e.translation_mm == doctest::Approx(0.20).epsilon(1e-9));
        CHECK(e.rotation_deg == doctest::Approx(0.38).epsilon(1e-9));
        // the object origin moves by exactly the translation magnitude
        CHECK((apply(hat, Point3d(0, 0, 0)) - apply(gt, Point3d(0, 0, 0))).norm() == doctest::Approx(0.20).epsilon(1e-9));
        // direction expressed in the object frame
        const Point3d local = gt.rotation.inverse() * (hat.translation - gt.translation);
        up += local.z() > 0.0;
    }
    CHECK(std::abs(static_cast<double>(up) / kDraws - 0.5) <= 0.02);
}

TEST_CASE("zero noise gives zero error") {
    const SceneConfig s = small_scene(5);
    MeshLibrary lib;
    const SimReport r = simulate_annotation_error(s, noise(0, 0, {0, 0}), lib, quick());
    REQUIRE(r.cameras.size() == 2);
    for (const auto& c : r.cameras) {
        CHECK(c.overall_rmse < 1e-9);
        for (const auto& o : c.objects)
            for (double f : o.frame_rmse) CHECK(f < 1e-9);
    }
}

TEST_CASE("object-only noise") {
    const SceneConfig s = small_scene(6);
    const SimOptions opt = quick();
    MeshLibrary lib;

    SUBCASE("translation only is a constant shift") {
        const SimReport a = simulate_annotation_error(s, noise(0.2, 0, {0, 0}), lib, opt);
        const SimReport b = simulate_annotation_error(s, noise(0.4, 0, {0, 0}), lib, opt);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(a.cameras[c].overall_rmse == doctest::Approx(0.2).epsilon(1e-9));
            CHECK(b.cameras[c].overall_rmse == doctest::Approx(2.0 * a.cameras[c].overall_rmse).epsilon(1e-9));
        }
    }
    SUBCASE("matches the matrix oracle and is the same in every frame") {
        const SimReport r = simulate_annotation_error(s, noise(0.2, 0.38, {0, 0}), lib, opt);
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            const auto pts = samples_for(s, i, opt);
            const Pose3d& obj = s.objects[i].obj_to_base;
            const Pose3d& hat = r.object_noise[i].perturbed;
            const double expect = frame_oracle(pts, s.cameras[0].cam_to_ee, s.cameras[0].cam_to_ee,
                                               s.trajectories[0].stops[0], obj, hat);
            // centered about the sample mean, rotation only adds to the shift
            Point3d mean = Point3d::Zero();
            for (const auto& p : pts) mean += p;
            mean /= static_cast<double>(pts.size());
            const Pose3d err = invert(obj) * hat;
            std::vector<Point3d> centered;
            for (const auto& p : pts) centered.push_back(p - mean);
            CHECK(pointwise_rmse(centered, Pose3d::identity(), Pose3d{err.rotation, Point3d(0.2, 0, 0)}) >= 0.2);
            for (const auto& c : r.cameras) {
                for (double f : c.objects[i].frame_rmse) CHECK(f == doctest::Approx(expect).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("full simulation agrees with the matrix oracle") {
    const SceneConfig s = small_scene(7, 6);
    const SimOptions opt = quick();
    MeshLibrary lib;
    const SimReport r = simulate_annotation_error(s, noise(0.2, 0.38, {0.89, 0.83}), lib, opt);
    for (std::size_t c = 0; c < 2; ++c) {
        const Pose3d cam = s.cameras[c].cam_to_ee;
        const Pose3d cam_hat = r.cameras[c].handeye_delta * cam;
        CHECK(r.cameras[c].handeye_achieved_rmse ==
              doctest::Approx(r.cameras[c].handeye_target_rmse).epsilon(0.02));
        double sum_obj = 0.0;
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            const auto pts = samples_for(s, i, opt);
            std::size_t f = 0;
            double sum = 0.0;
            for (const auto& t : s.trajectories) {
                for (const auto& ee : t.stops) {
                    const double o = frame_oracle(pts, cam, cam_hat, ee, s.objects[i].obj_to_base,
                                                  r.object_noise[i].perturbed);
                    CHECK(r.cameras[c].objects[i].frame_rmse[f++] == doctest::Approx(o).epsilon(1e-9));
                    sum += o;
                }
            }
            sum_obj += sum / static_cast<double>(f);
        }
        CHECK(r.cameras[c].overall_rmse == doctest::Approx(sum_obj / s.objects.size()).epsilon(1e-9));
    }
}

TEST_CASE("re-basing the whole scene leaves the result unchanged") {
    const SceneConfig s = small_scene(8, 6);
    RngStream rng(9);
    const Pose3d g = test::random_pose(rng, 300.0);
    SceneConfig moved = s;
    for (auto& o : moved.objects) o.obj_to_base = g * o.obj_to_base;
    for (auto& t : moved.trajectories)
        for (auto& e : t.stops) e = g * e;
    for (auto& e : moved.calibration.ee_stops) e = g * e;
    moved.calibration.marker_to_base = g * moved.calibration.marker_to_base;

    MeshLibrary lib;
    const auto n0 = noise(0.2, 0.38, {0, 0});
    const SimReport a = simulate_annotation_error(s, n0, lib, quick());
    const SimReport b = simulate_annotation_error(moved, n0, lib, quick());
    for (std::size_t c = 0; c < 2; ++c) CHECK(b.cameras[c].overall_rmse == doctest::Approx(a.cameras[c].overall_rmse).epsilon(1e-9));

    const auto n1 = noise(0.2, 0.38, {0.89, 0.83});
    const SimReport x = simulate_annotation_error(s, n1, lib, quick());
    const SimReport y = simulate_annotation_error(moved, n1, lib, quick());
    for (std::size_t c = 0; c < 2; ++c) CHECK(y.cameras[c].overall_rmse == doctest::Approx(x.cameras[c].overall_rmse).epsilon(1e-6));
}

TEST_CASE("simulation is deterministic per seed") {
    const SceneConfig s = small_scene(10, 6);
    MeshLibrary lib;
    const auto n = noise(0.2, 0.38, {0.89, 0.83}, 42);
    const SimReport a = simulate_annotation_error(s, n, lib, quick());
    const SimReport b = simulate_annotation_error(s, n, lib, quick());
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(a.cameras[c].overall_rmse == b.cameras[c].overall_rmse);
        CHECK(a.cameras[c].handeye_delta.translation == b.cameras[c].handeye_delta.translation);
    }
    const SimReport other = simulate_annotation_error(s, noise(0.2, 0.38, {0.89, 0.83}, 43), lib, quick());
    CHECK(other.cameras[0].overall_rmse != a.cameras[0].overall_rmse);

    const RepeatedSim rep = simulate_repeated(s, n, lib, 3, quick());
    REQUIRE(rep.per_draw.size() == 3);
    CHECK(rep.per_draw[0][0] == a.cameras[0].overall_rmse);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(rep.mean[c] == doctest::Approx((rep.per_draw[0][c] + rep.per_draw[1][c] + rep.per_draw[2][c]) / 3.0));
    }
    CHECK_THROWS_AS(simulate_repeated(s, n, lib, 0, quick()), ValidationError);
}

TEST_CASE("hand-eye perturbation search") {
    const SceneConfig s = small_scene(12, 2);
    const MarkerBoard board = calibration_board(s.calibration);
    const Pose3d cam = s.cameras[0].cam_to_ee;
    const auto views = calibration_views(s.calibration, cam);
    REQUIRE(evaluate_handeye(views, cam, board) < 1e-9);

    for (double target : {0.3, 0.83, 0.89, 2.0}) {
        RngStream rng(static_cast<std::uint64_t>(target * 100));
        const HandEyePerturbation p = calibrate_handeye_perturbation(cam, board, views, target, rng);
        CHECK(p.rmse == doctest::Approx(target).epsilon(0.02));
        CHECK(p.evaluations >= 1);
        // independent check: recompute the per-point residuals via matrices
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& v : views) {
            const Eigen::Matrix4d m = test::homogeneous(v.ee_pose) * test::homogeneous(p.delta) *
                                      test::homogeneous(cam) * test::homogeneous(v.marker_in_cam);
            for (std::size_t i = 0; i < board.board_points.size(); ++i) {
                sum += ((m * board.board_points[i].homogeneous()).head<3>() - board.measured_points[i]).squaredNorm();
                ++n;
            }
        }
        CHECK(std::sqrt(sum / n) == doctest::Approx(p.rmse).epsilon(1e-9));
    }

    SUBCASE("translation-only sweep") {
        HandEyeSearch search;
        search.sweep_rotation = false;
        RngStream rng(1);
        const auto p = calibrate_handeye_perturbation(cam, board, views, 0.89, rng, search);
        CHECK(rotation_distance(p.delta.rotation, Rotationd::identity()) < 1e-12);
        CHECK(p.delta.translation.norm() == doctest::Approx(p.rmse).epsilon(1e-9));
        CHECK(p.rmse == doctest::Approx(0.89).epsilon(0.02));
    }
    SUBCASE("errors") {
        RngStream rng(2);
        CHECK_THROWS_AS(calibrate_handeye_perturbation(cam, board, views, 0.0, rng), ValidationError);
        CHECK_THROWS_AS(calibrate_handeye_perturbation(cam, board, views, -1.0, rng), ValidationError);
        CHECK_THROWS_AS(calibrate_handeye_perturbation(cam, board, {}, 0.89, rng), ValidationError);
        HandEyeSearch none;
        none.sweep_rotation = none.sweep_translation = false;
        CHECK_THROWS_AS(calibrate_handeye_perturbation(cam, board, views, 0.89, rng, none), ValidationError);
        HandEyeSearch tiny;
        tiny.budget = 1;
        tiny.tolerance = 1e-12;
        CHECK_THROWS_AS(calibrate_handeye_perturbation(cam, board, views, 0.89, rng, tiny), DegenerateError);
    }
}

TEST_CASE("scene generation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RngStream a(seed), b(seed);
        const SceneConfig s = generate_scene("phocal-like", a);
        const SceneConfig t = generate_scene("phocal-like", b);
        CHECK_NOTHROW(validate(s));
        CHECK(s.objects.size() >= 5);
        CHECK(s.objects.size() <= 8);
        REQUIRE(s.objects.size() == t.objects.size());
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            CHECK(s.objects[i].mesh_ref == t.objects[i].mesh_ref);
            CHECK(s.objects[i].obj_to_base.translation == t.objects[i].obj_to_base.translation);
        }
        CHECK(s.cameras.size() == 2);
        CHECK(s.trajectories.size() == 2);
        for (const auto& tr : s.trajectories) {
            CHECK(tr.stops.size() >= 80);
            CHECK(tr.stops.size() <= 120);
        }
        CHECK(s.calibration.board_points.size() == 12);

        MeshLibrary lib;
        std::vector<Aabb> boxes;
        for (const auto& o : s.objects) {
            const Aabb box = bounding_box(lib.resolve(o.mesh_ref), o.obj_to_base);
            CHECK(box.min.z() >= -1e-9);  // resting on the table
            boxes.push_back(box);
        }
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                const bool overlap = (boxes[i].min.array() < boxes[j].max.array()).all() &&
                                     (boxes[j].min.array() < boxes[i].max.array()).all();
                CHECK(!overlap);
            }
        }
    }
    RngStream rng(0);
    CHECK_THROWS_WITH_AS(generate_scene("kitchen", rng), doctest::Contains("phocal-like"), ValidationError);
}

TEST_CASE("mesh references are resolved before any simulation work") {
    SceneConfig s = small_scene(13, 2);
    MeshLibrary lib;
    s.objects.back().mesh_ref = "does/not/exist.obj";
    CHECK_THROWS_AS(simulate_annotation_error(s, noise(0.2, 0.38, {0.89, 0.83}), lib, quick()), ValidationError);
    s.objects.back().mesh_ref = "proc:sphere:10";
    CHECK_THROWS_AS(simulate_annotation_error(s, noise(0.2, 0.38, {0.89, 0.83}), lib, quick()), ValidationError);

    CHECK_THROWS_AS(procedural_mesh("proc:box:1,2"), ValidationError);
    CHECK_THROWS_AS(procedural_mesh("proc:box:1,-2,3"), ValidationError);
    CHECK_THROWS_AS(procedural_mesh("box:1,2,3"), ValidationError);
    CHECK_THROWS_AS(procedural_mesh("proc:box:1,x,3"), ValidationError);
    const Mesh m = procedural_mesh("proc:box:40,20,10");
    const Aabb b = bounding_box(m);
    CHECK((b.min + b.max).norm() < 1e-12);
    CHECK((b.max - b.min - Point3d(40, 20, 10)).norm() < 1e-12);
    CHECK(&lib.resolve("proc:cup:30,80,3") == &lib.resolve("proc:cup:30,80,3"));
}

TEST_CASE("noise settings validation") {
    const SceneConfig s = small_scene(14, 2);
    MeshLibrary lib;
    CHECK_THROWS_AS(simulate_annotation_error(s, noise(0.2, 0.38, {0.89}), lib, quick()), ValidationError);
    CHECK_THROWS_AS(simulate_annotation_error(s, noise(-0.2, 0.38, {0.89, 0.83}), lib, quick()), ValidationError);
    CHECK_THROWS_AS(simulate_annotation_error(s, noise(0.2, 0.38, {0.89, NAN}), lib, quick()), ValidationError);
    SceneConfig empty = s;
    empty.trajectories.clear();
    CHECK_THROWS_AS(simulate_annotation_error(empty, noise(0.2, 0.38, {0.89, 0.83}), lib, quick()), ValidationError);
}
