#include "phocal/anno_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phocal/errors.hpp"
#include "phocal/metrics.hpp"
#include "phocal/obj.hpp"
#include "phocal/text.hpp"

namespace phocal {

namespace {

void check_pose(const Pose3d& p, const std::string& what) {
    if (!p.translation.allFinite() || !p.rotation.quaternion().coeffs().allFinite()) {
        throw ValidationError(what + ": non-finite pose");
    }
}

}  // namespace

void validate(const SceneConfig& scene) {
    if (scene.objects.empty()) throw ValidationError("scene: needs at least one object");
    if (scene.cameras.empty()) throw ValidationError("scene: needs at least one camera");
    if (scene.trajectories.empty()) throw ValidationError("scene: needs at least one trajectory");
    for (const auto& o : scene.objects) {
        if (o.mesh_ref.empty()) throw ValidationError("scene: object '" + o.name + "' has no mesh reference");
        check_pose(o.obj_to_base, "object '" + o.name + "'");
    }
    for (const auto& c : scene.cameras) check_pose(c.cam_to_ee, "camera '" + c.name + "'");
    for (const auto& t : scene.trajectories) {
        if (t.stops.empty()) throw ValidationError("scene: trajectory '" + t.name + "' is empty");
        for (const auto& s : t.stops) check_pose(s, "trajectory '" + t.name + "'");
    }
    const auto& cal = scene.calibration;
    if (cal.board_points.size() < 3) throw ValidationError("scene: calibration board needs at least 3 points");
    if (cal.ee_stops.empty()) throw ValidationError("scene: calibration target has no views");
    for (const auto& p : cal.board_points) {
        if (!p.allFinite()) throw ValidationError("scene: non-finite calibration board point");
    }
    check_pose(cal.marker_to_base, "calibration marker");
    for (const auto& s : cal.ee_stops) check_pose(s, "calibration view");
}

void validate(const NoiseSpec& spec) {
    const auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(spec.obj_translation_noise_mm) || !ok(spec.obj_rotation_noise_deg)) {
        throw ValidationError("noise: object noise magnitudes must be finite and non-negative");
    }
    for (double t : spec.handeye_target_rmse_mm) {
        if (!ok(t)) throw ValidationError("noise: hand-eye targets must be finite and non-negative");
    }
}

Pose3d perturb_object_pose(const Pose3d& obj_to_base, const NoiseSpec& spec, RngStream& rng) {
    const Vector3<double> dir = random_unit_vector(rng);
    const Vector3<double> axis = random_unit_vector(rng);
    const Pose3d error{axis_angle(axis, spec.obj_rotation_noise_deg), dir * spec.obj_translation_noise_mm};
    return obj_to_base * error;
}

std::vector<HandEyeView> calibration_views(const CalibrationTarget& target, const Pose3d& cam_to_ee) {
    std::vector<HandEyeView> views;
    views.reserve(target.ee_stops.size());
    const Pose3d base_to_cam_suffix = invert(cam_to_ee);
    for (const auto& ee : target.ee_stops) {
        views.push_back({ee, base_to_cam_suffix * invert(ee) * target.marker_to_base});
    }
    return views;
}

MarkerBoard calibration_board(const CalibrationTarget& target) {
    MarkerBoard board;
    board.board_points = target.board_points;
    for (const auto& p : target.board_points) board.measured_points.push_back(apply(target.marker_to_base, p));
    return board;
}

HandEyePerturbation calibrate_handeye_perturbation(const Pose3d& cam_to_ee, const MarkerBoard& board,
                                                   std::span<const HandEyeView> views,
                                                   double target_rmse, RngStream& rng,
                                                   const HandEyeSearch& search) {
    if (!(target_rmse > 0.0) || !std::isfinite(target_rmse)) {
        throw ValidationError("hand-eye perturbation: target RMSE must be positive");
    }
    if (!search.sweep_translation && !search.sweep_rotation) {
        throw ValidationError("hand-eye perturbation: both translation and rotation sweeps disabled");
    }
    if (views.empty()) throw ValidationError("hand-eye perturbation: no calibration views");
    if (!(search.tolerance > 0.0)) throw ValidationError("hand-eye perturbation: tolerance must be positive");

    // Lever arm of the board about the end-effector origin; a rotation of
    // target / lever radians moves the board points by about target.
    double lever2 = 0.0;
    std::size_t n = 0;
    for (const auto& v : views) {
        for (const auto& p : board.board_points) {
            lever2 += apply(cam_to_ee * v.marker_in_cam, p).squaredNorm();
            ++n;
        }
    }
    const double lever = std::max(std::sqrt(lever2 / static_cast<double>(std::max<std::size_t>(n, 1))), 1.0);
    const double theta_ref_deg = rad2deg(target_rmse / lever);

    HandEyePerturbation out;
    const auto within = [&](double r) { return std::abs(r - target_rmse) <= search.tolerance * target_rmse; };

    constexpr int kGrid = 64;          // scales k / 32 for k = 1..64
    constexpr int kMaxBisections = 60;
    while (out.evaluations < search.budget) {
        const Vector3<double> u = random_unit_vector(rng);
        const Vector3<double> a = random_unit_vector(rng);
        double rho = rng.uniform();
        if (!search.sweep_rotation) rho = 0.0;
        if (!search.sweep_translation) rho = 1.0;

        const auto delta_at = [&](double s) {
            return Pose3d{axis_angle(a, s * rho * theta_ref_deg), s * (1.0 - rho) * target_rmse * u};
        };
        const auto eval = [&](double s) {
            ++out.evaluations;
            return evaluate_handeye(views, delta_at(s) * cam_to_ee, board);
        };
        const auto accept = [&](double s, double r) {
            out.delta = delta_at(s);
            out.cam_to_ee = out.delta * cam_to_ee;
            out.rmse = r;
            return out;
        };

        double lo = 0.0;
        for (int k = 1; k <= kGrid && out.evaluations < search.budget; ++k) {
            const double s = k / 32.0;
            const double r = eval(s);
            if (within(r)) return accept(s, r);
            if (r < target_rmse) {
                lo = s;
                continue;
            }
            double hi = s;
            for (int b = 0; b < kMaxBisections && out.evaluations < search.budget; ++b) {
                const double mid = 0.5 * (lo + hi);
                const double rm = eval(mid);
                if (within(rm)) return accept(mid, rm);
                (rm < target_rmse ? lo : hi) = mid;
            }
            break;
        }
    }
    throw DegenerateError("hand-eye perturbation: no candidate within " +
                          format_fixed(100.0 * search.tolerance, 1) + "% of " + format_fixed(target_rmse, 3) +
                          " mm after " + std::to_string(out.evaluations) +
                          " evaluations; widen the sweep or raise the budget");
}

Mesh procedural_mesh(const std::string& ref) {
    const auto parts = split(ref, ':');
    if (parts.size() != 3 || parts[0] != "proc") {
        throw ValidationError("mesh reference '" + ref + "': expected proc:<kind>:<p1>,<p2>,...");
    }
    const std::string kind(parts[1]);
    std::vector<double> p;
    for (const auto tok : split(parts[2], ',')) p.push_back(parse_double(trim(tok), ref, 1));
    for (double v : p) {
        if (!(v > 0.0)) throw ValidationError("mesh reference '" + ref + "': parameters must be positive");
    }
    const auto need = [&](std::size_t count) {
        if (p.size() != count) {
            throw ValidationError("mesh reference '" + ref + "': " + kind + " takes " + std::to_string(count) +
                                  " parameters");
        }
    };
    Mesh m;
    if (kind == "box") {
        need(3);
        m = make_box(p[0], p[1], p[2]);
    } else if (kind == "mug") {
        need(3);
        m = make_mug(p[0], p[1], p[2]);
    } else if (kind == "cup") {
        need(3);
        m = make_cup(p[0], p[1], p[2]);
    } else if (kind == "cylinder") {
        need(2);
        m = make_cylinder(p[0], p[1]);
    } else if (kind == "bottle") {
        need(3);
        m = make_bottle(p[0], p[1], p[2]);
    } else if (kind == "blade") {
        need(3);
        m = make_blade(p[0], p[1], p[2]);
    } else {
        throw ValidationError("mesh reference '" + ref +
                              "': unknown kind (known: box, mug, cup, cylinder, bottle, blade)");
    }
    return center_on_bbox(std::move(m));
}

const Mesh& MeshLibrary::resolve(const std::string& ref) {
    if (auto it = cache_.find(ref); it != cache_.end()) return it->second;
    Mesh m;
    if (ref.rfind("proc:", 0) == 0) {
        m = procedural_mesh(ref);
    } else {
        std::filesystem::path path(ref);
        if (path.is_relative() && !base_dir_.empty()) path = base_dir_ / path;
        m = load_mesh(path).mesh;
    }
    validate(m);
    if (m.triangles.empty()) throw ValidationError("mesh '" + ref + "' has no usable triangles");
    return cache_.emplace(ref, std::move(m)).first->second;
}

SimReport simulate_annotation_error(const SceneConfig& scene, const NoiseSpec& spec, MeshLibrary& meshes,
                                    const SimOptions& options) {
    validate(scene);
    validate(spec);
    if (spec.handeye_target_rmse_mm.size() != scene.cameras.size()) {
        throw ValidationError("noise: " + std::to_string(spec.handeye_target_rmse_mm.size()) +
                              " hand-eye targets for " + std::to_string(scene.cameras.size()) + " cameras");
    }
    if (options.samples_per_object == 0) throw ValidationError("simulation: samples_per_object must be positive");

    // Resolve every mesh before drawing any noise.
    std::vector<std::vector<Point3d>> samples;
    const RngStream sample_root(options.sample_seed);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const Mesh& m = meshes.resolve(scene.objects[i].mesh_ref);
        RngStream rng = sample_root.derive(i);
        samples.push_back(sample_surface(m, options.samples_per_object, rng));
    }

    const RngStream root(spec.seed);
    SimReport report;
    report.seed = spec.seed;

    RngStream obj_rng = root.derive(1);
    for (const auto& o : scene.objects) {
        report.object_noise.push_back({o.name, perturb_object_pose(o.obj_to_base, spec, obj_rng)});
    }

    const MarkerBoard board = calibration_board(scene.calibration);
    const BoardCheck check{board.board_points.size(), 1.0};
    validate(board, check);

    for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
        const auto& cam = scene.cameras[c];
        CameraSeries series;
        series.camera = cam.name;
        series.handeye_target_rmse = spec.handeye_target_rmse_mm[c];
        Pose3d cam_hat = cam.cam_to_ee;
        if (series.handeye_target_rmse > 0.0) {
            const auto views = calibration_views(scene.calibration, cam.cam_to_ee);
            RngStream he_rng = root.derive(100 + c);
            const auto pert = calibrate_handeye_perturbation(cam.cam_to_ee, board, views,
                                                             series.handeye_target_rmse, he_rng, options.search);
            cam_hat = pert.cam_to_ee;
            series.handeye_achieved_rmse = pert.rmse;
            series.handeye_delta = pert.delta;
        }
        const Pose3d cam_inv = invert(cam.cam_to_ee);
        const Pose3d cam_hat_inv = invert(cam_hat);

        double sum_objects = 0.0;
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            ObjectSeries os;
            os.object = scene.objects[i].name;
            for (const auto& traj : scene.trajectories) {
                for (const auto& ee : traj.stops) {
                    const Pose3d ee_inv = invert(ee);
                    const Pose3d t_gt = cam_inv * ee_inv * scene.objects[i].obj_to_base;
                    const Pose3d t_ann = cam_hat_inv * ee_inv * report.object_noise[i].perturbed;
                    os.frame_rmse.push_back(pointwise_rmse(samples[i], t_gt, t_ann));
                }
            }
            double s = 0.0;
            for (double r : os.frame_rmse) s += r;
            os.mean_rmse = s / static_cast<double>(os.frame_rmse.size());
            sum_objects += os.mean_rmse;
            series.objects.push_back(std::move(os));
        }
        series.overall_rmse = sum_objects / static_cast<double>(scene.objects.size());
        report.cameras.push_back(std::move(series));
    }
    return report;
}

RepeatedSim simulate_repeated(const SceneConfig& scene, const NoiseSpec& spec, MeshLibrary& meshes,
                              std::size_t draws, const SimOptions& options) {
    if (draws == 0) throw ValidationError("simulation: draw count must be positive");
    RepeatedSim out;
    for (const auto& c : scene.cameras) out.cameras.push_back(c.name);
    out.mean.assign(scene.cameras.size(), 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
        NoiseSpec s = spec;
        s.seed = spec.seed + k;
        const SimReport r = simulate_annotation_error(scene, s, meshes, options);
        std::vector<double> row;
        for (std::size_t c = 0; c < r.cameras.size(); ++c) {
            row.push_back(r.cameras[c].overall_rmse);
            out.mean[c] += r.cameras[c].overall_rmse;
        }
        out.per_draw.push_back(std::move(row));
    }
    for (double& m : out.mean) m /= static_cast<double>(draws);
    return out;
}

std::vector<std::string> scene_templates() { return {"phocal-like"}; }

namespace {

/// Procedural stand-in for one category, sized within household ranges.
struct CategoryShape {
    std::string category;
    std::string mesh_ref;
};

CategoryShape category_shape(std::size_t category, RngStream& rng) {
    const auto r = [&](double lo, double hi) { return format_fixed(rng.uniform(lo, hi), 1); };
    switch (category) {
        case 0: return {"bottle", "proc:bottle:" + r(30, 38) + "," + r(180, 240) + "," + r(11, 14)};
        case 1: return {"box", "proc:box:" + r(60, 120) + "," + r(40, 90) + "," + r(30, 80)};
        case 2: return {"can", "proc:cylinder:" + r(30, 34) + "," + r(100, 125)};
        case 3: return {"cup", "proc:mug:" + r(36, 44) + "," + r(85, 105) + ",3"};
        case 4: return {"remote", "proc:box:" + r(40, 55) + "," + r(150, 200) + "," + r(18, 25)};
        case 5: return {"teapot", "proc:mug:" + r(60, 75) + "," + r(100, 130) + ",4"};
        case 6: return {"cutlery", "proc:blade:" + r(170, 210) + "," + r(18, 24) + ",2.5"};
        default: return {"glassware", "proc:cup:" + r(34, 42) + "," + r(100, 130) + ",2"};
    }
}

/// End-effector pose looking at `target` from spherical coordinates around it.
Pose3d orbit_stop(const Point3d& target, double radius, double azimuth_deg, double elevation_deg) {
    const double az = deg2rad(azimuth_deg), el = deg2rad(elevation_deg);
    const Point3d pos = target + radius * Point3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                                  std::sin(el));
    return {look_rotation(target - pos, Point3d::UnitZ()), pos};
}

}  // namespace

SceneConfig generate_scene(const std::string& template_name, RngStream& rng) {
    if (template_name != "phocal-like") {
        std::string known;
        for (const auto& t : scene_templates()) known += (known.empty() ? "" : ", ") + t;
        throw ValidationError("unknown scene template '" + template_name + "' (known: " + known + ")");
    }
    SceneConfig scene;
    const Point3d table_center(600.0, 0.0, 0.0);

    // Objects on the table plane z = 0, rejection-sampled against each
    // other's bounding boxes.
    const std::size_t count = 5 + rng.uniform_index(4);
    std::vector<Aabb> placed;
    MeshLibrary lib;
    std::size_t attempts = 0;
    while (scene.objects.size() < count) {
        if (++attempts > 10'000) throw DegenerateError("generate_scene: could not place objects without overlap");
        RngStream pick = rng.derive(1000 + attempts);
        const auto shape = category_shape(pick.uniform_index(kCategories.size()), pick);
        const Mesh& mesh = lib.resolve(shape.mesh_ref);
        const Aabb local = bounding_box(mesh);
        const double yaw = pick.uniform(-180.0, 180.0);
        const Point3d pos(pick.uniform(430.0, 770.0), pick.uniform(-220.0, 220.0), -local.min.z());
        const Pose3d pose{axis_angle(Point3d::UnitZ().eval(), yaw), pos};
        const Aabb box = bounding_box(mesh, pose);
        if (std::any_of(placed.begin(), placed.end(), [&](const Aabb& o) { return o.overlaps(box, 5.0); })) continue;
        placed.push_back(box);
        scene.objects.push_back({shape.category + "_" + std::to_string(scene.objects.size()), shape.mesh_ref, pose});
    }

    // Two cameras mounted a few centimetres off the flange, both looking
    // roughly along the end-effector +z axis.
    const Point3d tilt_a = Point3d(1.0, 0.3, 0.0).normalized();
    const Point3d tilt_b = Point3d(-0.4, 1.0, 0.0).normalized();
    scene.cameras.push_back({"rgbd", {axis_angle(tilt_a, 2.5), Point3d(0.0, -45.0, 65.0)}});
    scene.cameras.push_back({"polarization", {axis_angle(tilt_b, -3.0), Point3d(5.0, 50.0, 55.0)}});

    // Two orbit-like trajectories over the table.
    for (int t = 0; t < 2; ++t) {
        Trajectory traj;
        traj.name = "trajectory_" + std::to_string(t + 1);
        const std::size_t stops = 80 + rng.uniform_index(41);
        const double radius = rng.uniform(380.0, 460.0);
        const double az0 = rng.uniform(-180.0, 180.0);
        const double sweep = rng.uniform(200.0, 300.0) * (t == 0 ? 1.0 : -1.0);
        const double el0 = rng.uniform(35.0, 45.0), el1 = rng.uniform(50.0, 65.0);
        for (std::size_t k = 0; k < stops; ++k) {
            const double f = static_cast<double>(k) / static_cast<double>(stops - 1);
            const double el = el0 + (el1 - el0) * 0.5 * (1.0 - std::cos(std::numbers::pi * f));
            const double jitter = rng.uniform(-1.5, 1.5);
            traj.stops.push_back(orbit_stop(table_center, radius + rng.uniform(-15.0, 15.0),
                                            az0 + sweep * f + jitter, el));
        }
        scene.trajectories.push_back(std::move(traj));
    }

    // 4 x 3 calibration board with 30 mm pitch, flat on the table.
    auto& cal = scene.calibration;
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 4; ++i) cal.board_points.emplace_back(30.0 * (i - 1.5), 30.0 * (j - 1.0), 0.0);
    }
    cal.marker_to_base = {axis_angle(Point3d::UnitZ().eval(), rng.uniform(-20.0, 20.0)), table_center};
    for (int k = 0; k < 10; ++k) {
        cal.ee_stops.push_back(orbit_stop(cal.marker_to_base.translation, rng.uniform(380.0, 460.0),
                                          36.0 * k + rng.uniform(-10.0, 10.0), rng.uniform(40.0, 70.0)));
    }
    return scene;
}

}  // namespace phocal
