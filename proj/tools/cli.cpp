#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "phocal/anno_sim.hpp"
#include "phocal/errors.hpp"
#include "phocal/handeye.hpp"
#include "phocal/icp_bench.hpp"
#include "phocal/io.hpp"
#include "phocal/metrics.hpp"
#include "phocal/obj.hpp"
#include "phocal/pivot.hpp"
#include "phocal/registration.hpp"
#include "phocal/serialize.hpp"
#include "phocal/text.hpp"

namespace phocal::cli {

namespace {

using io::json;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::uint64_t fresh_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string pose_text(const Pose3d& p) {
    const auto& q = p.rotation.quaternion();
    std::ostringstream s;
    s << "q=(" << format_fixed(q.w(), 6) << ", " << format_fixed(q.x(), 6) << ", " << format_fixed(q.y(), 6)
      << ", " << format_fixed(q.z(), 6) << ") t=(" << format_fixed(p.translation.x(), 3) << ", "
      << format_fixed(p.translation.y(), 3) << ", " << format_fixed(p.translation.z(), 3) << ") mm";
    return s.str();
}

std::string vec_text(const Point3d& v) {
    return "(" + format_fixed(v.x(), 4) + ", " + format_fixed(v.y(), 4) + ", " + format_fixed(v.z(), 4) + ") mm";
}

/// Writes `body` with the embedded manifest plus the timestamped sidecar
/// `<path>.manifest.json`.
void write_report(const std::filesystem::path& path, json body, io::RunManifest manifest) {
    body["manifest"] = io::to_json(manifest, false);
    io::atomic_write(path, io::dump(body));
    manifest.timestamp = utc_now();
    std::filesystem::path side = path;
    side += ".manifest.json";
    io::atomic_write(side, io::dump(io::to_json(manifest, true)));
}

io::RunManifest make_manifest(std::string command, std::map<std::string, std::string> params,
                              std::optional<std::uint64_t> seed) {
    io::RunManifest m;
    m.command = std::move(command);
    m.params = std::move(params);
    m.seed = seed;
    return m;
}

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// --- pivot-calib -----------------------------------------------------------

struct PivotArgs {
    std::string poses;
    double min_diversity = PivotOptions{}.min_rotation_diversity_deg;
    bool all_pairs = false;
    std::string out;
};

int cmd_pivot(const PivotArgs& a, Context& c) {
    PivotMeasurementSet m{io::read_file(a.poses, io::read_poses)};
    PivotOptions opts;
    opts.min_rotation_diversity_deg = a.min_diversity;
    opts.all_pairs = a.all_pairs;
    const PivotResult r = solve_pivot(m, opts);
    const double var = tip_variance(m, r);

    c.out << "poses:          " << m.poses.size() << "\n"
          << "diversity:      " << format_fixed(rotation_diversity(m), 2) << " deg\n"
          << "tip offset:     " << vec_text(r.tip_offset) << " (end-effector frame)\n"
          << "pivot point:    " << vec_text(r.pivot_point) << " (base frame)\n"
          << "residual RMS:   " << format_fixed(r.residual_rms, 4) << " mm\n"
          << "tip variance:   " << format_fixed(var, 4) << " mm (physical reference "
          << format_fixed(kReferenceTipVarianceMm, 3) << " mm)\n";

    if (!a.out.empty()) {
        io::RunManifest man = make_manifest("pivot-calib",
                                            {{"min_rotation_diversity_deg", format_double(a.min_diversity)},
                                             {"all_pairs", a.all_pairs ? "true" : "false"}},
                                            std::nullopt);
        man.input_digests[a.poses] = io::file_sha256(a.poses);
        json body = {{"units", io::kUnits},
                     {"tip_offset", {r.tip_offset.x(), r.tip_offset.y(), r.tip_offset.z()}},
                     {"pivot_point", {r.pivot_point.x(), r.pivot_point.y(), r.pivot_point.z()}},
                     {"residual_rms_mm", r.residual_rms},
                     {"tip_variance_mm", var}};
        write_report(a.out, body, man);
    }
    return kExitOk;
}

// --- handeye -----------------------------------------------------------------

struct HandEyeArgs {
    std::string board;
    std::string views;
    double max_disagreement = HandEyeOptions{}.max_view_disagreement_deg;
    std::size_t board_points = BoardCheck{}.point_count;
    std::string out;
};

int cmd_handeye(const HandEyeArgs& a, Context& c) {
    const MarkerBoard board = io::read_file(a.board, io::read_board);
    const auto views = io::read_file(a.views, io::read_views);
    BoardCheck check;
    check.point_count = a.board_points;
    const AlignmentResult marker = marker_from_base(board, check);
    HandEyeOptions opts;
    opts.max_view_disagreement_deg = a.max_disagreement;
    const HandEyeResult r = solve_handeye(views, marker.pose, board, opts);

    c.out << "views:          " << views.size() << "\n"
          << "board fit RMS:  " << format_fixed(marker.residual_rms, 4) << " mm\n"
          << "T_cam->ee:      " << pose_text(r.cam_to_ee) << "\n"
          << "overall RMSE:   " << format_fixed(r.overall_rmse, 4) << " mm (physical references: RGBD "
          << format_fixed(kReferenceHandEyeRmseRgbdMm, 2) << " mm, polarization "
          << format_fixed(kReferenceHandEyeRmsePolarizationMm, 2) << " mm)\n";
    for (std::size_t i = 0; i < r.per_view_rmse.size(); ++i) {
        c.out << "  view " << i << ": " << format_fixed(r.per_view_rmse[i], 4) << " mm\n";
    }
    for (const auto v : r.flagged_views) {
        c.err << "warning: view " << v << " disagrees with the fused rotation by more than "
              << format_fixed(a.max_disagreement, 1) << " deg\n";
    }

    if (!a.out.empty()) {
        io::RunManifest man = make_manifest("handeye",
                                            {{"max_view_disagreement_deg", format_double(a.max_disagreement)},
                                             {"board_points", std::to_string(a.board_points)}},
                                            std::nullopt);
        man.input_digests[a.board] = io::file_sha256(a.board);
        man.input_digests[a.views] = io::file_sha256(a.views);
        json body = {{"units", io::kUnits},
                     {"convention", io::kConvention},
                     {"cam_to_ee", io::to_json(r.cam_to_ee)},
                     {"marker_to_base", io::to_json(marker.pose)},
                     {"per_view_rmse_mm", r.per_view_rmse},
                     {"overall_rmse_mm", r.overall_rmse},
                     {"flagged_views", r.flagged_views}};
        write_report(a.out, body, man);
    }
    return kExitOk;
}

// --- annotate ----------------------------------------------------------------

struct AnnotateArgs {
    std::string points;
    std::string mesh;
    std::string correspondences;
    std::string icp_params;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_annotate(const AnnotateArgs& a, Context& c) {
    const auto points = io::read_file(a.points, io::read_points);
    const MeshLoadResult mesh = load_mesh(a.mesh);
    for (const auto& w : mesh.warnings) c.err << "warning: " << w << "\n";
    const Correspondences keypoints = io::read_file(a.correspondences, io::read_correspondences);
    IcpParams params;
    if (!a.icp_params.empty()) params = io::icp_params_from_json(io::parse_json(io::slurp(a.icp_params), a.icp_params));
    validate(params);

    const std::uint64_t seed = a.seed.value_or(fresh_seed());
    RngStream rng(seed);
    const IcpTarget target(mesh.mesh, params.surface_samples, rng);
    const AnnotationResult r = annotate_object(keypoints, points, target, params);

    c.out << "mesh:           " << mesh.mesh.vertices.size() << " vertices, " << mesh.mesh.triangles.size()
          << " triangles\n"
          << "keypoint fit:   " << format_fixed(r.initial.residual_rms, 4) << " mm RMS\n"
          << "initial pose:   " << pose_text(r.initial.pose) << "\n"
          << "refined pose:   " << pose_text(r.refined.pose) << "\n"
          << "ICP:            " << r.refined.iterations << " iterations, "
          << (r.refined.converged ? "converged" : "NOT converged") << ", mean surface distance "
          << format_fixed(r.refined.mean_distance, 4) << " mm\n";
    if (!r.refined.converged) c.err << "warning: ICP did not converge within " << params.max_iterations << " iterations\n";

    if (!a.out.empty()) {
        io::RunManifest man = make_manifest("annotate", {}, seed);
        const json pj = io::to_json(params);
        for (const auto& [k, v] : pj.items()) man.params[k] = v.dump();
        man.input_digests[a.points] = io::file_sha256(a.points);
        man.input_digests[a.mesh] = io::file_sha256(a.mesh);
        man.input_digests[a.correspondences] = io::file_sha256(a.correspondences);
        if (!a.icp_params.empty()) man.input_digests[a.icp_params] = io::file_sha256(a.icp_params);
        json body = {{"units", io::kUnits},
                     {"convention", io::kConvention},
                     {"initial_pose", io::to_json(r.initial.pose)},
                     {"keypoint_rms_mm", r.initial.residual_rms},
                     {"refined_pose", io::to_json(r.refined.pose)},
                     {"iterations", r.refined.iterations},
                     {"converged", r.refined.converged},
                     {"mean_distance_mm", r.refined.mean_distance},
                     {"rms_history_mm", r.refined.rms_history}};
        write_report(a.out, body, man);
    }
    return kExitOk;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
    std::string scene;
    std::string templ;
    std::string noise;
    std::optional<std::uint64_t> seed;
    std::size_t draws = 25;
    std::size_t samples = SimOptions{}.samples_per_object;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, Context& c) {
    if (a.scene.empty() == a.templ.empty()) {
        throw ValidationError("simulate: give exactly one of a scene file or --template");
    }
    const std::uint64_t seed = a.seed.value_or(fresh_seed());
    io::RunManifest man = make_manifest("simulate", {}, seed);

    SceneConfig scene;
    std::filesystem::path base_dir;
    if (!a.templ.empty()) {
        RngStream rng(seed);
        scene = generate_scene(a.templ, rng);
        man.params["template"] = a.templ;
    } else {
        scene = io::scene_from_json(io::parse_json(io::slurp(a.scene), a.scene));
        base_dir = std::filesystem::path(a.scene).parent_path();
        man.input_digests[a.scene] = io::file_sha256(a.scene);
    }

    NoiseSpec spec;
    if (!a.noise.empty()) {
        spec = io::noise_from_json(io::parse_json(io::slurp(a.noise), a.noise));
        man.input_digests[a.noise] = io::file_sha256(a.noise);
    }
    spec.seed = seed;
    if (a.noise.empty() && spec.handeye_target_rmse_mm.size() != scene.cameras.size()) {
        throw ValidationError("simulate: scene has " + std::to_string(scene.cameras.size()) +
                              " cameras; pass --noise with one hand-eye target per camera");
    }
    if (a.draws == 0) throw ValidationError("simulate: --draws must be positive");

    SimOptions opts;
    opts.samples_per_object = a.samples;
    man.params["draws"] = std::to_string(a.draws);
    man.params["samples_per_object"] = std::to_string(a.samples);
    man.params["noise"] = io::to_json(spec).dump();

    MeshLibrary meshes(base_dir);
    const SimReport report = simulate_annotation_error(scene, spec, meshes, opts);
    const RepeatedSim repeated = simulate_repeated(scene, spec, meshes, a.draws, opts);

    std::vector<std::pair<std::string, double>> single, mean;
    for (std::size_t i = 0; i < report.cameras.size(); ++i) {
        single.emplace_back(report.cameras[i].camera + " single draw", report.cameras[i].overall_rmse);
        mean.emplace_back(report.cameras[i].camera + " " + std::to_string(a.draws) + "-draw mean", repeated.mean[i]);
    }
    auto rows = single;
    rows.insert(rows.end(), mean.begin(), mean.end());

    c.out << "seed " << seed << ", " << scene.objects.size() << " objects, " << scene.cameras.size()
          << " cameras, " << scene.trajectories.size() << " trajectories\n";
    for (const auto& cam : report.cameras) {
        c.out << "  " << cam.camera << ": hand-eye perturbation " << format_fixed(cam.handeye_achieved_rmse, 3)
              << " mm (target " << format_fixed(cam.handeye_target_rmse, 3) << ")\n";
    }
    c.out << "\n" << annotation_comparison_table(rows);
    c.out << "physical-scene values: RGBD " << format_fixed(kReferenceSimRmseRgbdMm, 2) << " mm, polarization "
          << format_fixed(kReferenceSimRmsePolarizationMm, 2) << " mm\n";

    if (!a.out.empty()) {
        json body = io::to_json(report);
        json rep = {{"cameras", repeated.cameras}, {"per_draw", repeated.per_draw}, {"mean", repeated.mean}};
        body["repeated"] = rep;
        body["scene"] = io::to_json(scene);
        write_report(a.out, body, man);
        std::filesystem::path csv = a.out;
        csv.replace_extension(".csv");
        io::atomic_write(csv, "# manifest " + io::to_json(man, false).dump() + "\n" + io::sim_report_csv(report));
    }
    return kExitOk;
}

// --- icp-bench ---------------------------------------------------------------

struct BenchArgs {
    std::uint64_t seed = RecoveryProtocol{}.seed;
    std::size_t samples = RecoveryProtocol{}.icp.surface_samples;
    std::string out;
};

int cmd_icp_bench(const BenchArgs& a, Context& c) {
    RecoveryProtocol p;
    p.seed = a.seed;
    p.icp.surface_samples = a.samples;
    const RecoveryReport r = run_recovery(recovery_meshes(), p);
    c.out << "mesh            initial [mm / deg]     recovered [mm / deg]   iterations\n";
    for (const auto& t : r.trials) {
        std::string name = t.mesh;
        name.resize(16, ' ');
        c.out << name << format_fixed(t.initial_error.translation_mm, 3) << " / "
              << format_fixed(t.initial_error.rotation_deg, 3) << "          "
              << format_fixed(t.final_error.translation_mm, 3) << " / " << format_fixed(t.final_error.rotation_deg, 3)
              << "          " << t.iterations << (t.converged ? "" : " (not converged)") << "\n";
    }
    c.out << "mean recovered: " << format_fixed(r.mean_final.translation_mm, 3) << " mm, "
          << format_fixed(r.mean_final.rotation_deg, 3) << " deg\n"
          << "reported:       " << format_fixed(kReferenceIcpTranslationMm, 2) << " mm, "
          << format_fixed(kReferenceIcpRotationDeg, 2) << " deg\n";

    if (!a.out.empty()) {
        io::RunManifest man = make_manifest("icp-bench", {{"surface_samples", std::to_string(a.samples)}}, a.seed);
        json trials = json::array();
        for (const auto& t : r.trials) {
            trials.push_back({{"mesh", t.mesh},
                              {"initial_translation_mm", t.initial_error.translation_mm},
                              {"initial_rotation_deg", t.initial_error.rotation_deg},
                              {"final_translation_mm", t.final_error.translation_mm},
                              {"final_rotation_deg", t.final_error.rotation_deg},
                              {"iterations", t.iterations},
                              {"converged", t.converged}});
        }
        json body = {{"units", io::kUnits},
                     {"trials", trials},
                     {"mean_final_translation_mm", r.mean_final.translation_mm},
                     {"mean_final_rotation_deg", r.mean_final.rotation_deg}};
        write_report(a.out, body, man);
    }
    return kExitOk;
}

// --- eval-iou ----------------------------------------------------------------

struct IouArgs {
    std::string gt;
    std::string pred;
    double threshold = 0.5;
    std::string out;
};

int cmd_eval_iou(const IouArgs& a, Context& c) {
    DetectionSet set;
    for (auto& d : io::read_file(a.gt, io::read_boxes_csv)) set.ground_truth.push_back({d.category, d.box});
    set.predictions = io::read_file(a.pred, io::read_boxes_csv);
    const ApReport r = average_precision(set, a.threshold);

    c.out << "3D IoU threshold " << format_fixed(a.threshold, 2) << "\n";
    for (const auto& [cat, ap] : r.per_category) {
        std::string name = cat;
        name.resize(std::max<std::size_t>(name.size(), 12), ' ');
        c.out << "  " << name << format_fixed(ap, 4) << "\n";
    }
    for (const auto& u : r.undefined) c.out << "  " << u << ": no ground truth, AP undefined (excluded)\n";
    c.out << "mean AP " << format_fixed(r.mean, 4) << "\n";

    if (!a.out.empty()) {
        io::RunManifest man = make_manifest("eval-iou", {{"threshold", format_double(a.threshold)}}, std::nullopt);
        man.input_digests[a.gt] = io::file_sha256(a.gt);
        man.input_digests[a.pred] = io::file_sha256(a.pred);
        write_report(a.out, io::to_json(r), man);
    }
    return kExitOk;
}

// --- gen-scene ---------------------------------------------------------------

struct GenArgs {
    std::string templ = "phocal-like";
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_gen_scene(const GenArgs& a, Context& c) {
    const std::uint64_t seed = a.seed.value_or(fresh_seed());
    RngStream rng(seed);
    const SceneConfig scene = generate_scene(a.templ, rng);
    json body = io::to_json(scene);
    const io::RunManifest man = make_manifest("gen-scene", {{"template", a.templ}}, seed);
    if (a.out.empty()) {
        body["manifest"] = io::to_json(man, false);
        c.out << io::dump(body);
    } else {
        write_report(a.out, body, man);
        c.out << "wrote " << a.out << " (" << scene.objects.size() << " objects, seed " << seed << ")\n";
    }
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robot-assisted pose annotation toolkit: calibration, annotation and error simulation"};
    app.require_subcommand(1);
    Context ctx{out, err};
    std::function<int()> action;

    PivotArgs pivot;
    auto* sp = app.add_subcommand("pivot-calib", "Tool-tip calibration from end-effector poses around a fixed tip");
    sp->add_option("poses", pivot.poses, "Pose file (units=mm, convention header)")->required()->check(CLI::ExistingFile);
    sp->add_option("--min-diversity", pivot.min_diversity, "Minimum rotation spread, degrees");
    sp->add_flag("--all-pairs", pivot.all_pairs, "Stack every pose pair");
    sp->add_option("--out", pivot.out, "JSON report path");
    sp->callback([&] { action = [&] { return cmd_pivot(pivot, ctx); }; });

    HandEyeArgs he;
    auto* sh = app.add_subcommand("handeye", "Hand-eye calibration from a tip-measured board and camera views");
    sh->add_option("board", he.board, "Board file: board xyz, measured xyz per row")->required()->check(CLI::ExistingFile);
    sh->add_option("views", he.views, "View file: ee pose and marker-in-camera pose per row")->required()->check(CLI::ExistingFile);
    sh->add_option("--max-disagreement", he.max_disagreement, "Flag views whose rotation differs more, degrees");
    sh->add_option("--board-points", he.board_points, "Expected board point count");
    sh->add_option("--out", he.out, "JSON report path");
    sh->callback([&] { action = [&] { return cmd_handeye(he, ctx); }; });

    AnnotateArgs an;
    auto* sa = app.add_subcommand("annotate", "Object pose from keypoint correspondences refined by ICP");
    sa->add_option("points", an.points, "Tip-measured surface points (base frame)")->required()->check(CLI::ExistingFile);
    sa->add_option("mesh", an.mesh, "Object mesh (OBJ)")->required()->check(CLI::ExistingFile);
    sa->add_option("correspondences", an.correspondences, "Keypoints: model xyz, measured xyz")->required()->check(CLI::ExistingFile);
    sa->add_option("--icp-params", an.icp_params, "JSON file with ICP parameters")->check(CLI::ExistingFile);
    sa->add_option("--seed", an.seed, "Seed for the mesh surface samples");
    sa->add_option("--out", an.out, "JSON report path");
    sa->callback([&] { action = [&] { return cmd_annotate(an, ctx); }; });

    SimulateArgs sim;
    auto* ss = app.add_subcommand("simulate", "Annotation-error simulation with noisy object poses and hand-eye");
    ss->add_option("scene", sim.scene, "Scene JSON file")->check(CLI::ExistingFile);
    ss->add_option("--template", sim.templ, "Generate the scene from a template instead (phocal-like)");
    ss->add_option("--noise", sim.noise, "Noise JSON (object noise, per-camera hand-eye targets)")->check(CLI::ExistingFile);
    ss->add_option("--seed", sim.seed, "Noise seed (also the template seed)");
    ss->add_option("--draws", sim.draws, "Noise draws for the repeated mean");
    ss->add_option("--samples", sim.samples, "Surface samples per object");
    ss->add_option("--out", sim.out, "JSON report path; the CSV goes next to it");
    ss->callback([&] { action = [&] { return cmd_simulate(sim, ctx); }; });

    BenchArgs bench;
    auto* sb = app.add_subcommand("icp-bench", "Tip + ICP pose recovery benchmark on procedural objects");
    sb->add_option("--seed", bench.seed, "Protocol seed");
    sb->add_option("--samples", bench.samples, "ICP target surface samples");
    sb->add_option("--out", bench.out, "JSON report path");
    sb->callback([&] { action = [&] { return cmd_icp_bench(bench, ctx); }; });

    IouArgs iou;
    auto* si = app.add_subcommand("eval-iou", "Per-category AP at a 3D IoU threshold");
    si->add_option("gt", iou.gt, "Ground-truth box CSV")->required()->check(CLI::ExistingFile);
    si->add_option("pred", iou.pred, "Predicted box CSV")->required()->check(CLI::ExistingFile);
    si->add_option("--threshold", iou.threshold, "IoU threshold in (0, 1)")->required();
    si->add_option("--out", iou.out, "JSON report path");
    si->callback([&] { action = [&] { return cmd_eval_iou(iou, ctx); }; });

    GenArgs gen;
    auto* sg = app.add_subcommand("gen-scene", "Write a procedural scene");
    sg->add_option("--template", gen.templ, "Template name");
    sg->add_option("--seed", gen.seed, "Scene seed");
    sg->add_option("--out", gen.out, "Scene JSON path (stdout if omitted)");
    sg->callback([&] { action = [&] { return cmd_gen_scene(gen, ctx); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        return action ? action() : kExitValidation;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateError& e) {
        err << "degenerate configuration: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitDegenerate;
    }
}

}  // namespace phocal::cli
