#include "phocal/serialize.hpp"

#include <algorithm>
#include <sstream>

#include "phocal/errors.hpp"
#include "phocal/io.hpp"
#include "phocal/text.hpp"

namespace phocal::io {

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing key '" + key + "'");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(where + ": non-finite number");
    return v;
}

std::string string_of(const json& j, const std::string& where) {
    if (!j.is_string()) throw ValidationError(where + ": expected a string");
    return j.get<std::string>();
}

const json& array_of(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array");
    return j;
}

json vec(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Point3d vec_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected [x, y, z]");
    return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

void check_frame_keys(const json& j, const std::string& where) {
    const std::string units = string_of(field(j, "units", where), where + ".units");
    if (units != kUnits) throw ValidationError(where + ": unit mismatch, expected '" + std::string(kUnits) + "', got '" + units + "'");
    const std::string conv = string_of(field(j, "convention", where), where + ".convention");
    if (conv != kConvention) {
        throw ValidationError(where + ": convention mismatch, expected '" + std::string(kConvention) + "', got '" + conv + "'");
    }
}

std::vector<Pose3d> poses_from(const json& j, const std::string& where) {
    std::vector<Pose3d> out;
    for (std::size_t i = 0; i < array_of(j, where).size(); ++i) {
        out.push_back(pose_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

json poses(std::span<const Pose3d> ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back(to_json(p));
    return a;
}

}  // namespace

json to_json(const RunManifest& m, bool with_timestamp) {
    json j;
    j["command"] = m.command;
    j["params"] = m.params;
    j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
    j["version"] = m.version;
    j["input_sha256"] = m.input_digests;
    if (with_timestamp) j["timestamp"] = m.timestamp;
    return j;
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.command = string_of(field(j, "command", "manifest"), "manifest.command");
        m.params = field(j, "params", "manifest").get<std::map<std::string, std::string>>();
        const json& seed = field(j, "seed", "manifest");
        if (!seed.is_null()) {
            if (!seed.is_number_unsigned()) throw ValidationError("manifest.seed: expected an unsigned integer");
            m.seed = seed.get<std::uint64_t>();
        }
        m.version = string_of(field(j, "version", "manifest"), "manifest.version");
        m.input_digests = field(j, "input_sha256", "manifest").get<std::map<std::string, std::string>>();
        if (j.contains("timestamp")) m.timestamp = string_of(j["timestamp"], "manifest.timestamp");
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
}

json to_json(const Pose3d& p) {
    const auto& q = p.rotation.quaternion();
    return {{"q", json::array({q.w(), q.x(), q.y(), q.z()})}, {"t", vec(p.translation)}};
}

Pose3d pose_from_json(const json& j, const std::string& where) {
    const json& q = field(j, "q", where);
    if (!q.is_array() || q.size() != 4) throw ValidationError(where + ".q: expected [w, x, y, z]");
    Rotationd r;
    try {
        r = rotation_from_wxyz(number(q[0], where), number(q[1], where), number(q[2], where),
                               number(q[3], where), where, 0);
    } catch (const ParseError&) {
        throw ValidationError(where + ": quaternion is not unit length");
    }
    return {r, vec_from(field(j, "t", where), where + ".t")};
}

json to_json(const SceneConfig& s) {
    json j;
    j["units"] = kUnits;
    j["convention"] = kConvention;
    j["objects"] = json::array();
    for (const auto& o : s.objects) {
        j["objects"].push_back({{"name", o.name}, {"mesh", o.mesh_ref}, {"obj_to_base", to_json(o.obj_to_base)}});
    }
    j["cameras"] = json::array();
    for (const auto& c : s.cameras) j["cameras"].push_back({{"name", c.name}, {"cam_to_ee", to_json(c.cam_to_ee)}});
    j["trajectories"] = json::array();
    for (const auto& t : s.trajectories) j["trajectories"].push_back({{"name", t.name}, {"stops", poses(t.stops)}});
    json board = json::array();
    for (const auto& p : s.calibration.board_points) board.push_back(vec(p));
    j["calibration"] = {{"board_points", board},
                        {"marker_to_base", to_json(s.calibration.marker_to_base)},
                        {"ee_stops", poses(s.calibration.ee_stops)}};
    return j;
}

SceneConfig scene_from_json(const json& j) {
    check_frame_keys(j, "scene");
    SceneConfig s;
    const json& objects = array_of(field(j, "objects", "scene"), "scene.objects");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string w = "scene.objects[" + std::to_string(i) + "]";
        s.objects.push_back({string_of(field(objects[i], "name", w), w + ".name"),
                             string_of(field(objects[i], "mesh", w), w + ".mesh"),
                             pose_from_json(field(objects[i], "obj_to_base", w), w + ".obj_to_base")});
    }
    const json& cameras = array_of(field(j, "cameras", "scene"), "scene.cameras");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const std::string w = "scene.cameras[" + std::to_string(i) + "]";
        s.cameras.push_back({string_of(field(cameras[i], "name", w), w + ".name"),
                             pose_from_json(field(cameras[i], "cam_to_ee", w), w + ".cam_to_ee")});
    }
    const json& trajs = array_of(field(j, "trajectories", "scene"), "scene.trajectories");
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const std::string w = "scene.trajectories[" + std::to_string(i) + "]";
        s.trajectories.push_back({string_of(field(trajs[i], "name", w), w + ".name"),
                                  poses_from(field(trajs[i], "stops", w), w + ".stops")});
    }
    const json& cal = field(j, "calibration", "scene");
    const json& board = array_of(field(cal, "board_points", "scene.calibration"), "scene.calibration.board_points");
    for (const auto& p : board) s.calibration.board_points.push_back(vec_from(p, "scene.calibration.board_points"));
    s.calibration.marker_to_base =
        pose_from_json(field(cal, "marker_to_base", "scene.calibration"), "scene.calibration.marker_to_base");
    s.calibration.ee_stops = poses_from(field(cal, "ee_stops", "scene.calibration"), "scene.calibration.ee_stops");
    validate(s);
    return s;
}

json to_json(const NoiseSpec& n) {
    return {{"obj_translation_noise_mm", n.obj_translation_noise_mm},
            {"obj_rotation_noise_deg", n.obj_rotation_noise_deg},
            {"handeye_target_rmse_mm", n.handeye_target_rmse_mm},
            {"seed", n.seed}};
}

NoiseSpec noise_from_json(const json& j) {
    NoiseSpec n;
    if (!j.is_object()) throw ValidationError("noise: expected an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "obj_translation_noise_mm") {
            n.obj_translation_noise_mm = number(value, "noise." + key);
        } else if (key == "obj_rotation_noise_deg") {
            n.obj_rotation_noise_deg = number(value, "noise." + key);
        } else if (key == "handeye_target_rmse_mm") {
            n.handeye_target_rmse_mm.clear();
            for (const auto& v : array_of(value, "noise." + key)) n.handeye_target_rmse_mm.push_back(number(v, "noise." + key));
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) throw ValidationError("noise.seed: expected an unsigned integer");
            n.seed = value.get<std::uint64_t>();
        } else {
            throw ValidationError("noise: unknown key '" + key + "'");
        }
    }
    validate(n);
    return n;
}

json to_json(const SimReport& r) {
    json j;
    j["units"] = kUnits;
    j["seed"] = r.seed;
    j["object_noise"] = json::array();
    for (const auto& o : r.object_noise) j["object_noise"].push_back({{"object", o.object}, {"perturbed", to_json(o.perturbed)}});
    j["cameras"] = json::array();
    for (const auto& c : r.cameras) {
        json cj = {{"camera", c.camera},
                   {"handeye_target_rmse_mm", c.handeye_target_rmse},
                   {"handeye_achieved_rmse_mm", c.handeye_achieved_rmse},
                   {"handeye_delta", to_json(c.handeye_delta)},
                   {"overall_rmse_mm", c.overall_rmse},
                   {"objects", json::array()}};
        for (const auto& o : c.objects) {
            cj["objects"].push_back({{"object", o.object}, {"mean_rmse_mm", o.mean_rmse}, {"frame_rmse_mm", o.frame_rmse}});
        }
        j["cameras"].push_back(std::move(cj));
    }
    return j;
}

SimReport sim_report_from_json(const json& j) {
    SimReport r;
    const std::string units = string_of(field(j, "units", "report"), "report.units");
    if (units != kUnits) throw ValidationError("report: unit mismatch, expected 'mm', got '" + units + "'");
    const json& seed = field(j, "seed", "report");
    if (!seed.is_number_unsigned()) throw ValidationError("report.seed: expected an unsigned integer");
    r.seed = seed.get<std::uint64_t>();
    for (const auto& o : array_of(field(j, "object_noise", "report"), "report.object_noise")) {
        r.object_noise.push_back({string_of(field(o, "object", "report.object_noise"), "report.object_noise.object"),
                                  pose_from_json(field(o, "perturbed", "report.object_noise"), "report.object_noise.perturbed")});
    }
    for (const auto& cj : array_of(field(j, "cameras", "report"), "report.cameras")) {
        const std::string w = "report.cameras";
        CameraSeries c;
        c.camera = string_of(field(cj, "camera", w), w + ".camera");
        c.handeye_target_rmse = number(field(cj, "handeye_target_rmse_mm", w), w);
        c.handeye_achieved_rmse = number(field(cj, "handeye_achieved_rmse_mm", w), w);
        c.handeye_delta = pose_from_json(field(cj, "handeye_delta", w), w + ".handeye_delta");
        c.overall_rmse = number(field(cj, "overall_rmse_mm", w), w);
        for (const auto& oj : array_of(field(cj, "objects", w), w + ".objects")) {
            ObjectSeries o;
            o.object = string_of(field(oj, "object", w), w + ".objects.object");
            o.mean_rmse = number(field(oj, "mean_rmse_mm", w), w);
            for (const auto& v : array_of(field(oj, "frame_rmse_mm", w), w)) o.frame_rmse.push_back(number(v, w));
            c.objects.push_back(std::move(o));
        }
        r.cameras.push_back(std::move(c));
    }
    return r;
}

std::string sim_report_csv(const SimReport& r) {
    std::ostringstream out;
    out << "camera,object,frame,rmse_mm\n";
    for (const auto& c : r.cameras) {
        for (const auto& o : c.objects) {
            for (std::size_t f = 0; f < o.frame_rmse.size(); ++f) {
                out << c.camera << ',' << o.object << ',' << f << ',' << format_double(o.frame_rmse[f]) << '\n';
            }
        }
    }
    return out.str();
}

json to_json(const IcpParams& p) {
    json j = {{"max_iterations", p.max_iterations},
              {"converge_translation_mm", p.converge_translation_mm},
              {"converge_rotation_deg", p.converge_rotation_deg},
              {"surface_samples", p.surface_samples}};
    // JSON has no infinity; an absent cap means "no cap".
    if (std::isfinite(p.max_correspondence_mm)) j["max_correspondence_mm"] = p.max_correspondence_mm;
    return j;
}

IcpParams icp_params_from_json(const json& j) {
    IcpParams p;
    if (!j.is_object()) throw ValidationError("icp params: expected an object");
    for (const auto& [key, value] : j.items()) {
        const std::string w = "icp params." + key;
        if (key == "max_iterations") {
            if (!value.is_number_integer()) throw ValidationError(w + ": expected an integer");
            p.max_iterations = value.get<int>();
        } else if (key == "converge_translation_mm") {
            p.converge_translation_mm = number(value, w);
        } else if (key == "converge_rotation_deg") {
            p.converge_rotation_deg = number(value, w);
        } else if (key == "max_correspondence_mm") {
            p.max_correspondence_mm = number(value, w);
        } else if (key == "surface_samples") {
            if (!value.is_number_unsigned()) throw ValidationError(w + ": expected an unsigned integer");
            p.surface_samples = value.get<std::size_t>();
        } else {
            throw ValidationError("icp params: unknown key '" + key + "'");
        }
    }
    validate(p);
    return p;
}

json to_json(const ApReport& r) {
    return {{"iou_threshold", r.iou_threshold},
            {"per_category_ap", r.per_category},
            {"undefined_categories", r.undefined},
            {"mean_ap", r.mean}};
}

json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset to line number.
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
        throw ParseError(source, line, "malformed JSON");
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace phocal::io
