#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phocal/handeye.hpp"
#include "phocal/mesh.hpp"

namespace phocal {

// Simulated annotation-quality evaluation. Objects sit in the robot base
// frame, cameras ride on the end-effector, and every frame compares
//
//   T_gt        = inv(T_cam->ee)     * inv(T_ee->base) * T_obj->base
//   T_annotated = inv(T^_cam->ee)    * inv(T_ee->base) * T^_obj->base
//
// where ^ marks the noisy annotation and calibration.

struct SceneObject {
    std::string name;
    std::string mesh_ref;  ///< "proc:<kind>:<params>" or an OBJ path
    Pose3d obj_to_base;
};

struct SceneCamera {
    std::string name;
    Pose3d cam_to_ee;
};

struct Trajectory {
    std::string name;
    std::vector<Pose3d> stops;  ///< T_ee->base
};

/// Hand-eye calibration target used to evaluate perturbed hand-eye matrices.
struct CalibrationTarget {
    std::vector<Point3d> board_points;  ///< marker frame
    Pose3d marker_to_base;
    std::vector<Pose3d> ee_stops;       ///< end-effector poses of the calibration views
};

struct SceneConfig {
    std::vector<SceneObject> objects;
    std::vector<SceneCamera> cameras;
    std::vector<Trajectory> trajectories;
    CalibrationTarget calibration;
};

struct NoiseSpec {
    double obj_translation_noise_mm = 0.20;
    double obj_rotation_noise_deg = 0.38;
    /// One target per camera, in scene camera order; 0 leaves that camera's
    /// hand-eye matrix unperturbed.
    std::vector<double> handeye_target_rmse_mm = {0.89, 0.83};
    std::uint64_t seed = 0;
};

struct HandEyeSearch {
    std::size_t budget = 10'000;   ///< RMSE evaluations before giving up
    double tolerance = 0.02;       ///< relative, on the target RMSE
    bool sweep_translation = true;
    bool sweep_rotation = true;
};

struct SimOptions {
    std::size_t samples_per_object = 2'000;
    /// Seed for the mesh surface samples, shared by all noise draws.
    std::uint64_t sample_seed = 0x5eed;
    HandEyeSearch search;
};

/// Throws ValidationError on empty object/camera/trajectory lists, empty
/// trajectories, or an unusable calibration target.
void validate(const SceneConfig& scene);
void validate(const NoiseSpec& spec);

/// Object annotation noise: two random unit directions, the first
/// scaled to the translation magnitude, the second the axis of a rotation by
/// the rotation magnitude. The error is applied in the object frame, so the
/// pose error is exactly (translation, rotation) for every draw.
Pose3d perturb_object_pose(const Pose3d& obj_to_base, const NoiseSpec& spec, RngStream& rng);

struct HandEyePerturbation {
    Pose3d cam_to_ee;           ///< perturbed T^_cam->ee
    Pose3d delta;               ///< applied on the left of the true matrix
    double rmse = 0.0;          ///< evaluated on the calibration views, mm
    std::size_t evaluations = 0;
};

/// Hand-eye views of a calibration target seen through `cam_to_ee`, noise free.
std::vector<HandEyeView> calibration_views(const CalibrationTarget& target, const Pose3d& cam_to_ee);

/// Tip-measured board for a calibration target (noise free).
MarkerBoard calibration_board(const CalibrationTarget& target);

/// Random small perturbations of T_cam->ee, each swept in magnitude, until one
/// evaluates to target_rmse within the relative tolerance. Throws
/// ValidationError for target_rmse <= 0 and DegenerateError when the budget
/// runs out.
HandEyePerturbation calibrate_handeye_perturbation(const Pose3d& cam_to_ee, const MarkerBoard& board,
                                                   std::span<const HandEyeView> views,
                                                   double target_rmse, RngStream& rng,
                                                   const HandEyeSearch& search = {});

/// Resolves mesh references and caches them. Procedural meshes are centered
/// on their bounding box; OBJ files keep their authored model frame and are
/// looked up relative to base_dir.
class MeshLibrary {
public:
    explicit MeshLibrary(std::filesystem::path base_dir = {}) : base_dir_(std::move(base_dir)) {}

    /// Throws ValidationError for unknown procedural kinds, bad parameters or
    /// unreadable files.
    const Mesh& resolve(const std::string& ref);

private:
    std::filesystem::path base_dir_;
    std::map<std::string, Mesh> cache_;
};

/// Builds a mesh from "proc:<kind>:<p1>,<p2>,..." (box, mug, cup, cylinder,
/// bottle, blade), centered on its bounding box.
Mesh procedural_mesh(const std::string& ref);

struct ObjectSeries {
    std::string object;
    std::vector<double> frame_rmse;  ///< mm, trajectories concatenated in order
    double mean_rmse = 0.0;
};

struct CameraSeries {
    std::string camera;
    double handeye_target_rmse = 0.0;
    double handeye_achieved_rmse = 0.0;
    Pose3d handeye_delta;
    std::vector<ObjectSeries> objects;
    double overall_rmse = 0.0;  ///< mean over objects
};

struct ObjectNoise {
    std::string object;
    Pose3d perturbed;
};

struct SimReport {
    std::uint64_t seed = 0;
    std::vector<ObjectNoise> object_noise;
    std::vector<CameraSeries> cameras;
};

/// Single noise draw: one perturbation per object and one calibrated hand-eye
/// perturbation per camera, RMSE over mesh samples for every frame.
SimReport simulate_annotation_error(const SceneConfig& scene, const NoiseSpec& spec,
                                    MeshLibrary& meshes, const SimOptions& options = {});

/// Per-camera overall RMSE of `draws` independent noise draws (seeds
/// spec.seed, spec.seed + 1, ...), and their mean.
struct RepeatedSim {
    std::vector<std::string> cameras;
    std::vector<std::vector<double>> per_draw;  ///< [draw][camera]
    std::vector<double> mean;                   ///< [camera]
};

RepeatedSim simulate_repeated(const SceneConfig& scene, const NoiseSpec& spec, MeshLibrary& meshes,
                              std::size_t draws, const SimOptions& options = {});

/// Known scene templates; currently "phocal-like".
std::vector<std::string> scene_templates();

/// Deterministic procedural scene: 5-8 non-overlapping objects on a table,
/// two cameras with distinct hand-eye transforms, two orbit trajectories of
/// 80-120 stops and a 12-point calibration board with 10 views.
SceneConfig generate_scene(const std::string& template_name, RngStream& rng);

/// Reported per-camera results of the physical-scene simulation, mm.
inline constexpr double kReferenceSimRmseRgbdMm = 0.84;
inline constexpr double kReferenceSimRmsePolarizationMm = 0.76;

}  // namespace phocal
