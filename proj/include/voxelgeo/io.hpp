#pragma once

#include <string>
#include <vector>

#include "voxelgeo/detection.hpp"
#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"
#include "voxelgeo/occupancy.hpp"
#include "voxelgeo/pipeline.hpp"
#include "voxelgeo/scene.hpp"
#include "voxelgeo/tsdf.hpp"
#include "voxelgeo/volume.hpp"

namespace voxelgeo {

/// Raw contents of a VXG1 container: magic "VXG1\0\0\0\0", four u32 dims
/// [Nx, Ny, Nz, C], f64 origin xyz and voxel size, then float32 samples in
/// x-major, y, z, channel order. All fields little-endian.
struct RawVolume {
    VoxelGrid grid;
    int channels = 1;
    std::vector<float> data;
};

void write_vxg(const std::string& path, const VoxelGrid& grid, int channels,
               const std::vector<double>& data);
RawVolume read_vxg(const std::string& path);

/// Typed VXG1 wrappers: feature volumes use C channels, occupancy scores
/// C = 1, distance volumes C = 2 (channel 0 tsdf, channel 1 weight).
void write_vxg(const std::string& path, const FeatureVolume& volume);
void write_vxg(const std::string& path, const OccupancyScores& scores);
void write_vxg(const std::string& path, const TsdfVolume& volume);

/// PFM grayscale ("Pf"), little-endian via a negative scale field, rows
/// bottom-to-top. Invalid depth is 0.
void write_pfm(const std::string& path, const DepthMap& depth);
DepthMap read_pfm(const std::string& path);

/// Camera JSON: intrinsics (12 numbers, row-major 3x4), extrinsics (16,
/// row-major 4x4), image_size [W, H], feature_size [Wf, Hf].
CameraParams load_camera(const std::string& path);
void save_camera(const std::string& path, const CameraParams& camera);
/// All *.json cameras in a directory, sorted by filename.
std::vector<CameraParams> load_camera_dir(const std::string& dir);

/// Grid JSON: dims [Nx, Ny, Nz], voxel_size, origin [x, y, z].
VoxelGrid load_grid(const std::string& path);
void save_grid(const std::string& path, const VoxelGrid& grid);

/// Scene JSON: {"primitives": [{"type": "plane", "normal": [...],
/// "offset": o} | {"type": "box", "center": [...], "size": [...]} |
/// {"type": "sphere", "center": [...], "radius": r}]}.
Scene load_scene(const std::string& path);
void save_scene(const std::string& path, const Scene& scene);

/// Pipeline config JSON; missing keys keep the given defaults.
PipelineConfig load_config(const std::string& path, PipelineConfig defaults = {});
void save_config(const std::string& path, const PipelineConfig& config);

/// Detections and ground truth as JSON lines: center [x,y,z], size
/// [dx,dy,dz], yaw, label, and for detections score.
std::vector<Detection> load_detections(const std::string& path);
void save_detections(const std::string& path,
                     const std::vector<Detection>& dets);
std::vector<LabeledBox> load_ground_truth(const std::string& path);
void save_ground_truth(const std::string& path,
                       const std::vector<LabeledBox>& gts);

/// All *.pfm depth maps in a directory, sorted by filename (pairs with
/// load_camera_dir ordering).
std::vector<DepthMap> load_depth_dir(const std::string& dir);

/// Enum spellings used by JSON configs and command-line flags.
WeightingMode parse_weighting(const std::string& name);
DepthConvention parse_depth_convention(const std::string& name);
FeaturePattern parse_feature_pattern(const std::string& name);
AttachMode parse_attach_mode(const std::string& name);
std::string to_string(WeightingMode mode);
std::string to_string(DepthConvention convention);
std::string to_string(FeaturePattern pattern);
std::string to_string(AttachMode mode);

}  // namespace voxelgeo
