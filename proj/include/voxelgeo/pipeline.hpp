#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"
#include "voxelgeo/losses.hpp"
#include "voxelgeo/occupancy.hpp"
#include "voxelgeo/render.hpp"
#include "voxelgeo/scene.hpp"
#include "voxelgeo/tsdf.hpp"
#include "voxelgeo/volume.hpp"

namespace voxelgeo {

/// Synthetic feature-map families used when no real features exist:
/// Constant fills everything with 1, Ramp encodes pixel and channel
/// coordinates (sampling mistakes become visible), Random draws seeded
/// uniforms in [0, 1).
enum class FeaturePattern { Constant, Ramp, Random };

/// Everything a full run needs beyond the scene and cameras. theta empty
/// means "resolve by view count": 1 for a single view, 0 for multi-view.
/// truncate_distance <= 0 means the default 3 * voxel_size.
struct PipelineConfig {
    VoxelGrid grid;
    std::optional<double> theta;
    double truncate_distance = 0.0;
    WeightingMode weighting = WeightingMode::AngleDistance;
    DepthConvention depth_convention = DepthConvention::Ray;
    double nms_iou = 0.25;
    int recall_positions = 40;
    LossWeights loss_weights;
    int stride = 1;
    std::uint64_t seed = 0;
    int feature_channels = 8;
    FeaturePattern feature_pattern = FeaturePattern::Ramp;
    AttachMode attach_mode = AttachMode::Concat;

    void validate() const;
    double resolved_theta(std::size_t num_views) const;
    double resolved_truncate_distance() const;
};

/// 40x40x16 grid at 0.16 m, centered on the origin in x and y.
PipelineConfig indoor_config();
/// 216x248x12 grid at 0.32 m.
PipelineConfig outdoor_config();

/// Deterministic synthetic feature map; the seed matters only for Random.
FeatureMap make_feature_map(FeaturePattern pattern, int width, int height,
                            int channels, int view_id, std::uint64_t seed);

/// Reference occupancy scores from exactly rendered depths: render each
/// camera, back-project on the stride lattice, score, and accumulate.
OccupancyScores analytic_occupancy(const Scene& scene, const VoxelGrid& grid,
                                   const std::vector<CameraParams>& cameras,
                                   int stride,
                                   DepthConvention convention =
                                       DepthConvention::Ray);

/// Everything a run produces. aggregated is the plain multi-view mean
/// volume, attended the same volume after occupancy attention, output the
/// attended volume with the fused distance field attached. metrics_json is
/// a JSON report of per-stage timings, volume statistics, and invariant
/// checks.
struct PipelineResult {
    FeatureVolume aggregated;
    FeatureVolume attended;
    FeatureVolume output;
    TsdfVolume tsdf;
    OccupancyScores scores;
    std::vector<DepthMap> depths;
    std::string metrics_json;
};

/// Full run with caller-supplied feature maps (one per camera): render
/// depths, score occupancy, sample and aggregate features, apply attention,
/// fuse the distance field, attach it.
PipelineResult run_pipeline(const Scene& scene,
                            const std::vector<CameraParams>& cameras,
                            const std::vector<FeatureMap>& feature_maps,
                            const PipelineConfig& config);

/// Same run with feature maps synthesized from the config's pattern, channel
/// count, and seed.
PipelineResult run_pipeline(const Scene& scene,
                            const std::vector<CameraParams>& cameras,
                            const PipelineConfig& config);

/// Serializes a result into a directory: feature_volume.vxg, tsdf.vxg,
/// scores.vxg, metrics.json. Returns the metrics path.
std::string write_pipeline_outputs(const PipelineResult& result,
                                   const std::string& out_dir);

}  // namespace voxelgeo
