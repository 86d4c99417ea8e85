#pragma once

#include <vector>

#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"
#include "voxelgeo/volume.hpp"

namespace voxelgeo {

/// Per-sample weight for TSDF integration: cos(angle between viewing ray and
/// surface normal) divided by distance to the camera, or constant 1.
enum class WeightingMode { AngleDistance, Unit };

/// How the fused distance field is combined with a feature volume.
enum class AttachMode { Concat, Add, Multiply };

/// Truncated signed distance volume with per-voxel fusion weights. tsdf
/// stays in [-1, 1]; unobserved voxels keep the initial (tsdf, weight) =
/// (1, 0), so weight distinguishes "far in front" from "never seen".
struct TsdfVolume {
    VoxelGrid grid;
    double truncate_distance = 0.0;
    std::vector<double> tsdf;
    std::vector<double> weight;

    TsdfVolume() = default;
    /// Initializes tsdf to 1 and weight to 0 everywhere. Throws
    /// std::invalid_argument when d <= 0 or the grid is invalid.
    TsdfVolume(const VoxelGrid& g, double d);
};

/// Folds one depth map into the volume. Each voxel center is projected at
/// image resolution; the nearest pixel's depth D gives
/// sdf = D - ||C_j - camera_center|| (positive in front of the surface,
/// negative behind it), truncated to t = clamp(sdf/d, -1, 1), and merged as
/// the running weighted mean T <- (W*T + w*t)/(W + w), W <- W + w. Voxels
/// behind the camera, outside the image, or hitting an invalid depth sample
/// are skipped, as are samples whose weight is 0. With z-convention depth
/// maps the sample is converted to ray length along its pixel's ray first.
/// Throws std::invalid_argument on dimension mismatch.
void integrate_view(TsdfVolume& volume, const DepthMap& depth,
                    const CameraParams& camera, WeightingMode weighting,
                    DepthConvention convention = DepthConvention::Ray);

/// Fresh volume (tsdf 1, weight 0) folded over all views in order.
/// Throws std::invalid_argument on an empty or length-mismatched input.
TsdfVolume fuse(const std::vector<DepthMap>& depths,
                const std::vector<CameraParams>& cameras,
                const VoxelGrid& grid, double truncate_distance,
                WeightingMode weighting,
                DepthConvention convention = DepthConvention::Ray);

/// Combines a feature volume with a fused distance field. Concat appends the
/// tsdf as channel C (input channels copied bit-exactly); Add and Multiply
/// combine every channel with the tsdf element-wise. coverage is carried
/// through. Throws std::invalid_argument on mismatched grids.
FeatureVolume attach_tsdf(const FeatureVolume& volume, const TsdfVolume& tsdf,
                          AttachMode mode = AttachMode::Concat);

}  // namespace voxelgeo
