#pragma once

#include <vector>

#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"
#include "voxelgeo/volume.hpp"

namespace voxelgeo {

/// World-frame points back-projected from one view's depth map.
struct PointCloud {
    std::vector<Vector3d> points;
    int source_view = 0;
};

/// Per-voxel occupancy evidence accumulated across views. Entries are
/// non-negative; a single view contributes at most 1 in total.
struct OccupancyScores {
    VoxelGrid grid;
    std::vector<double> data;
};

/// Back-projects every valid depth pixel on the stride lattice (pixels
/// (x, y) with x and y multiples of stride) to a world point. Pixels with
/// depth <= 0 or non-finite depth are skipped. The convention states
/// whether depth values are camera-frame z or Euclidean ray length.
/// Throws std::invalid_argument on dimension mismatch or stride < 1.
PointCloud depth_to_cloud(const DepthMap& depth, const CameraParams& camera,
                          int stride,
                          DepthConvention convention = DepthConvention::Z);

/// Fraction of the cloud contained in each voxel: count of points with
/// origin + i*voxel_size <= p < origin + (i+1)*voxel_size component-wise,
/// divided by the total cloud size including points outside the grid.
/// Half-open bounds shared between neighbors make containment a partition,
/// so each point lands in at most one voxel. Empty cloud gives all zeros.
std::vector<double> score_view(const PointCloud& cloud, const VoxelGrid& grid);

/// Element-wise sum of per-view score volumes in ascending view order.
/// Throws std::invalid_argument on an empty list or mismatched sizes.
OccupancyScores accumulate_scores(const std::vector<std::vector<double>>& per_view,
                                  const VoxelGrid& grid);

/// Scales each voxel's feature vector by (S[j] + theta); coverage is carried
/// through unchanged. Throws std::invalid_argument on mismatched grids or
/// theta < 0.
FeatureVolume apply_attention(const FeatureVolume& volume,
                              const OccupancyScores& scores, double theta);

}  // namespace voxelgeo
