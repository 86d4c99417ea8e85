#pragma once

#include <cstdint>
#include <vector>

#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"

namespace voxelgeo {

/// One view's contribution to the feature volume: per-voxel feature vectors
/// sampled at the voxel centers' projections, plus the frustum mask. Values
/// are 0-vectors wherever the mask is 0.
struct ViewSample {
    VoxelGrid grid;
    int channels = 1;
    int view_id = 0;
    std::vector<double> values;      // num_voxels * channels, channel fastest
    std::vector<std::uint8_t> mask;  // num_voxels
};

/// Dense voxel volume of C-dimensional feature vectors. Layout is x-major
/// (x slowest, then y, then z) with the channel index fastest:
/// data[linear_index(x,y,z)*channels + c]. coverage counts the views whose
/// frustum contains each voxel; data is the 0-vector where coverage is 0.
struct FeatureVolume {
    VoxelGrid grid;
    int channels = 1;
    std::vector<double> data;
    std::vector<int> coverage;
};

/// Samples one feature map into a per-view volume: each voxel center is
/// projected to feature-map coordinates and takes the nearest pixel's
/// C-vector (ties round half away from zero). Out-of-frustum voxels get the
/// 0-vector and mask 0; nothing is ever clamped to border pixels.
/// Throws std::invalid_argument when the map shape differs from the
/// camera's feature resolution.
ViewSample sample_view(const FeatureMap& feature_map,
                       const CameraParams& camera, const VoxelGrid& grid);

/// Masked per-voxel mean across views: data[j] = sum_i V_i[j]*M_i[j] /
/// sum_i M_i[j], with the 0-vector and coverage 0 where no view covers the
/// voxel. Views are summed in ascending view_id order so the result is
/// bit-reproducible under input permutation.
/// Throws std::invalid_argument on an empty list or mismatched shapes.
FeatureVolume aggregate(const std::vector<ViewSample>& views);

}  // namespace voxelgeo
