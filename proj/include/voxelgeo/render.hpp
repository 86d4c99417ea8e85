#pragma once

#include <optional>

#include "voxelgeo/geometry.hpp"
#include "voxelgeo/image.hpp"
#include "voxelgeo/scene.hpp"

namespace voxelgeo {

/// Renders one depth map at image resolution by casting a ray through every
/// pixel center and keeping the nearest positive surface hit. Depth is the
/// Euclidean ray length (Ray) or the camera-frame z of the hit (Z); misses
/// are 0, the invalid sentinel.
DepthMap render_depth(const Scene& scene, const CameraParams& camera,
                      DepthConvention convention = DepthConvention::Ray);

namespace detail {

/// Smallest ray parameter s > eps with origin + s*dir on the primitive's
/// surface, if any. dir need not be normalized; s is in units of |dir|.
std::optional<double> ray_primitive_hit(const Primitive& primitive,
                                        const Vector3d& origin,
                                        const Vector3d& dir);

}  // namespace detail

}  // namespace voxelgeo
