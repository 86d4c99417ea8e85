#pragma once

#include <variant>
#include <vector>

#include "voxelgeo/geometry.hpp"

namespace voxelgeo {

/// Half-space boundary dot(normal, p) = offset; the negative side
/// (dot(normal, p) < offset) is inside.
struct Plane {
    Vector3d normal = Vector3d::UnitZ();
    double offset = 0.0;
};

/// Axis-aligned solid box given by center and full extents.
struct BoxPrim {
    Vector3d center = Vector3d::Zero();
    Vector3d size = Vector3d::Ones();
};

struct Sphere {
    Vector3d center = Vector3d::Zero();
    double radius = 1.0;
};

using Primitive = std::variant<Plane, BoxPrim, Sphere>;

/// Analytic scene: union of solid primitives with closed-form signed
/// distances, used to render exact depth maps and ground-truth fields.
struct Scene {
    std::vector<Primitive> primitives;

    /// Throws std::invalid_argument on an empty scene, non-unit plane
    /// normals, non-positive box extents, or non-positive sphere radii.
    void validate() const;
};

/// Signed distance from the point to the primitive's surface, negative
/// inside.
double primitive_sdf(const Primitive& primitive, const Vector3d& point);

/// Signed distance to the nearest surface of the scene: min over primitives,
/// so the value is negative inside any primitive.
double analytic_sdf(const Scene& scene, const Vector3d& point);

}  // namespace voxelgeo
