#include "voxelgeo/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace voxelgeo {

void Scene::validate() const {
    if (primitives.empty()) {
        throw std::invalid_argument("scene must contain at least one primitive");
    }
    for (const Primitive& primitive : primitives) {
        if (const Plane* plane = std::get_if<Plane>(&primitive)) {
            if (std::abs(plane->normal.norm() - 1.0) > 1e-9 ||
                !std::isfinite(plane->offset)) {
                throw std::invalid_argument("plane normal must be unit length");
            }
        } else if (const BoxPrim* box = std::get_if<BoxPrim>(&primitive)) {
            if (!(box->size.minCoeff() > 0.0) || !box->size.allFinite() ||
                !box->center.allFinite()) {
                throw std::invalid_argument("box extents must be positive");
            }
        } else if (const Sphere* sphere = std::get_if<Sphere>(&primitive)) {
            if (!(sphere->radius > 0.0) || !std::isfinite(sphere->radius) ||
                !sphere->center.allFinite()) {
                throw std::invalid_argument("sphere radius must be positive");
            }
        }
    }
}

double primitive_sdf(const Primitive& primitive, const Vector3d& point) {
    if (const Plane* plane = std::get_if<Plane>(&primitive)) {
        return plane->normal.dot(point) - plane->offset;
    }
    if (const BoxPrim* box = std::get_if<BoxPrim>(&primitive)) {
        const Vector3d q =
            (point - box->center).cwiseAbs() - 0.5 * box->size;
        const Vector3d outside = q.cwiseMax(0.0);
        const double inside = std::min(q.maxCoeff(), 0.0);
        return outside.norm() + inside;
    }
    const Sphere& sphere = std::get<Sphere>(primitive);
    return (point - sphere.center).norm() - sphere.radius;
}

double analytic_sdf(const Scene& scene, const Vector3d& point) {
    double best = std::numeric_limits<double>::infinity();
    for (const Primitive& primitive : scene.primitives) {
        best = std::min(best, primitive_sdf(primitive, point));
    }
    return best;
}

}  // namespace voxelgeo
