#include "voxelgeo/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "voxelgeo/parallel.hpp"

namespace voxelgeo {

namespace detail {

namespace {

constexpr double kRayEps = 1e-12;

std::optional<double> hit_plane(const Plane& plane, const Vector3d& origin,
                                const Vector3d& dir) {
    const double denom = plane.normal.dot(dir);
    if (std::abs(denom) < 1e-15) {
        return std::nullopt;
    }
    const double s = (plane.offset - plane.normal.dot(origin)) / denom;
    if (s <= kRayEps) {
        return std::nullopt;
    }
    return s;
}

std::optional<double> hit_sphere(const Sphere& sphere, const Vector3d& origin,
                                 const Vector3d& dir) {
    const Vector3d oc = origin - sphere.center;
    const double a = dir.squaredNorm();
    const double b = 2.0 * oc.dot(dir);
    const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double root = std::sqrt(disc);
    const double s0 = (-b - root) / (2.0 * a);
    if (s0 > kRayEps) {
        return s0;
    }
    const double s1 = (-b + root) / (2.0 * a);
    if (s1 > kRayEps) {
        return s1;
    }
    return std::nullopt;
}

std::optional<double> hit_box(const BoxPrim& box, const Vector3d& origin,
                              const Vector3d& dir) {
    double near = -std::numeric_limits<double>::infinity();
    double far = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double lo = box.center[k] - 0.5 * box.size[k];
        const double hi = box.center[k] + 0.5 * box.size[k];
        if (std::abs(dir[k]) < 1e-15) {
            if (origin[k] < lo || origin[k] > hi) {
                return std::nullopt;
            }
            continue;
        }
        double t0 = (lo - origin[k]) / dir[k];
        double t1 = (hi - origin[k]) / dir[k];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        near = std::max(near, t0);
        far = std::min(far, t1);
        if (near > far) {
            return std::nullopt;
        }
    }
    if (near > kRayEps) {
        return near;
    }
    if (far > kRayEps) {
        return far;
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> ray_primitive_hit(const Primitive& primitive,
                                        const Vector3d& origin,
                                        const Vector3d& dir) {
    if (const Plane* plane = std::get_if<Plane>(&primitive)) {
        return hit_plane(*plane, origin, dir);
    }
    if (const BoxPrim* box = std::get_if<BoxPrim>(&primitive)) {
        return hit_box(*box, origin, dir);
    }
    return hit_sphere(std::get<Sphere>(primitive), origin, dir);
}

}  // namespace detail

DepthMap render_depth(const Scene& scene, const CameraParams& camera,
                      DepthConvention convention) {
    scene.validate();
    camera.validate();
    const ProjectionCache cache(camera);
    const Matrix3d rotation_t =
        camera.extrinsics.topLeftCorner<3, 3>().transpose();
    // Pixel rays in the camera frame are p(s) = base + s*dir with
    // base = -K3^-1*k4 (the origin for the usual k4 = 0 intrinsics).
    const Vector3d base_cam = -cache.k3_inverse * cache.k4;
    const Vector3d base_world =
        (cache.cam_to_world *
         Eigen::Vector4d(base_cam.x(), base_cam.y(), base_cam.z(), 1.0))
            .head<3>();

    DepthMap depth(camera.image_width, camera.image_height);
    parallel_for(camera.image_height, [&](std::int64_t begin,
                                          std::int64_t end) {
        for (std::int64_t y = begin; y < end; ++y) {
            for (int x = 0; x < camera.image_width; ++x) {
                const Vector3d dir_cam =
                    cache.k3_inverse *
                    Vector3d(static_cast<double>(x), static_cast<double>(y),
                             1.0);
                const Vector3d dir_world = rotation_t * dir_cam;
                double best = std::numeric_limits<double>::infinity();
                for (const Primitive& primitive : scene.primitives) {
                    const auto s = detail::ray_primitive_hit(
                        primitive, base_world, dir_world);
                    if (s && *s < best) {
                        best = *s;
                    }
                }
                if (!std::isfinite(best)) {
                    continue;
                }
                const Vector3d hit_cam = base_cam + best * dir_cam;
                const double value = convention == DepthConvention::Ray
                                         ? hit_cam.norm()
                                         : hit_cam.z();
                if (value > 0.0) {
                    depth.at(x, static_cast<int>(y)) = value;
                }
            }
        }
    });
    return depth;
}

}  // namespace voxelgeo
