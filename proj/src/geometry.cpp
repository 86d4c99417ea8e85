#include "voxelgeo/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "voxelgeo/parallel.hpp"

namespace voxelgeo {

void CameraParams::validate() const {
    const Matrix3d rotation = extrinsics.topLeftCorner<3, 3>();
    const Matrix3d residual =
        rotation * rotation.transpose() - Matrix3d::Identity();
    if (residual.cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(rotation.determinant() - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "camera extrinsics: top-left 3x3 block is not a rotation");
    }
    if (feature_width < 1 || feature_height < 1 ||
        image_width < feature_width || image_height < feature_height) {
        throw std::invalid_argument(
            "camera resolutions must satisfy W >= W_f >= 1, H >= H_f >= 1");
    }
    if (!intrinsics.allFinite() || !extrinsics.allFinite()) {
        throw std::invalid_argument("camera matrices must be finite");
    }
}

Vector3d CameraParams::center() const {
    const Matrix3d rotation = extrinsics.topLeftCorner<3, 3>();
    const Vector3d translation = extrinsics.topRightCorner<3, 1>();
    return -rotation.transpose() * translation;
}

Matrix4d CameraParams::extrinsics_inverse() const {
    return extrinsics.inverse();
}

void VoxelGrid::validate() const {
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
        throw std::invalid_argument("voxel grid dims must be positive");
    }
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw std::invalid_argument("voxel size must be positive and finite");
    }
    if (!origin.allFinite()) {
        throw std::invalid_argument("voxel grid origin must be finite");
    }
}

ProjectionCache::ProjectionCache(const CameraParams& camera) {
    image_proj = camera.intrinsics * camera.extrinsics;
    Matrix3d scale = Matrix3d::Identity();
    scale(0, 0) = static_cast<double>(camera.feature_width) /
                  static_cast<double>(camera.image_width);
    scale(1, 1) = static_cast<double>(camera.feature_height) /
                  static_cast<double>(camera.image_height);
    feature_proj = scale * image_proj;
    cam_to_world = camera.extrinsics_inverse();
    k3_inverse = camera.intrinsics.leftCols<3>().inverse();
    k4 = camera.intrinsics.col(3);
    center = camera.center();
}

PixelCoord project_point(const CameraParams& camera, const Vector3d& point) {
    const ProjectionCache cache(camera);
    const Eigen::Vector3d h =
        cache.feature_proj * Eigen::Vector4d(point.x(), point.y(), point.z(), 1.0);
    if (std::abs(h.z()) < 1e-12) {
        throw std::domain_error("degenerate projection: point on camera plane");
    }
    return PixelCoord{h.x() / h.z(), h.y() / h.z(), h.z()};
}

namespace detail {

std::optional<std::array<int, 2>> nearest_pixel(double u, double v, int width,
                                                int height) {
    if (u < 0.0 || u >= width || v < 0.0 || v >= height) {
        return std::nullopt;
    }
    const int px = std::min(static_cast<int>(std::round(u)), width - 1);
    const int py = std::min(static_cast<int>(std::round(v)), height - 1);
    return std::array<int, 2>{px, py};
}

Vector3d pixel_ray_point(const ProjectionCache& cache, double u, double v,
                         double depth, DepthConvention convention) {
    // The camera-frame ray through pixel (u, v) is p(c) = c*dir + base with
    // c the third homogeneous coordinate.
    const Vector3d dir = cache.k3_inverse * Vector3d(u, v, 1.0);
    const Vector3d base = -cache.k3_inverse * cache.k4;
    if (convention == DepthConvention::Z) {
        if (std::abs(dir.z()) < 1e-15) {
            throw std::domain_error("pixel ray parallel to the image plane");
        }
        const double c = (depth - base.z()) / dir.z();
        return c * dir + base;
    }
    // Ray length: pick the c > 0 with ||c*dir + base|| = depth.
    const double a = dir.squaredNorm();
    const double b = 2.0 * dir.dot(base);
    const double k = base.squaredNorm() - depth * depth;
    const double disc = b * b - 4.0 * a * k;
    if (disc < 0.0) {
        throw std::domain_error("no ray point at the requested distance");
    }
    const double c = (-b + std::sqrt(disc)) / (2.0 * a);
    return c * dir + base;
}

}  // namespace detail

Vector3d backproject_pixel(const CameraParams& camera, double u, double v,
                           double depth, DepthConvention convention) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw std::invalid_argument("backproject_pixel: depth must be > 0");
    }
    const ProjectionCache cache(camera);
    const Vector3d cam_point =
        detail::pixel_ray_point(cache, u, v, depth, convention);
    const Eigen::Vector4d world =
        cache.cam_to_world *
        Eigen::Vector4d(cam_point.x(), cam_point.y(), cam_point.z(), 1.0);
    return world.head<3>();
}

std::vector<std::uint8_t> frustum_mask(const CameraParams& camera,
                                       const VoxelGrid& grid) {
    camera.validate();
    grid.validate();
    const ProjectionCache cache(camera);
    std::vector<std::uint8_t> mask(grid.num_voxels(), 0);
    const int ny = grid.dims[1];
    const int nz = grid.dims[2];
    parallel_for(grid.num_voxels(), [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const int ix = static_cast<int>(idx / (ny * nz));
            const int iy = static_cast<int>((idx / nz) % ny);
            const int iz = static_cast<int>(idx % nz);
            const PixelCoord pc = detail::project_unchecked(
                cache.feature_proj, grid.center(ix, iy, iz));
            mask[idx] = detail::in_frustum(pc, camera.feature_width,
                                           camera.feature_height)
                            ? 1
                            : 0;
        }
    });
    return mask;
}

}  // namespace voxelgeo
