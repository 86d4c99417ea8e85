#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace voxelgeo {

using Matrix34d = Eigen::Matrix<double, 3, 4>;
using Eigen::Matrix3d;
using Eigen::Matrix4d;
using Eigen::Vector3d;

/// How a depth value parameterizes the point along a pixel's viewing ray:
/// Euclidean distance from the camera center (Ray) or camera-frame z (Z).
enum class DepthConvention { Ray, Z };

/// Pinhole camera: 3x4 intrinsics (pixels), 4x4 world-to-camera extrinsics
/// (meters), plus image and feature-map resolutions. u = (W_f/W) * x', where
/// [x' y' z']^T = K * E * [p 1]^T; the same camera projects at image
/// resolution (scale 1) or feature resolution depending on the operation.
struct CameraParams {
    Matrix34d intrinsics = Matrix34d::Zero();
    Matrix4d extrinsics = Matrix4d::Identity();
    int image_width = 0;
    int image_height = 0;
    int feature_width = 0;
    int feature_height = 0;

    /// Throws std::invalid_argument unless the extrinsics' rotation block is
    /// orthonormal with det +1 (tolerance 1e-6) and W >= W_f >= 1,
    /// H >= H_f >= 1.
    void validate() const;

    /// Camera center in world coordinates, -R^T t from the extrinsics.
    Vector3d center() const;

    /// World-to-camera inverse (camera-to-world), computed numerically.
    Matrix4d extrinsics_inverse() const;
};

/// Dense axis-aligned voxel grid. Voxel (i,j,k) is centered at
/// origin + (index + 0.5) * voxel_size component-wise.
struct VoxelGrid {
    std::array<int, 3> dims{0, 0, 0};
    double voxel_size = 0.0;
    Vector3d origin = Vector3d::Zero();

    void validate() const;

    std::int64_t num_voxels() const {
        return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    }
    /// x-major layout: x slowest, then y, then z.
    std::int64_t linear_index(int ix, int iy, int iz) const {
        return (static_cast<std::int64_t>(ix) * dims[1] + iy) * dims[2] + iz;
    }
    Vector3d center(int ix, int iy, int iz) const {
        return origin + Vector3d(ix + 0.5, iy + 0.5, iz + 0.5) * voxel_size;
    }
    bool same_shape(const VoxelGrid& other) const {
        return dims == other.dims;
    }
};

/// Projection of a world point: feature-map pixel coordinates plus the third
/// homogeneous coordinate before division (camera depth).
struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
    double cam_depth = 0.0;
};

/// Precomputed per-camera matrices for tight projection loops.
struct ProjectionCache {
    Matrix34d image_proj;    // K * E, image resolution
    Matrix34d feature_proj;  // diag(W_f/W, H_f/H, 1) * K * E
    Matrix4d cam_to_world;
    Matrix3d k3_inverse;     // inverse of the left 3x3 intrinsics block
    Vector3d k4;             // fourth intrinsics column
    Vector3d center;

    explicit ProjectionCache(const CameraParams& camera);
};

/// Projects a world point to feature-map pixel coordinates: the pinhole
/// model with the feature/image scale applied before K. cam_depth is the
/// third homogeneous coordinate before the perspective division.
/// Returns coordinates even outside the image; masking is separate.
/// Throws std::domain_error when |cam_depth| < 1e-12 (point on the camera
/// plane).
PixelCoord project_point(const CameraParams& camera, const Vector3d& point);

/// Inverse of project_point at image resolution (scale 1): returns the world
/// point on pixel (u, v)'s viewing ray at the given depth. The depth is
/// camera-frame z (Z, default) or Euclidean ray length from the camera
/// center (Ray). Throws std::invalid_argument when depth <= 0.
Vector3d backproject_pixel(const CameraParams& camera, double u, double v,
                           double depth,
                           DepthConvention convention = DepthConvention::Z);

/// Per-voxel frustum membership: true iff the voxel center projects to
/// 0 <= u < W_f, 0 <= v < H_f with cam_depth > 0. Points behind the camera
/// are always excluded.
std::vector<std::uint8_t> frustum_mask(const CameraParams& camera,
                                       const VoxelGrid& grid);

namespace detail {

/// Raw projection without the degenerate-depth check; used by masking and
/// sampling loops where cam_depth <= 0 is filtered rather than an error.
inline PixelCoord project_unchecked(const Matrix34d& proj, const Vector3d& p) {
    const Eigen::Vector3d h =
        proj * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
    return PixelCoord{h.x() / h.z(), h.y() / h.z(), h.z()};
}

inline bool in_frustum(const PixelCoord& pc, int width, int height) {
    return pc.cam_depth > 0.0 && pc.u >= 0.0 && pc.u < width && pc.v >= 0.0 &&
           pc.v < height;
}

/// Nearest existing pixel for an in-bounds projection. Rounds half away from
/// zero; coordinates in [W-0.5, W) land on the last pixel, which is the
/// nearest existing center. Returns nullopt outside [0, W) x [0, H).
std::optional<std::array<int, 2>> nearest_pixel(double u, double v, int width,
                                                int height);

/// Camera-frame point on pixel (u, v)'s ray at the given depth.
Vector3d pixel_ray_point(const ProjectionCache& cache, double u, double v,
                         double depth, DepthConvention convention);

}  // namespace detail

}  // namespace voxelgeo
