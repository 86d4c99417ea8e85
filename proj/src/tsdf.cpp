#include "voxelgeo/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "voxelgeo/parallel.hpp"

namespace voxelgeo {

TsdfVolume::TsdfVolume(const VoxelGrid& g, double d)
    : grid(g), truncate_distance(d) {
    grid.validate();
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw std::invalid_argument("truncate distance must be positive");
    }
    tsdf.assign(static_cast<std::size_t>(grid.num_voxels()), 1.0);
    weight.assign(static_cast<std::size_t>(grid.num_voxels()), 0.0);
}

namespace {

// Surface normal at a pixel from central differences of back-projected
// neighbors, world frame, unit length. Empty when the neighborhood has
// invalid depth or the cross product degenerates.
std::optional<Vector3d> pixel_normal(const DepthMap& depth,
                                     const ProjectionCache& cache, int x,
                                     int y, DepthConvention convention) {
    const auto world_at = [&](int px, int py) -> std::optional<Vector3d> {
        const double d = depth.at(px, py);
        if (!(d > 0.0) || !std::isfinite(d)) {
            return std::nullopt;
        }
        const Vector3d cam = detail::pixel_ray_point(
            cache, static_cast<double>(px), static_cast<double>(py), d,
            convention);
        return (cache.cam_to_world *
                Eigen::Vector4d(cam.x(), cam.y(), cam.z(), 1.0))
            .head<3>();
    };

    const int xl = std::max(x - 1, 0);
    const int xr = std::min(x + 1, depth.width - 1);
    const int yd = std::max(y - 1, 0);
    const int yu = std::min(y + 1, depth.height - 1);
    if (xl == xr || yd == yu) {
        return std::nullopt;
    }
    const auto px0 = world_at(xl, y);
    const auto px1 = world_at(xr, y);
    const auto py0 = world_at(x, yd);
    const auto py1 = world_at(x, yu);
    if (!px0 || !px1 || !py0 || !py1) {
        return std::nullopt;
    }
    const Vector3d normal = (*px1 - *px0).cross(*py1 - *py0);
    const double norm = normal.norm();
    if (norm < 1e-12) {
        return std::nullopt;
    }
    return normal / norm;
}

}  // namespace

void integrate_view(TsdfVolume& volume, const DepthMap& depth,
                    const CameraParams& camera, WeightingMode weighting,
                    DepthConvention convention) {
    camera.validate();
    if (depth.width != camera.image_width ||
        depth.height != camera.image_height) {
        throw std::invalid_argument(
            "integrate_view: depth map shape does not match the camera's "
            "image resolution");
    }

    const ProjectionCache cache(camera);
    const Vector3d origin = cache.center;
    const VoxelGrid& grid = volume.grid;
    const double d = volume.truncate_distance;
    const int ny = grid.dims[1];
    const int nz = grid.dims[2];

    parallel_for(grid.num_voxels(), [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const int ix = static_cast<int>(idx / (ny * nz));
            const int iy = static_cast<int>((idx / nz) % ny);
            const int iz = static_cast<int>(idx % nz);
            const Vector3d center = grid.center(ix, iy, iz);
            const PixelCoord pc =
                detail::project_unchecked(cache.image_proj, center);
            if (pc.cam_depth <= 0.0) {
                continue;
            }
            const auto pixel =
                detail::nearest_pixel(pc.u, pc.v, depth.width, depth.height);
            if (!pixel) {
                continue;
            }
            const int px = (*pixel)[0];
            const int py = (*pixel)[1];
            double sample = depth.at(px, py);
            if (!(sample > 0.0) || !std::isfinite(sample)) {
                continue;
            }
            if (convention == DepthConvention::Z) {
                // Scale the z sample onto its pixel's ray so the
                // subtraction compares two distances from the camera.
                const Vector3d cam = detail::pixel_ray_point(
                    cache, static_cast<double>(px), static_cast<double>(py),
                    sample, DepthConvention::Z);
                sample = cam.norm();
            }

            const double dist = (center - origin).norm();
            const double sdf = sample - dist;
            const double t = std::clamp(sdf / d, -1.0, 1.0);

            double w = 1.0;
            if (weighting == WeightingMode::AngleDistance) {
                if (dist < 1e-12) {
                    continue;
                }
                const auto normal =
                    pixel_normal(depth, cache, px, py, convention);
                if (!normal) {
                    continue;
                }
                const Vector3d ray = (center - origin) / dist;
                const double cos_angle =
                    std::clamp(std::abs(ray.dot(*normal)), 0.0, 1.0);
                w = cos_angle / dist;
                if (w <= 0.0) {
                    continue;
                }
            }

            const double prev_w = volume.weight[idx];
            const double merged =
                (prev_w * volume.tsdf[idx] + w * t) / (prev_w + w);
            volume.tsdf[idx] = std::clamp(merged, -1.0, 1.0);
            volume.weight[idx] = prev_w + w;
        }
    });
}

TsdfVolume fuse(const std::vector<DepthMap>& depths,
                const std::vector<CameraParams>& cameras,
                const VoxelGrid& grid, double truncate_distance,
                WeightingMode weighting, DepthConvention convention) {
    if (depths.empty() || depths.size() != cameras.size()) {
        throw std::invalid_argument(
            "fuse: need equal-length, non-empty depth and camera lists");
    }
    TsdfVolume volume(grid, truncate_distance);
    for (std::size_t i = 0; i < depths.size(); ++i) {
        integrate_view(volume, depths[i], cameras[i], weighting, convention);
    }
    return volume;
}

FeatureVolume attach_tsdf(const FeatureVolume& volume, const TsdfVolume& tsdf,
                          AttachMode mode) {
    const std::size_t n = static_cast<std::size_t>(volume.grid.num_voxels());
    if (!volume.grid.same_shape(tsdf.grid) || tsdf.tsdf.size() != n) {
        throw std::invalid_argument("attach_tsdf: mismatched grids");
    }
    const int c = volume.channels;
    FeatureVolume out;
    out.grid = volume.grid;
    out.coverage = volume.coverage;

    switch (mode) {
        case AttachMode::Concat: {
            out.channels = c + 1;
            out.data.assign(n * (c + 1), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t src = j * c;
                const std::size_t dst = j * (c + 1);
                for (int ch = 0; ch < c; ++ch) {
                    out.data[dst + ch] = volume.data[src + ch];
                }
                out.data[dst + c] = tsdf.tsdf[j];
            }
            return out;
        }
        case AttachMode::Add: {
            out.channels = c;
            out.data = volume.data;
            for (std::size_t j = 0; j < n; ++j) {
                for (int ch = 0; ch < c; ++ch) {
                    out.data[j * c + ch] += tsdf.tsdf[j];
                }
            }
            return out;
        }
        case AttachMode::Multiply: {
            out.channels = c;
            out.data = volume.data;
            for (std::size_t j = 0; j < n; ++j) {
                for (int ch = 0; ch < c; ++ch) {
                    out.data[j * c + ch] *= tsdf.tsdf[j];
                }
            }
            return out;
        }
    }
    throw std::invalid_argument("attach_tsdf: unknown mode");
}

}  // namespace voxelgeo
