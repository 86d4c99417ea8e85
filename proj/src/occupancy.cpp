#include "voxelgeo/occupancy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "voxelgeo/parallel.hpp"

namespace voxelgeo {

PointCloud depth_to_cloud(const DepthMap& depth, const CameraParams& camera,
                          int stride, DepthConvention convention) {
    camera.validate();
    if (depth.width != camera.image_width ||
        depth.height != camera.image_height) {
        throw std::invalid_argument(
            "depth_to_cloud: depth map shape does not match the camera's "
            "image resolution");
    }
    if (stride < 1) {
        throw std::invalid_argument("depth_to_cloud: stride must be >= 1");
    }

    const ProjectionCache cache(camera);
    PointCloud cloud;
    for (int y = 0; y < depth.height; y += stride) {
        for (int x = 0; x < depth.width; x += stride) {
            const double d = depth.at(x, y);
            if (!(d > 0.0) || !std::isfinite(d)) {
                continue;
            }
            const Vector3d cam_point = detail::pixel_ray_point(
                cache, static_cast<double>(x), static_cast<double>(y), d,
                convention);
            const Eigen::Vector4d world =
                cache.cam_to_world * Eigen::Vector4d(cam_point.x(),
                                                     cam_point.y(),
                                                     cam_point.z(), 1.0);
            cloud.points.push_back(world.head<3>());
        }
    }
    return cloud;
}

namespace {

// Containment is defined against the canonical half-open bounds
// [origin + i*vs, origin + (i+1)*vs). floor() gives the candidate bin, but
// its rounding can disagree with those bounds by one ulp near edges, so the
// candidate is nudged until the direct comparison holds.
int bin_index(double coord, double origin, double voxel_size, int dim) {
    int idx = static_cast<int>(std::floor((coord - origin) / voxel_size));
    for (int step = 0; step < 2; ++step) {
        if (idx >= 0 && coord < origin + idx * voxel_size) {
            --idx;
        } else if (idx < dim && coord >= origin + (idx + 1) * voxel_size) {
            ++idx;
        } else {
            break;
        }
    }
    return idx;
}

}  // namespace

std::vector<double> score_view(const PointCloud& cloud,
                               const VoxelGrid& grid) {
    grid.validate();
    std::vector<double> scores(grid.num_voxels(), 0.0);
    if (cloud.points.empty()) {
        return scores;
    }

    const int threads = num_threads();
    const std::int64_t n = static_cast<std::int64_t>(cloud.points.size());
    std::vector<std::vector<std::int64_t>> counts(
        std::max(threads, 1),
        std::vector<std::int64_t>(grid.num_voxels(), 0));

    // Per-thread integer histograms merge to the same totals in any
    // execution order, so the result is thread-count-invariant.
    std::atomic<int> slot{0};
    parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
        std::vector<std::int64_t>& local = counts[slot.fetch_add(1)];
        for (std::int64_t i = begin; i < end; ++i) {
            const Vector3d& p = cloud.points[i];
            const int ix =
                bin_index(p.x(), grid.origin.x(), grid.voxel_size, grid.dims[0]);
            if (ix < 0 || ix >= grid.dims[0]) {
                continue;
            }
            const int iy =
                bin_index(p.y(), grid.origin.y(), grid.voxel_size, grid.dims[1]);
            if (iy < 0 || iy >= grid.dims[1]) {
                continue;
            }
            const int iz =
                bin_index(p.z(), grid.origin.z(), grid.voxel_size, grid.dims[2]);
            if (iz < 0 || iz >= grid.dims[2]) {
                continue;
            }
            ++local[grid.linear_index(ix, iy, iz)];
        }
    });

    const double denom = static_cast<double>(cloud.points.size());
    for (std::size_t j = 0; j < scores.size(); ++j) {
        std::int64_t total = 0;
        for (const std::vector<std::int64_t>& local : counts) {
            total += local[j];
        }
        scores[j] = static_cast<double>(total) / denom;
    }
    return scores;
}

OccupancyScores accumulate_scores(
    const std::vector<std::vector<double>>& per_view, const VoxelGrid& grid) {
    grid.validate();
    if (per_view.empty()) {
        throw std::invalid_argument("accumulate_scores: need at least one view");
    }
    const std::size_t n = static_cast<std::size_t>(grid.num_voxels());
    for (const std::vector<double>& view : per_view) {
        if (view.size() != n) {
            throw std::invalid_argument(
                "accumulate_scores: score volume size does not match the grid");
        }
    }
    OccupancyScores scores;
    scores.grid = grid;
    scores.data.assign(n, 0.0);
    for (const std::vector<double>& view : per_view) {
        for (std::size_t j = 0; j < n; ++j) {
            scores.data[j] += view[j];
        }
    }
    return scores;
}

FeatureVolume apply_attention(const FeatureVolume& volume,
                              const OccupancyScores& scores, double theta) {
    if (!volume.grid.same_shape(scores.grid) ||
        scores.data.size() != static_cast<std::size_t>(volume.grid.num_voxels())) {
        throw std::invalid_argument("apply_attention: mismatched grids");
    }
    if (theta < 0.0 || !std::isfinite(theta)) {
        throw std::invalid_argument("apply_attention: theta must be >= 0");
    }
    FeatureVolume out = volume;
    const int c = volume.channels;
    parallel_for(volume.grid.num_voxels(),
                 [&](std::int64_t begin, std::int64_t end) {
                     for (std::int64_t idx = begin; idx < end; ++idx) {
                         const double factor = scores.data[idx] + theta;
                         const std::size_t base =
                             static_cast<std::size_t>(idx) * c;
                         for (int ch = 0; ch < c; ++ch) {
                             out.data[base + ch] *= factor;
                         }
                     }
                 });
    return out;
}

}  // namespace voxelgeo
