#include "voxelgeo/volume.hpp"

#include <algorithm>
#include <stdexcept>

#include "voxelgeo/parallel.hpp"

namespace voxelgeo {

ViewSample sample_view(const FeatureMap& feature_map,
                       const CameraParams& camera, const VoxelGrid& grid) {
    camera.validate();
    grid.validate();
    if (feature_map.width != camera.feature_width ||
        feature_map.height != camera.feature_height) {
        throw std::invalid_argument(
            "sample_view: feature map shape does not match the camera's "
            "feature resolution");
    }

    ViewSample sample;
    sample.grid = grid;
    sample.channels = feature_map.channels;
    sample.view_id = feature_map.view_id;
    const std::int64_t n = grid.num_voxels();
    const int c = feature_map.channels;
    sample.values.assign(static_cast<std::size_t>(n) * c, 0.0);
    sample.mask.assign(static_cast<std::size_t>(n), 0);

    const ProjectionCache cache(camera);
    const int ny = grid.dims[1];
    const int nz = grid.dims[2];
    parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const int ix = static_cast<int>(idx / (ny * nz));
            const int iy = static_cast<int>((idx / nz) % ny);
            const int iz = static_cast<int>(idx % nz);
            const PixelCoord pc = detail::project_unchecked(
                cache.feature_proj, grid.center(ix, iy, iz));
            if (!detail::in_frustum(pc, feature_map.width,
                                    feature_map.height)) {
                continue;
            }
            const auto pixel = detail::nearest_pixel(
                pc.u, pc.v, feature_map.width, feature_map.height);
            if (!pixel) {
                continue;
            }
            sample.mask[idx] = 1;
            const std::size_t src = feature_map.offset((*pixel)[0], (*pixel)[1]);
            const std::size_t dst = static_cast<std::size_t>(idx) * c;
            for (int ch = 0; ch < c; ++ch) {
                sample.values[dst + ch] = feature_map.data[src + ch];
            }
        }
    });
    return sample;
}

FeatureVolume aggregate(const std::vector<ViewSample>& views) {
    if (views.empty()) {
        throw std::invalid_argument("aggregate: need at least one view");
    }
    const VoxelGrid& grid = views.front().grid;
    const int c = views.front().channels;
    const std::int64_t n = grid.num_voxels();
    for (const ViewSample& view : views) {
        if (!view.grid.same_shape(grid) || view.channels != c ||
            view.values.size() != static_cast<std::size_t>(n) * c ||
            view.mask.size() != static_cast<std::size_t>(n)) {
            throw std::invalid_argument("aggregate: mismatched view shapes");
        }
    }

    // Ascending view_id fixes the summation order regardless of how the
    // caller arranged the list.
    std::vector<const ViewSample*> ordered;
    ordered.reserve(views.size());
    for (const ViewSample& view : views) {
        ordered.push_back(&view);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const ViewSample* a, const ViewSample* b) {
                         return a->view_id < b->view_id;
                     });

    FeatureVolume volume;
    volume.grid = grid;
    volume.channels = c;
    volume.data.assign(static_cast<std::size_t>(n) * c, 0.0);
    volume.coverage.assign(static_cast<std::size_t>(n), 0);

    // Extended-precision accumulation keeps the per-voxel sum exact for any
    // realistic view count, so the mean of k identical contributions divides
    // back to the original values bit-for-bit.
    parallel_for(n, [&](std::int64_t begin, std::int64_t end) {
        std::vector<long double> acc(static_cast<std::size_t>(c));
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const std::size_t base = static_cast<std::size_t>(idx) * c;
            std::fill(acc.begin(), acc.end(), 0.0L);
            int count = 0;
            for (const ViewSample* view : ordered) {
                if (!view->mask[idx]) {
                    continue;
                }
                ++count;
                for (int ch = 0; ch < c; ++ch) {
                    acc[ch] += view->values[base + ch];
                }
            }
            volume.coverage[idx] = count;
            if (count > 0) {
                for (int ch = 0; ch < c; ++ch) {
                    volume.data[base + ch] =
                        static_cast<double>(acc[ch] / count);
                }
            }
        }
    });
    return volume;
}

}  // namespace voxelgeo
