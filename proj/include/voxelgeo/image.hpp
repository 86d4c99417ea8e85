#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace voxelgeo {

/// Per-pixel metric depth for one view, row-major. A value of 0 (or any
/// non-positive or non-finite value) marks an invalid pixel.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    DepthMap() = default;
    DepthMap(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) {
            throw std::invalid_argument("depth map dimensions must be >= 1");
        }
    }

    double at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

/// Dense per-view feature map, row-major with the channel index fastest:
/// data[(y*width + x)*channels + c].
struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 1;
    int view_id = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int c, int view)
        : width(w),
          height(h),
          channels(c),
          view_id(view),
          data(static_cast<std::size_t>(w) * h * c, 0.0) {
        if (w < 1 || h < 1 || c < 1) {
            throw std::invalid_argument("feature map dimensions must be >= 1");
        }
    }

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * channels;
    }
    double at(int x, int y, int c) const { return data[offset(x, y) + c]; }
    double& at(int x, int y, int c) { return data[offset(x, y) + c]; }
};

}  // namespace voxelgeo
