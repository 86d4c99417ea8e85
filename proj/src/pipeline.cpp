#include "voxelgeo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "voxelgeo/io.hpp"
#include "voxelgeo/parallel.hpp"
#include "voxelgeo/rng.hpp"

namespace voxelgeo {

void PipelineConfig::validate() const {
    grid.validate();
    loss_weights.validate();
    if (theta && (*theta < 0.0 || !std::isfinite(*theta))) {
        throw std::invalid_argument("pipeline config: theta must be >= 0");
    }
    if (stride < 1) {
        throw std::invalid_argument("pipeline config: stride must be >= 1");
    }
    if (feature_channels < 1) {
        throw std::invalid_argument(
            "pipeline config: feature channel count must be >= 1");
    }
    if (nms_iou < 0.0 || nms_iou > 1.0) {
        throw std::invalid_argument("pipeline config: nms iou must be in [0,1]");
    }
    if (recall_positions != 11 && recall_positions != 40) {
        throw std::invalid_argument(
            "pipeline config: recall positions must be 11 or 40");
    }
}

double PipelineConfig::resolved_theta(std::size_t num_views) const {
    if (theta) {
        return *theta;
    }
    return num_views <= 1 ? 1.0 : 0.0;
}

double PipelineConfig::resolved_truncate_distance() const {
    return truncate_distance > 0.0 ? truncate_distance
                                   : 3.0 * grid.voxel_size;
}

PipelineConfig indoor_config() {
    PipelineConfig config;
    config.grid.dims = {40, 40, 16};
    config.grid.voxel_size = 0.16;
    config.grid.origin = Vector3d(-3.2, -3.2, -1.28);
    return config;
}

PipelineConfig outdoor_config() {
    PipelineConfig config;
    config.grid.dims = {216, 248, 12};
    config.grid.voxel_size = 0.32;
    config.grid.origin = Vector3d(0.0, -39.68, -3.0);
    return config;
}

FeatureMap make_feature_map(FeaturePattern pattern, int width, int height,
                            int channels, int view_id, std::uint64_t seed) {
    FeatureMap map(width, height, channels, view_id);
    switch (pattern) {
        case FeaturePattern::Constant:
            std::fill(map.data.begin(), map.data.end(), 1.0);
            break;
        case FeaturePattern::Ramp:
            for (int y = 0; y < height; ++y) {
                for (int x = 0; x < width; ++x) {
                    for (int c = 0; c < channels; ++c) {
                        map.at(x, y, c) = (x + 0.5) / width +
                                          (y + 0.5) / height + c;
                    }
                }
            }
            break;
        case FeaturePattern::Random: {
            SplitMix rng(derive_seed(seed, static_cast<std::uint64_t>(view_id)));
            for (double& value : map.data) {
                value = rng.next_double();
            }
            break;
        }
    }
    return map;
}

OccupancyScores analytic_occupancy(const Scene& scene, const VoxelGrid& grid,
                                   const std::vector<CameraParams>& cameras,
                                   int stride, DepthConvention convention) {
    if (cameras.empty()) {
        throw std::invalid_argument("analytic_occupancy: need >= 1 camera");
    }
    std::vector<std::vector<double>> per_view;
    per_view.reserve(cameras.size());
    for (const CameraParams& camera : cameras) {
        const DepthMap depth = render_depth(scene, camera, convention);
        const PointCloud cloud =
            depth_to_cloud(depth, camera, stride, convention);
        per_view.push_back(score_view(cloud, grid));
    }
    return accumulate_scores(per_view, grid);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start)
        .count();
}

nlohmann::json volume_stats(const std::vector<double>& data) {
    nlohmann::json stats;
    if (data.empty()) {
        return stats;
    }
    double lo = data[0];
    double hi = data[0];
    double sum = 0.0;
    for (const double v : data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    stats["min"] = lo;
    stats["max"] = hi;
    stats["mean"] = sum / static_cast<double>(data.size());
    return stats;
}

}  // namespace

PipelineResult run_pipeline(const Scene& scene,
                            const std::vector<CameraParams>& cameras,
                            const std::vector<FeatureMap>& feature_maps,
                            const PipelineConfig& config) {
    config.validate();
    scene.validate();
    if (cameras.empty() || cameras.size() != feature_maps.size()) {
        throw std::invalid_argument(
            "run_pipeline: need equal-length, non-empty camera and feature "
            "lists");
    }

    PipelineResult result;
    nlohmann::json timings;

    auto start = Clock::now();
    result.depths.reserve(cameras.size());
    for (const CameraParams& camera : cameras) {
        result.depths.push_back(
            render_depth(scene, camera, config.depth_convention));
    }
    timings["render_ms"] = ms_since(start);

    start = Clock::now();
    std::vector<std::vector<double>> per_view_scores;
    per_view_scores.reserve(cameras.size());
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const PointCloud cloud = depth_to_cloud(
            result.depths[i], cameras[i], config.stride,
            config.depth_convention);
        per_view_scores.push_back(score_view(cloud, config.grid));
    }
    result.scores = accumulate_scores(per_view_scores, config.grid);
    timings["occupancy_ms"] = ms_since(start);

    start = Clock::now();
    std::vector<ViewSample> samples;
    samples.reserve(cameras.size());
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        samples.push_back(
            sample_view(feature_maps[i], cameras[i], config.grid));
    }
    result.aggregated = aggregate(samples);
    timings["aggregate_ms"] = ms_since(start);

    start = Clock::now();
    const double theta = config.resolved_theta(cameras.size());
    result.attended = apply_attention(result.aggregated, result.scores, theta);
    timings["attention_ms"] = ms_since(start);

    start = Clock::now();
    result.tsdf = fuse(result.depths, cameras, config.grid,
                       config.resolved_truncate_distance(), config.weighting,
                       config.depth_convention);
    timings["tsdf_ms"] = ms_since(start);

    start = Clock::now();
    result.output = attach_tsdf(result.attended, result.tsdf,
                                config.attach_mode);
    timings["attach_ms"] = ms_since(start);

    // Invariant sweep over the finished volumes; failures here mean a stage
    // broke its contract.
    bool tsdf_in_bounds = true;
    bool unobserved_is_far = true;
    for (std::size_t j = 0; j < result.tsdf.tsdf.size(); ++j) {
        if (result.tsdf.tsdf[j] < -1.0 || result.tsdf.tsdf[j] > 1.0) {
            tsdf_in_bounds = false;
        }
        if (result.tsdf.weight[j] == 0.0 && result.tsdf.tsdf[j] != 1.0) {
            unobserved_is_far = false;
        }
    }
    bool zero_where_uncovered = true;
    for (std::int64_t j = 0;
         j < static_cast<std::int64_t>(result.aggregated.coverage.size());
         ++j) {
        if (result.aggregated.coverage[j] != 0) {
            continue;
        }
        for (int c = 0; c < result.aggregated.channels; ++c) {
            if (result.aggregated.data[j * result.aggregated.channels + c] !=
                0.0) {
                zero_where_uncovered = false;
            }
        }
    }
    bool scores_nonnegative = true;
    for (const double s : result.scores.data) {
        if (s < 0.0) {
            scores_nonnegative = false;
        }
    }

    std::int64_t observed = 0;
    for (const double w : result.tsdf.weight) {
        if (w > 0.0) {
            ++observed;
        }
    }
    std::int64_t covered = 0;
    for (const int c : result.aggregated.coverage) {
        if (c > 0) {
            ++covered;
        }
    }

    nlohmann::json metrics;
    metrics["views"] = cameras.size();
    metrics["threads"] = num_threads();
    metrics["seed"] = config.seed;
    metrics["theta"] = theta;
    metrics["truncate_distance"] = config.resolved_truncate_distance();
    metrics["stride"] = config.stride;
    metrics["timings"] = timings;
    metrics["features"] = volume_stats(result.output.data);
    metrics["scores"] = volume_stats(result.scores.data);
    metrics["tsdf"] = volume_stats(result.tsdf.tsdf);
    metrics["covered_voxels"] = covered;
    metrics["observed_voxels"] = observed;
    metrics["voxels"] = result.tsdf.tsdf.size();
    metrics["checks"] = {
        {"tsdf_in_bounds", tsdf_in_bounds},
        {"unobserved_is_far", unobserved_is_far},
        {"zero_feature_where_uncovered", zero_where_uncovered},
        {"scores_nonnegative", scores_nonnegative},
    };
    result.metrics_json = metrics.dump(2);
    return result;
}

PipelineResult run_pipeline(const Scene& scene,
                            const std::vector<CameraParams>& cameras,
                            const PipelineConfig& config) {
    std::vector<FeatureMap> feature_maps;
    feature_maps.reserve(cameras.size());
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        feature_maps.push_back(make_feature_map(
            config.feature_pattern, cameras[i].feature_width,
            cameras[i].feature_height, config.feature_channels,
            static_cast<int>(i), config.seed));
    }
    return run_pipeline(scene, cameras, feature_maps, config);
}

std::string write_pipeline_outputs(const PipelineResult& result,
                                   const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_vxg((fs::path(out_dir) / "feature_volume.vxg").string(),
              result.output);
    write_vxg((fs::path(out_dir) / "tsdf.vxg").string(), result.tsdf);
    write_vxg((fs::path(out_dir) / "scores.vxg").string(), result.scores);
    const std::string metrics_path =
        (fs::path(out_dir) / "metrics.json").string();
    std::ofstream out(metrics_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + metrics_path);
    }
    out << result.metrics_json << "\n";
    return metrics_path;
}

}  // namespace voxelgeo
