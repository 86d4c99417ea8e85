#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxelgeo/io.hpp"
#include "voxelgeo/losses.hpp"
#include "voxelgeo/parallel.hpp"
#include "voxelgeo/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace voxelgeo;

struct GlobalArgs {
    std::uint64_t seed = 0;
    int threads = 1;
    std::string config_path;
};

PipelineConfig base_config(const GlobalArgs& globals) {
    PipelineConfig config = indoor_config();
    if (!globals.config_path.empty()) {
        config = load_config(globals.config_path, config);
    }
    config.seed = globals.seed;
    return config;
}

std::vector<CameraParams> cameras_from_dir(const std::string& dir) {
    std::vector<CameraParams> cameras = load_camera_dir(dir);
    if (cameras.empty()) {
        throw std::runtime_error("no camera json files in " + dir);
    }
    return cameras;
}

int run_render(const std::string& scene_path, const std::string& camera_dir,
               const std::string& convention, const std::string& out_dir) {
    const Scene scene = load_scene(scene_path);
    const std::vector<CameraParams> cameras = cameras_from_dir(camera_dir);
    const DepthConvention conv = parse_depth_convention(convention);
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const DepthMap depth = render_depth(scene, cameras[i], conv);
        char name[32];
        std::snprintf(name, sizeof(name), "depth_%04zu.pfm", i);
        write_pfm((fs::path(out_dir) / name).string(), depth);
    }
    std::cout << "rendered " << cameras.size() << " depth maps to " << out_dir
              << "\n";
    return 0;
}

int run_occupancy(const std::string& grid_path, const std::string& camera_dir,
                  const std::string& depth_dir, int stride, double theta,
                  const std::string& convention, const std::string& out_path,
                  const std::string& features_path,
                  const std::string& attended_out) {
    const VoxelGrid grid = load_grid(grid_path);
    const std::vector<CameraParams> cameras = cameras_from_dir(camera_dir);
    const std::vector<DepthMap> depths = load_depth_dir(depth_dir);
    if (depths.size() != cameras.size()) {
        throw std::runtime_error("camera and depth counts differ");
    }
    if (theta < 0.0) {
        throw std::runtime_error("theta must be >= 0");
    }
    const DepthConvention conv = parse_depth_convention(convention);

    std::vector<std::vector<double>> per_view;
    per_view.reserve(cameras.size());
    std::size_t total_points = 0;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const PointCloud cloud =
            depth_to_cloud(depths[i], cameras[i], stride, conv);
        total_points += cloud.points.size();
        per_view.push_back(score_view(cloud, grid));
    }
    const OccupancyScores scores = accumulate_scores(per_view, grid);
    write_vxg(out_path, scores);

    double total = 0.0;
    for (const double s : scores.data) {
        total += s;
    }
    std::cout << "scored " << cameras.size() << " views, " << total_points
              << " points, in-grid mass " << total << ", theta " << theta
              << ", wrote " << out_path << "\n";

    if (!features_path.empty()) {
        if (attended_out.empty()) {
            throw std::runtime_error(
                "--features requires --attended-out for the result volume");
        }
        const RawVolume raw = read_vxg(features_path);
        if (!raw.grid.same_shape(grid)) {
            throw std::runtime_error(
                "feature volume dims do not match the grid");
        }
        FeatureVolume volume;
        volume.grid = grid;
        volume.channels = raw.channels;
        volume.data.assign(raw.data.begin(), raw.data.end());
        volume.coverage.assign(static_cast<std::size_t>(grid.num_voxels()), 0);
        const FeatureVolume attended = apply_attention(volume, scores, theta);
        write_vxg(attended_out, attended);
        std::cout << "applied attention to " << features_path << ", wrote "
                  << attended_out << "\n";
    }
    return 0;
}

int run_fuse(const std::string& grid_path, const std::string& camera_dir,
             const std::string& depth_dir, double truncate,
             const std::string& weighting, const std::string& convention,
             const std::string& out_path) {
    const VoxelGrid grid = load_grid(grid_path);
    const std::vector<CameraParams> cameras = cameras_from_dir(camera_dir);
    const std::vector<DepthMap> depths = load_depth_dir(depth_dir);
    if (depths.size() != cameras.size()) {
        throw std::runtime_error("camera and depth counts differ");
    }
    const double d = truncate > 0.0 ? truncate : 3.0 * grid.voxel_size;
    const TsdfVolume volume =
        fuse(depths, cameras, grid, d, parse_weighting(weighting),
             parse_depth_convention(convention));
    write_vxg(out_path, volume);
    std::int64_t observed = 0;
    for (const double w : volume.weight) {
        observed += w > 0.0 ? 1 : 0;
    }
    std::cout << "fused " << cameras.size() << " views, observed " << observed
              << "/" << volume.tsdf.size() << " voxels, wrote " << out_path
              << "\n";
    return 0;
}

int run_aggregate(const std::string& grid_path, const std::string& camera_dir,
                  const std::string& pattern, int channels,
                  std::uint64_t seed, const std::string& out_path) {
    const VoxelGrid grid = load_grid(grid_path);
    const std::vector<CameraParams> cameras = cameras_from_dir(camera_dir);
    const FeaturePattern pat = parse_feature_pattern(pattern);
    std::vector<ViewSample> samples;
    samples.reserve(cameras.size());
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const FeatureMap map = make_feature_map(
            pat, cameras[i].feature_width, cameras[i].feature_height,
            channels, static_cast<int>(i), seed);
        samples.push_back(sample_view(map, cameras[i], grid));
    }
    const FeatureVolume volume = aggregate(samples);
    write_vxg(out_path, volume);
    std::int64_t covered = 0;
    for (const int c : volume.coverage) {
        covered += c > 0 ? 1 : 0;
    }
    std::cout << "aggregated " << cameras.size() << " views, covered "
              << covered << "/" << volume.coverage.size()
              << " voxels, wrote " << out_path << "\n";
    return 0;
}

int run_full_pipeline(const GlobalArgs& globals, const std::string& scene_path,
                      const std::string& camera_dir,
                      const std::string& out_dir) {
    const Scene scene = load_scene(scene_path);
    const std::vector<CameraParams> cameras = cameras_from_dir(camera_dir);
    const PipelineConfig config = base_config(globals);
    const PipelineResult result = run_pipeline(scene, cameras, config);
    const std::string metrics_path = write_pipeline_outputs(result, out_dir);
    std::cout << result.metrics_json << "\n";
    std::cout << "wrote volumes and " << metrics_path << "\n";
    return 0;
}

int run_eval(const GlobalArgs& globals, const std::string& dets_path,
             const std::string& gts_path, double iou, int recall_positions,
             const std::string& losses_path) {
    if (!losses_path.empty()) {
        const nlohmann::json doc =
            nlohmann::json::parse(std::ifstream(losses_path));
        LossComponents components;
        components.cls = doc.value("cls", 0.0);
        components.box = doc.value("box", 0.0);
        components.ctr = doc.value("ctr", 0.0);
        components.dir = doc.value("dir", 0.0);
        components.depth = doc.value("depth", 0.0);
        LossWeights weights;
        if (doc.contains("weights")) {
            const auto& w = doc.at("weights");
            weights.lambda = w.value("lambda", weights.lambda);
            weights.alpha = w.value("alpha", weights.alpha);
            weights.beta = w.value("beta", weights.beta);
            weights.n_pos = w.value("n_pos", weights.n_pos);
        }
        const std::string head = doc.value("head", std::string("indoor"));
        const double value =
            total_loss(components, weights,
                       head == "outdoor" ? DetectionHead::Outdoor
                                         : DetectionHead::Indoor);
        std::cout << "total_loss (" << head << ") = " << value << "\n";
        if (dets_path.empty() || gts_path.empty()) {
            return 0;
        }
    }

    const PipelineConfig config = base_config(globals);
    const std::vector<Detection> dets = load_detections(dets_path);
    const std::vector<LabeledBox> gts = load_ground_truth(gts_path);
    const std::vector<Detection> kept = nms(dets, config.nms_iou);
    const ApReport report = mean_ap(kept, gts, iou, recall_positions);
    std::cout << "detections " << dets.size() << ", after nms(iou "
              << config.nms_iou << ") " << kept.size() << ", ground truth "
              << gts.size() << "\n";
    for (const auto& [label, ap] : report.per_class) {
        std::cout << "class " << label << ": AP@" << iou << " = " << ap
                  << "\n";
    }
    std::cout << "mAP@" << iou << " (" << recall_positions
              << " recall positions) = " << report.mean_ap << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volumetric geometry toolkit"};
    app.require_subcommand(1);

    GlobalArgs globals;
    app.add_option("--seed", globals.seed, "root seed for synthetic data");
    app.add_option("--threads", globals.threads, "worker thread count")
        ->check(CLI::PositiveNumber);
    app.add_option("--config", globals.config_path, "pipeline config json");

    auto* render = app.add_subcommand("render", "render depth maps");
    std::string scene_path;
    std::string camera_dir;
    std::string convention = "ray";
    std::string out_dir = "out";
    render->add_option("--scene", scene_path, "scene json")->required();
    render->add_option("--cameras", camera_dir, "camera json directory")
        ->required();
    render->add_option("--convention", convention, "ray or z");
    render->add_option("--out-dir", out_dir, "output directory");

    auto* occupancy = app.add_subcommand("occupancy",
                                         "score voxel occupancy from depths");
    std::string grid_path;
    std::string depth_dir;
    int stride = 1;
    double theta = 0.0;
    std::string out_path = "scores.vxg";
    std::string features_path;
    std::string attended_out;
    occupancy->add_option("--grid", grid_path, "grid json")->required();
    occupancy->add_option("--cameras", camera_dir, "camera json directory")
        ->required();
    occupancy->add_option("--depths", depth_dir, "pfm depth directory")
        ->required();
    occupancy->add_option("--stride", stride, "pixel stride")
        ->check(CLI::PositiveNumber);
    occupancy->add_option("--theta", theta, "attention constant");
    occupancy->add_option("--depth-convention", convention, "ray or z");
    occupancy->add_option("--out", out_path, "output vxg path");
    occupancy->add_option("--features", features_path,
                          "feature volume to apply attention to");
    occupancy->add_option("--attended-out", attended_out,
                          "output path for the attended volume");

    auto* fuse_cmd = app.add_subcommand("fuse-tsdf", "fuse depth maps");
    double truncate = 0.0;
    std::string weighting = "angle_distance";
    fuse_cmd->add_option("--grid", grid_path, "grid json")->required();
    fuse_cmd->add_option("--cameras", camera_dir, "camera json directory")
        ->required();
    fuse_cmd->add_option("--depths", depth_dir, "pfm depth directory")
        ->required();
    fuse_cmd->add_option("--truncate", truncate,
                         "truncation distance in meters (default 3 * voxel)");
    fuse_cmd->add_option("--weighting", weighting, "angle_distance or unit");
    fuse_cmd->add_option("--depth-convention", convention, "ray or z");
    fuse_cmd->add_option("--out", out_path, "output vxg path");

    auto* aggregate_cmd =
        app.add_subcommand("aggregate", "build a multi-view feature volume");
    std::string pattern = "ramp";
    int channels = 8;
    aggregate_cmd->add_option("--grid", grid_path, "grid json")->required();
    aggregate_cmd->add_option("--cameras", camera_dir, "camera json directory")
        ->required();
    aggregate_cmd->add_option("--features", pattern,
                              "constant, ramp, or random");
    aggregate_cmd->add_option("--channels", channels, "feature channels")
        ->check(CLI::PositiveNumber);
    aggregate_cmd->add_option("--out", out_path, "output vxg path");

    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "full synthetic-scene run");
    pipeline_cmd->add_option("--scene", scene_path, "scene json")->required();
    pipeline_cmd->add_option("--cameras", camera_dir, "camera json directory")
        ->required();
    pipeline_cmd->add_option("--out-dir", out_dir, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate detections");
    std::string dets_path;
    std::string gts_path;
    double iou = 0.25;
    int recall_positions = 40;
    std::string losses_path;
    eval_cmd->add_option("--dets", dets_path, "detections jsonl");
    eval_cmd->add_option("--gts", gts_path, "ground-truth jsonl");
    eval_cmd->add_option("--iou", iou, "matching iou threshold");
    eval_cmd->add_option("--recall-positions", recall_positions, "11 or 40");
    eval_cmd->add_option("--losses", losses_path,
                         "loss components json for total_loss");

    CLI11_PARSE(app, argc, argv);

    try {
        set_num_threads(globals.threads);
        if (render->parsed()) {
            return run_render(scene_path, camera_dir, convention, out_dir);
        }
        if (occupancy->parsed()) {
            return run_occupancy(grid_path, camera_dir, depth_dir, stride,
                                 theta, convention, out_path, features_path,
                                 attended_out);
        }
        if (fuse_cmd->parsed()) {
            return run_fuse(grid_path, camera_dir, depth_dir, truncate,
                            weighting, convention, out_path);
        }
        if (aggregate_cmd->parsed()) {
            return run_aggregate(grid_path, camera_dir, pattern, channels,
                                 globals.seed, out_path);
        }
        if (pipeline_cmd->parsed()) {
            return run_full_pipeline(globals, scene_path, camera_dir, out_dir);
        }
        if (eval_cmd->parsed()) {
            if (losses_path.empty() &&
                (dets_path.empty() || gts_path.empty())) {
                throw std::runtime_error(
                    "eval needs --dets and --gts, or --losses");
            }
            return run_eval(globals, dets_path, gts_path, iou,
                            recall_positions, losses_path);
        }
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
