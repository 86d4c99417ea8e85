#include "voxelgeo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace voxelgeo {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::array<char, 8> kMagic = {'V', 'X', 'G', '1', 0, 0, 0, 0};

void append_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
    append_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFull));
    append_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void append_f32(std::string& out, float v) {
    append_u32(out, std::bit_cast<std::uint32_t>(v));
}

void append_f64(std::string& out, double v) {
    append_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
  public:
    explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) |
                static_cast<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void raw(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw std::runtime_error("volume file truncated");
        }
    }

    std::string bytes_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("short write to " + path);
    }
}

Vector3d vec3_from(const json& j, const char* key) {
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.size() != 3) {
        throw std::runtime_error(std::string(key) + " must have 3 entries");
    }
    return Vector3d(arr[0].get<double>(), arr[1].get<double>(),
                    arr[2].get<double>());
}

json vec3_to(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<std::string> sorted_files(const std::string& dir,
                                      const std::string& extension) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error(dir + " is not a directory");
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() &&
            entry.path().extension() == extension) {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

}  // namespace

void write_vxg(const std::string& path, const VoxelGrid& grid, int channels,
               const std::vector<double>& data) {
    grid.validate();
    if (channels < 1 ||
        data.size() != static_cast<std::size_t>(grid.num_voxels()) * channels) {
        throw std::invalid_argument("write_vxg: data size does not match grid");
    }
    std::string bytes;
    bytes.reserve(48 + data.size() * 4);
    bytes.append(kMagic.data(), kMagic.size());
    append_u32(bytes, static_cast<std::uint32_t>(grid.dims[0]));
    append_u32(bytes, static_cast<std::uint32_t>(grid.dims[1]));
    append_u32(bytes, static_cast<std::uint32_t>(grid.dims[2]));
    append_u32(bytes, static_cast<std::uint32_t>(channels));
    append_f64(bytes, grid.origin.x());
    append_f64(bytes, grid.origin.y());
    append_f64(bytes, grid.origin.z());
    append_f64(bytes, grid.voxel_size);
    for (const double v : data) {
        append_f32(bytes, static_cast<float>(v));
    }
    write_file(path, bytes);
}

RawVolume read_vxg(const std::string& path) {
    ByteReader reader(read_file(path));
    std::array<char, 8> magic;
    reader.raw(magic.data(), magic.size());
    if (magic != kMagic) {
        throw std::runtime_error(path + " is not a VXG1 volume");
    }
    RawVolume volume;
    const std::uint32_t nx = reader.u32();
    const std::uint32_t ny = reader.u32();
    const std::uint32_t nz = reader.u32();
    const std::uint32_t c = reader.u32();
    volume.grid.dims = {static_cast<int>(nx), static_cast<int>(ny),
                        static_cast<int>(nz)};
    volume.grid.origin.x() = reader.f64();
    volume.grid.origin.y() = reader.f64();
    volume.grid.origin.z() = reader.f64();
    volume.grid.voxel_size = reader.f64();
    volume.channels = static_cast<int>(c);
    volume.grid.validate();
    if (c < 1) {
        throw std::runtime_error(path + ": channel count must be >= 1");
    }
    const std::uint64_t count = static_cast<std::uint64_t>(nx) * ny * nz * c;
    if (reader.remaining() != count * 4) {
        throw std::runtime_error(path + ": sample count mismatch");
    }
    volume.data.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        volume.data[i] = reader.f32();
    }
    return volume;
}

void write_vxg(const std::string& path, const FeatureVolume& volume) {
    write_vxg(path, volume.grid, volume.channels, volume.data);
}

void write_vxg(const std::string& path, const OccupancyScores& scores) {
    write_vxg(path, scores.grid, 1, scores.data);
}

void write_vxg(const std::string& path, const TsdfVolume& volume) {
    const std::size_t n = volume.tsdf.size();
    std::vector<double> interleaved(n * 2);
    for (std::size_t j = 0; j < n; ++j) {
        interleaved[j * 2] = volume.tsdf[j];
        interleaved[j * 2 + 1] = volume.weight[j];
    }
    write_vxg(path, volume.grid, 2, interleaved);
}

void write_pfm(const std::string& path, const DepthMap& depth) {
    if (depth.width < 1 || depth.height < 1) {
        throw std::invalid_argument("write_pfm: empty depth map");
    }
    std::string bytes;
    bytes += "Pf\n";
    bytes += std::to_string(depth.width) + " " + std::to_string(depth.height) +
             "\n";
    bytes += "-1.0\n";
    // Scanlines run bottom-to-top.
    for (int y = depth.height - 1; y >= 0; --y) {
        for (int x = 0; x < depth.width; ++x) {
            append_f32(bytes, static_cast<float>(depth.at(x, y)));
        }
    }
    write_file(path, bytes);
}

DepthMap read_pfm(const std::string& path) {
    const std::string bytes = read_file(path);
    std::istringstream header(bytes);
    std::string kind;
    int width = 0;
    int height = 0;
    double scale = 0.0;
    header >> kind >> width >> height >> scale;
    if (!header || kind != "Pf" || width < 1 || height < 1 || scale >= 0.0) {
        throw std::runtime_error(path + " is not a little-endian Pf image");
    }
    // Pixel data starts after the single whitespace byte that ends the
    // scale token.
    std::size_t offset = static_cast<std::size_t>(header.tellg());
    if (offset >= bytes.size()) {
        throw std::runtime_error(path + ": missing pixel data");
    }
    offset += 1;
    const std::size_t count =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset != count * 4) {
        throw std::runtime_error(path + ": pixel count mismatch");
    }
    DepthMap depth(width, height);
    std::size_t pos = offset;
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            std::uint32_t v = 0;
            for (int i = 3; i >= 0; --i) {
                v = (v << 8) | static_cast<std::uint8_t>(
                                   bytes[pos + static_cast<std::size_t>(i)]);
            }
            depth.at(x, y) = std::bit_cast<float>(v);
            pos += 4;
        }
    }
    return depth;
}

CameraParams load_camera(const std::string& path) {
    const json doc = json::parse(read_file(path));
    const auto& k = doc.at("intrinsics");
    const auto& e = doc.at("extrinsics");
    if (k.size() != 12 || e.size() != 16) {
        throw std::runtime_error(path +
                                 ": intrinsics need 12 numbers, extrinsics 16");
    }
    CameraParams camera;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            camera.intrinsics(r, c) = k[r * 4 + c].get<double>();
        }
    }
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            camera.extrinsics(r, c) = e[r * 4 + c].get<double>();
        }
    }
    camera.image_width = doc.at("image_size")[0].get<int>();
    camera.image_height = doc.at("image_size")[1].get<int>();
    camera.feature_width = doc.at("feature_size")[0].get<int>();
    camera.feature_height = doc.at("feature_size")[1].get<int>();
    camera.validate();
    return camera;
}

void save_camera(const std::string& path, const CameraParams& camera) {
    json doc;
    json k = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            k.push_back(camera.intrinsics(r, c));
        }
    }
    json e = json::array();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            e.push_back(camera.extrinsics(r, c));
        }
    }
    doc["intrinsics"] = std::move(k);
    doc["extrinsics"] = std::move(e);
    doc["image_size"] = {camera.image_width, camera.image_height};
    doc["feature_size"] = {camera.feature_width, camera.feature_height};
    write_file(path, doc.dump(2) + "\n");
}

std::vector<CameraParams> load_camera_dir(const std::string& dir) {
    std::vector<CameraParams> cameras;
    for (const std::string& path : sorted_files(dir, ".json")) {
        cameras.push_back(load_camera(path));
    }
    return cameras;
}

VoxelGrid load_grid(const std::string& path) {
    const json doc = json::parse(read_file(path));
    VoxelGrid grid;
    const auto& dims = doc.at("dims");
    if (dims.size() != 3) {
        throw std::runtime_error(path + ": dims must have 3 entries");
    }
    grid.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    grid.voxel_size = doc.at("voxel_size").get<double>();
    grid.origin = vec3_from(doc, "origin");
    grid.validate();
    return grid;
}

void save_grid(const std::string& path, const VoxelGrid& grid) {
    json doc;
    doc["dims"] = {grid.dims[0], grid.dims[1], grid.dims[2]};
    doc["voxel_size"] = grid.voxel_size;
    doc["origin"] = vec3_to(grid.origin);
    write_file(path, doc.dump(2) + "\n");
}

Scene load_scene(const std::string& path) {
    const json doc = json::parse(read_file(path));
    Scene scene;
    for (const json& p : doc.at("primitives")) {
        const std::string type = p.at("type").get<std::string>();
        if (type == "plane") {
            Plane plane;
            plane.normal = vec3_from(p, "normal");
            plane.offset = p.at("offset").get<double>();
            scene.primitives.emplace_back(plane);
        } else if (type == "box") {
            BoxPrim box;
            box.center = vec3_from(p, "center");
            box.size = vec3_from(p, "size");
            scene.primitives.emplace_back(box);
        } else if (type == "sphere") {
            Sphere sphere;
            sphere.center = vec3_from(p, "center");
            sphere.radius = p.at("radius").get<double>();
            scene.primitives.emplace_back(sphere);
        } else {
            throw std::runtime_error(path + ": unknown primitive type " + type);
        }
    }
    scene.validate();
    return scene;
}

void save_scene(const std::string& path, const Scene& scene) {
    json list = json::array();
    for (const Primitive& primitive : scene.primitives) {
        json p;
        if (const Plane* plane = std::get_if<Plane>(&primitive)) {
            p["type"] = "plane";
            p["normal"] = vec3_to(plane->normal);
            p["offset"] = plane->offset;
        } else if (const BoxPrim* box = std::get_if<BoxPrim>(&primitive)) {
            p["type"] = "box";
            p["center"] = vec3_to(box->center);
            p["size"] = vec3_to(box->size);
        } else {
            const Sphere& sphere = std::get<Sphere>(primitive);
            p["type"] = "sphere";
            p["center"] = vec3_to(sphere.center);
            p["radius"] = sphere.radius;
        }
        list.push_back(std::move(p));
    }
    json doc;
    doc["primitives"] = std::move(list);
    write_file(path, doc.dump(2) + "\n");
}

WeightingMode parse_weighting(const std::string& name) {
    if (name == "angle_distance") {
        return WeightingMode::AngleDistance;
    }
    if (name == "unit") {
        return WeightingMode::Unit;
    }
    throw std::invalid_argument("unknown weighting mode: " + name);
}

DepthConvention parse_depth_convention(const std::string& name) {
    if (name == "ray") {
        return DepthConvention::Ray;
    }
    if (name == "z") {
        return DepthConvention::Z;
    }
    throw std::invalid_argument("unknown depth convention: " + name);
}

FeaturePattern parse_feature_pattern(const std::string& name) {
    if (name == "constant") {
        return FeaturePattern::Constant;
    }
    if (name == "ramp") {
        return FeaturePattern::Ramp;
    }
    if (name == "random") {
        return FeaturePattern::Random;
    }
    throw std::invalid_argument("unknown feature pattern: " + name);
}

AttachMode parse_attach_mode(const std::string& name) {
    if (name == "concat") {
        return AttachMode::Concat;
    }
    if (name == "add") {
        return AttachMode::Add;
    }
    if (name == "multiply") {
        return AttachMode::Multiply;
    }
    throw std::invalid_argument("unknown attach mode: " + name);
}

std::string to_string(WeightingMode mode) {
    return mode == WeightingMode::AngleDistance ? "angle_distance" : "unit";
}

std::string to_string(DepthConvention convention) {
    return convention == DepthConvention::Ray ? "ray" : "z";
}

std::string to_string(FeaturePattern pattern) {
    switch (pattern) {
        case FeaturePattern::Constant:
            return "constant";
        case FeaturePattern::Ramp:
            return "ramp";
        case FeaturePattern::Random:
            return "random";
    }
    return "ramp";
}

std::string to_string(AttachMode mode) {
    switch (mode) {
        case AttachMode::Concat:
            return "concat";
        case AttachMode::Add:
            return "add";
        case AttachMode::Multiply:
            return "multiply";
    }
    return "concat";
}

PipelineConfig load_config(const std::string& path, PipelineConfig defaults) {
    const json doc = json::parse(read_file(path));
    PipelineConfig config = std::move(defaults);
    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        const auto& dims = g.at("dims");
        config.grid.dims = {dims[0].get<int>(), dims[1].get<int>(),
                            dims[2].get<int>()};
        config.grid.voxel_size = g.at("voxel_size").get<double>();
        config.grid.origin = vec3_from(g, "origin");
    }
    if (doc.contains("theta")) {
        if (doc.at("theta").is_null()) {
            config.theta.reset();
        } else {
            config.theta = doc.at("theta").get<double>();
        }
    }
    if (doc.contains("truncate_distance")) {
        config.truncate_distance = doc.at("truncate_distance").get<double>();
    }
    if (doc.contains("weighting")) {
        config.weighting =
            parse_weighting(doc.at("weighting").get<std::string>());
    }
    if (doc.contains("depth_convention")) {
        config.depth_convention = parse_depth_convention(
            doc.at("depth_convention").get<std::string>());
    }
    if (doc.contains("nms_iou")) {
        config.nms_iou = doc.at("nms_iou").get<double>();
    }
    if (doc.contains("recall_positions")) {
        config.recall_positions = doc.at("recall_positions").get<int>();
    }
    if (doc.contains("loss_weights")) {
        const json& w = doc.at("loss_weights");
        if (w.contains("lambda")) {
            config.loss_weights.lambda = w.at("lambda").get<double>();
        }
        if (w.contains("alpha")) {
            config.loss_weights.alpha = w.at("alpha").get<double>();
        }
        if (w.contains("beta")) {
            config.loss_weights.beta = w.at("beta").get<double>();
        }
        if (w.contains("n_pos")) {
            config.loss_weights.n_pos = w.at("n_pos").get<int>();
        }
    }
    if (doc.contains("stride")) {
        config.stride = doc.at("stride").get<int>();
    }
    if (doc.contains("seed")) {
        config.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("feature_channels")) {
        config.feature_channels = doc.at("feature_channels").get<int>();
    }
    if (doc.contains("feature_pattern")) {
        config.feature_pattern = parse_feature_pattern(
            doc.at("feature_pattern").get<std::string>());
    }
    if (doc.contains("attach_mode")) {
        config.attach_mode =
            parse_attach_mode(doc.at("attach_mode").get<std::string>());
    }
    config.validate();
    return config;
}

void save_config(const std::string& path, const PipelineConfig& config) {
    json doc;
    doc["grid"] = {
        {"dims", {config.grid.dims[0], config.grid.dims[1], config.grid.dims[2]}},
        {"voxel_size", config.grid.voxel_size},
        {"origin", vec3_to(config.grid.origin)},
    };
    if (config.theta) {
        doc["theta"] = *config.theta;
    } else {
        doc["theta"] = nullptr;
    }
    doc["truncate_distance"] = config.truncate_distance;
    doc["weighting"] = to_string(config.weighting);
    doc["depth_convention"] = to_string(config.depth_convention);
    doc["nms_iou"] = config.nms_iou;
    doc["recall_positions"] = config.recall_positions;
    doc["loss_weights"] = {
        {"lambda", config.loss_weights.lambda},
        {"alpha", config.loss_weights.alpha},
        {"beta", config.loss_weights.beta},
        {"n_pos", config.loss_weights.n_pos},
    };
    doc["stride"] = config.stride;
    doc["seed"] = config.seed;
    doc["feature_channels"] = config.feature_channels;
    doc["feature_pattern"] = to_string(config.feature_pattern);
    doc["attach_mode"] = to_string(config.attach_mode);
    write_file(path, doc.dump(2) + "\n");
}

namespace {

Box3D box_from(const json& j) {
    Box3D box;
    box.center = vec3_from(j, "center");
    box.size = vec3_from(j, "size");
    box.yaw = j.value("yaw", 0.0);
    box.validate();
    return box;
}

json box_to(const Box3D& box) {
    json j;
    j["center"] = vec3_to(box.center);
    j["size"] = vec3_to(box.size);
    j["yaw"] = box.yaw;
    return j;
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        fn(json::parse(line));
    }
}

}  // namespace

std::vector<Detection> load_detections(const std::string& path) {
    std::vector<Detection> dets;
    for_each_line(path, [&](const json& j) {
        Detection det;
        det.box = box_from(j);
        det.label = j.at("label").get<int>();
        det.score = j.at("score").get<double>();
        dets.push_back(det);
    });
    return dets;
}

void save_detections(const std::string& path,
                     const std::vector<Detection>& dets) {
    std::string bytes;
    for (const Detection& det : dets) {
        json j = box_to(det.box);
        j["label"] = det.label;
        j["score"] = det.score;
        bytes += j.dump() + "\n";
    }
    write_file(path, bytes);
}

std::vector<LabeledBox> load_ground_truth(const std::string& path) {
    std::vector<LabeledBox> gts;
    for_each_line(path, [&](const json& j) {
        LabeledBox gt;
        gt.box = box_from(j);
        gt.label = j.at("label").get<int>();
        gts.push_back(gt);
    });
    return gts;
}

void save_ground_truth(const std::string& path,
                       const std::vector<LabeledBox>& gts) {
    std::string bytes;
    for (const LabeledBox& gt : gts) {
        json j = box_to(gt.box);
        j["label"] = gt.label;
        bytes += j.dump() + "\n";
    }
    write_file(path, bytes);
}

std::vector<DepthMap> load_depth_dir(const std::string& dir) {
    std::vector<DepthMap> depths;
    for (const std::string& path : sorted_files(dir, ".pfm")) {
        depths.push_back(read_pfm(path));
    }
    return depths;
}

}  // namespace voxelgeo
