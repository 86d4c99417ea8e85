// Gate suite for the library's shipped guarantees. Each check prints exactly
// one [PASS]/[FAIL] line on stdout (details on stderr) and the process exits
// non-zero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cameras.hpp"
#include "oracles.hpp"
#include "voxelgeo/detection.hpp"
#include "voxelgeo/geometry.hpp"
#include "voxelgeo/io.hpp"
#include "voxelgeo/losses.hpp"
#include "voxelgeo/occupancy.hpp"
#include "voxelgeo/parallel.hpp"
#include "voxelgeo/pipeline.hpp"
#include "voxelgeo/render.hpp"
#include "voxelgeo/scene.hpp"
#include "voxelgeo/tsdf.hpp"
#include "voxelgeo/volume.hpp"

namespace {

using namespace voxelgeo;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool fail(const std::string& message) {
    std::cerr << "  " << message << "\n";
    return false;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// --- project a random frustum point, invert, compare -----------------------

bool projection_round_trip() {
    const auto start = Clock::now();
    const CameraParams camera = fixtures::look_at(
        fixtures::pinhole(300.0, 320.0, 160.0, 120.0, 320, 240, 80, 60),
        Vector3d(1.0, -2.0, 0.5), Vector3d(0.2, 0.4, 3.0));
    const double scale_u =
        static_cast<double>(camera.image_width) / camera.feature_width;
    const double scale_v =
        static_cast<double>(camera.image_height) / camera.feature_height;

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = unit(rng) * camera.image_width;
        const double v = unit(rng) * camera.image_height;
        const double depth = 0.3 + 9.7 * unit(rng);
        const Vector3d point =
            backproject_pixel(camera, u, v, depth, DepthConvention::Z);
        const PixelCoord pc = project_point(camera, point);
        const Vector3d back = backproject_pixel(
            camera, pc.u * scale_u, pc.v * scale_v, pc.cam_depth,
            DepthConvention::Z);
        worst = std::max(worst, (back - point).norm());
    }
    const double elapsed = seconds_since(start);
    if (worst >= 1e-6) {
        return fail("round-trip error " + std::to_string(worst));
    }
    if (elapsed >= 1.0) {
        return fail("took " + std::to_string(elapsed) + " s");
    }
    return true;
}

// --- masked multi-view mean against a naive triple loop --------------------

bool multiview_aggregation_reference() {
    VoxelGrid grid;
    grid.dims = {8, 8, 8};
    grid.voxel_size = 0.25;
    grid.origin = Vector3d(-1.0, -1.0, 1.0);

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(40.0, 40.0, 20.0, 15.0, 40, 30, 20, 15),
        Vector3d(0.0, 0.0, 2.0), 2.8, 0.4, 4);
    std::vector<ViewSample> views;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const FeatureMap map =
            make_feature_map(FeaturePattern::Random, 20, 15, 3,
                             static_cast<int>(i), 99);
        views.push_back(sample_view(map, cameras[i], grid));
    }

    const FeatureVolume volume = aggregate(views);
    const oracles::AggregateReference ref =
        oracles::aggregate_reference(views);
    if (volume.data.size() != ref.data.size()) {
        return fail("size mismatch");
    }
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        if (volume.data[i] != ref.data[i]) {
            return fail("value mismatch at " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < ref.coverage.size(); ++i) {
        if (volume.coverage[i] != ref.coverage[i]) {
            return fail("coverage mismatch at " + std::to_string(i));
        }
    }

    std::vector<ViewSample> reversed(views.rbegin(), views.rend());
    const FeatureVolume permuted = aggregate(reversed);
    for (std::size_t i = 0; i < volume.data.size(); ++i) {
        if (!close(permuted.data[i], volume.data[i], 1e-9)) {
            return fail("permutation drift at " + std::to_string(i));
        }
    }
    return true;
}

// --- per-voxel point counting against exhaustive membership ----------------

bool occupancy_scoring_reference() {
    VoxelGrid grid;
    grid.dims = {4, 4, 4};
    grid.voxel_size = 0.5;
    grid.origin = Vector3d(-1.0, -1.0, -1.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-1.5, 1.5);
    PointCloud cloud;
    for (int i = 0; i < 1000; ++i) {
        cloud.points.emplace_back(coord(rng), coord(rng), coord(rng));
    }

    const std::vector<double> scores = score_view(cloud, grid);
    const std::vector<double> ref = oracles::score_counts(cloud.points, grid);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (scores[i] != ref[i]) {
            return fail("score mismatch at voxel " + std::to_string(i));
        }
    }

    const Vector3d hi = grid.origin + grid.voxel_size *
                                          Vector3d(grid.dims[0], grid.dims[1],
                                                   grid.dims[2]);
    std::int64_t inside = 0;
    for (const Vector3d& p : cloud.points) {
        if (p.x() >= grid.origin.x() && p.x() < hi.x() &&
            p.y() >= grid.origin.y() && p.y() < hi.y() &&
            p.z() >= grid.origin.z() && p.z() < hi.z()) {
            ++inside;
        }
    }
    if (inside == 0 || inside == 1000) {
        return fail("degenerate point placement");
    }
    double total = 0.0;
    for (const double s : scores) {
        total += s;
    }
    const double expected = static_cast<double>(inside) / 1000.0;
    if (!close(total, expected, 1e-12)) {
        return fail("total " + std::to_string(total) + " vs in-grid fraction " +
                    std::to_string(expected));
    }
    if (total > 1.0 + 1e-12) {
        return fail("total above 1");
    }
    return true;
}

// --- bias 1 with all-zero scores must be an exact no-op --------------------

bool attention_identity_bias_one() {
    VoxelGrid grid;
    grid.dims = {6, 5, 4};
    grid.voxel_size = 0.3;
    grid.origin = Vector3d(-0.9, -0.75, 1.0);

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(30.0, 30.0, 16.0, 12.0, 32, 24), Vector3d(0.0, 0.0, 1.6),
        2.4, 0.5, 3);
    std::vector<ViewSample> views;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        views.push_back(sample_view(
            make_feature_map(FeaturePattern::Random, 32, 24, 2,
                             static_cast<int>(i), 5),
            cameras[i], grid));
    }
    const FeatureVolume volume = aggregate(views);

    OccupancyScores zeros;
    zeros.grid = grid;
    zeros.data.assign(static_cast<std::size_t>(grid.num_voxels()), 0.0);
    const FeatureVolume attended = apply_attention(volume, zeros, 1.0);
    if (attended.data != volume.data) {
        return fail("feature data changed");
    }
    if (attended.coverage != volume.coverage) {
        return fail("coverage changed");
    }
    return true;
}

// --- fused distance field against a per-view scalar oracle -----------------

bool tsdf_fusion_reference() {
    VoxelGrid grid;
    grid.dims = {12, 12, 12};
    grid.voxel_size = 0.3;
    grid.origin = Vector3d(-1.8, -1.8, 0.2);
    const double truncate = 0.9;

    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto draw = [&](double lo, double hi) {
        return lo + (hi - lo) * unit(rng);
    };
    Scene scene;
    Sphere sphere;
    sphere.center = Vector3d(draw(-0.6, 0.6), draw(-0.6, 0.6), draw(0.9, 1.3));
    sphere.radius = draw(0.35, 0.6);
    BoxPrim box;
    box.center = Vector3d(draw(-0.7, 0.7), draw(-0.7, 0.7), draw(0.7, 1.1));
    box.size = Vector3d(draw(0.5, 0.9), draw(0.5, 0.9), draw(0.5, 0.9));
    Plane floor;
    floor.normal = Vector3d(0.0, 0.0, 1.0);
    floor.offset = 0.3;
    scene.primitives = {sphere, box, floor};

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(60.0, 60.0, 32.0, 24.0, 64, 48),
        Vector3d(0.0, 0.0, 1.1), 2.4, 0.8, 8);
    std::vector<DepthMap> depths;
    for (const CameraParams& camera : cameras) {
        depths.push_back(render_depth(scene, camera, DepthConvention::Ray));
    }

    const TsdfVolume fused = fuse(depths, cameras, grid, truncate,
                                  WeightingMode::AngleDistance,
                                  DepthConvention::Ray);

    std::int64_t unobserved = 0;
    for (int x = 0; x < grid.dims[0]; ++x) {
        for (int y = 0; y < grid.dims[1]; ++y) {
            for (int z = 0; z < grid.dims[2]; ++z) {
                const std::int64_t j = grid.linear_index(x, y, z);
                if (fused.tsdf[j] < -1.0 || fused.tsdf[j] > 1.0) {
                    return fail("tsdf out of bounds at " + std::to_string(j));
                }
                double sw = 0.0;
                double swt = 0.0;
                for (std::size_t v = 0; v < cameras.size(); ++v) {
                    const auto c = oracles::tsdf_contribution(
                        cameras[v], depths[v], grid.center(x, y, z), truncate,
                        true, false);
                    if (c) {
                        sw += c->w;
                        swt += c->w * c->t;
                    }
                }
                if (sw > 0.0) {
                    const double expected = swt / sw;
                    if (!close(fused.tsdf[j], expected,
                               1e-9 * std::max(1.0, std::abs(expected)))) {
                        return fail("fused value off at " + std::to_string(j));
                    }
                    if (!close(fused.weight[j], sw,
                               1e-9 * std::max(1.0, sw))) {
                        return fail("fused weight off at " + std::to_string(j));
                    }
                } else {
                    ++unobserved;
                    if (fused.tsdf[j] != 1.0 || fused.weight[j] != 0.0) {
                        return fail("unobserved voxel rewritten at " +
                                    std::to_string(j));
                    }
                }
            }
        }
    }
    if (unobserved < 1) {
        return fail("no unobserved voxel in the test grid");
    }
    return true;
}

// --- metric fidelity of a fused plane --------------------------------------

bool tsdf_plane_fidelity() {
    const auto start = Clock::now();
    Scene scene;
    Plane wall;
    wall.normal = Vector3d(1.0, 0.0, 0.0);  // solid half-space x < 0
    wall.offset = 0.0;
    scene.primitives = {wall};

    const CameraParams base =
        fixtures::pinhole(160.0, 160.0, 128.0, 96.0, 256, 192);
    const std::vector<CameraParams> cameras = {
        fixtures::look_at(base, Vector3d(8.0, 0.0, 0.0), Vector3d::Zero()),
        fixtures::look_at(base, Vector3d(5.0, 5.0, 0.2), Vector3d::Zero()),
    };
    std::vector<DepthMap> depths;
    for (const CameraParams& camera : cameras) {
        depths.push_back(render_depth(scene, camera, DepthConvention::Ray));
    }

    VoxelGrid grid;
    grid.dims = {40, 40, 16};
    grid.voxel_size = 0.16;
    grid.origin = Vector3d(-3.2, -3.2, -1.28);
    const double truncate = 3.0 * grid.voxel_size;

    const TsdfVolume fused = fuse(depths, cameras, grid, truncate,
                                  WeightingMode::Unit, DepthConvention::Ray);

    const double band_tol = 0.16 * std::sqrt(3.0);
    std::int64_t beyond = 0;
    std::int64_t saturated = 0;
    for (int x = 0; x < grid.dims[0]; ++x) {
        for (int y = 0; y < grid.dims[1]; ++y) {
            for (int z = 0; z < grid.dims[2]; ++z) {
                const std::int64_t j = grid.linear_index(x, y, z);
                const double sdf = grid.center(x, y, z).x();
                if (std::abs(sdf) <= truncate) {
                    if (fused.weight[j] <= 0.0) {
                        return fail("band voxel unobserved at " +
                                    std::to_string(j));
                    }
                    if (std::abs(fused.tsdf[j] * truncate - sdf) > band_tol) {
                        return fail("band error " +
                                    std::to_string(std::abs(
                                        fused.tsdf[j] * truncate - sdf)) +
                                    " at x=" + std::to_string(sdf));
                    }
                } else {
                    ++beyond;
                    const double want = sdf > 0.0 ? 1.0 : -1.0;
                    if (fused.tsdf[j] == want) {
                        ++saturated;
                    }
                }
            }
        }
    }
    if (static_cast<double>(saturated) < 0.99 * static_cast<double>(beyond)) {
        return fail("only " + std::to_string(saturated) + " of " +
                    std::to_string(beyond) + " beyond-band voxels saturated");
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 5.0) {
        return fail("took " + std::to_string(elapsed) + " s");
    }
    return true;
}

// --- occupancy evidence concentrates on the object surface -----------------

bool attention_surface_discrimination() {
    Scene scene;
    BoxPrim object;
    object.center = Vector3d(0.0, 0.0, 1.0);
    object.size = Vector3d(1.0, 0.8, 0.7);
    scene.primitives = {object};

    VoxelGrid grid;
    grid.dims = {12, 12, 8};
    grid.voxel_size = 0.25;
    grid.origin = Vector3d(-1.5, -1.5, 0.1);

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(70.0, 70.0, 48.0, 36.0, 96, 72),
        Vector3d(0.0, 0.0, 1.0), 2.2, 0.7, 8);
    const OccupancyScores scores =
        analytic_occupancy(scene, grid, cameras, 1, DepthConvention::Ray);

    const double theta = 0.0;  // multi-view bias
    double band_sum = 0.0;
    std::int64_t band_count = 0;
    double far_sum = 0.0;
    std::int64_t far_count = 0;
    for (int x = 0; x < grid.dims[0]; ++x) {
        for (int y = 0; y < grid.dims[1]; ++y) {
            for (int z = 0; z < grid.dims[2]; ++z) {
                const double sdf = analytic_sdf(scene, grid.center(x, y, z));
                const std::int64_t j = grid.linear_index(x, y, z);
                if (std::abs(sdf) <= 0.5 * grid.voxel_size) {
                    band_sum += scores.data[j] + theta;
                    ++band_count;
                } else if (sdf >= 3.0 * grid.voxel_size) {
                    far_sum += scores.data[j] + theta;
                    ++far_count;
                }
            }
        }
    }
    if (band_count == 0 || far_count == 0) {
        return fail("degenerate band/far split");
    }
    const double band_mean = band_sum / static_cast<double>(band_count);
    const double far_mean = far_sum / static_cast<double>(far_count);
    if (!(band_mean > far_mean)) {
        return fail("band mean " + std::to_string(band_mean) +
                    " not above far mean " + std::to_string(far_mean));
    }
    return true;
}

// --- analytic gradients against central differences ------------------------

bool loss_gradient_checks() {
    const double h = 1e-5;
    const auto grad_ok = [&](double fd, double analytic) {
        return std::abs(fd - analytic) <=
               1e-4 * std::max(1.0, std::abs(analytic));
    };
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto draw = [&](double lo, double hi) {
        return lo + (hi - lo) * unit(rng);
    };

    // Focal loss over prediction probability.
    const double gammas[] = {0.0, 0.5, 1.0, 2.0, 3.0};
    for (int i = 0; i < 100; ++i) {
        const double p = draw(0.05, 0.95);
        const double gamma = gammas[i % 5];
        const double alpha = draw(0.05, 0.95);
        const int target = i % 2;
        const double fd = (focal_loss(p + h, target, gamma, alpha) -
                           focal_loss(p - h, target, gamma, alpha)) /
                          (2.0 * h);
        if (!grad_ok(fd, focal_loss_grad(p, target, gamma, alpha))) {
            return fail("focal gradient off at p=" + std::to_string(p));
        }
    }

    // Smooth L1 away from the quadratic/linear seam.
    const double betas[] = {0.4, 1.0, 2.0};
    for (int i = 0; i < 100; ++i) {
        const double beta = betas[i % 3];
        double x = 0.0;
        do {
            x = draw(-3.0, 3.0);
        } while (std::abs(std::abs(x) - beta) < 0.05);
        const double fd =
            (smooth_l1(x + h, beta) - smooth_l1(x - h, beta)) / (2.0 * h);
        if (!grad_ok(fd, smooth_l1_grad(x, beta))) {
            return fail("smooth-l1 gradient off at x=" + std::to_string(x));
        }
    }

    // Cross entropy via sum-preserving probability shifts.
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p(4);
        double sum = 0.0;
        for (double& value : p) {
            value = draw(0.1, 1.0);
            sum += value;
        }
        for (double& value : p) {
            value /= sum;
        }
        const int target = i % 4;
        const int other = (target + 1) % 4;
        std::vector<double> up = p;
        up[target] += h;
        up[other] -= h;
        std::vector<double> down = p;
        down[target] -= h;
        down[other] += h;
        const double fd = (cross_entropy(up, target) -
                           cross_entropy(down, target)) /
                          (2.0 * h);
        const std::vector<double> g = cross_entropy_grad(p, target);
        if (!grad_ok(fd, g[target] - g[other])) {
            return fail("cross-entropy gradient off at trial " +
                        std::to_string(i));
        }
    }

    // Overlap loss for axis-aligned pairs away from tangency and ties.
    int accepted = 0;
    int attempts = 0;
    while (accepted < 100 && attempts < 20000) {
        ++attempts;
        Box3D pred;
        pred.center = Vector3d(draw(-0.5, 0.5), draw(-0.5, 0.5),
                               draw(-0.5, 0.5));
        pred.size = Vector3d(draw(0.7, 1.5), draw(0.7, 1.5), draw(0.7, 1.5));
        Box3D target;
        target.center = Vector3d(draw(-0.5, 0.5), draw(-0.5, 0.5),
                                 draw(-0.5, 0.5));
        target.size = Vector3d(draw(0.7, 1.5), draw(0.7, 1.5), draw(0.7, 1.5));
        bool usable = true;
        for (int a = 0; a < 3 && usable; ++a) {
            const double plo = pred.center[a] - 0.5 * pred.size[a];
            const double phi = pred.center[a] + 0.5 * pred.size[a];
            const double tlo = target.center[a] - 0.5 * target.size[a];
            const double thi = target.center[a] + 0.5 * target.size[a];
            usable = std::min(phi, thi) - std::max(plo, tlo) >= 0.1 &&
                     std::abs(plo - tlo) >= 0.03 && std::abs(phi - thi) >= 0.03;
        }
        if (!usable) {
            continue;
        }
        ++accepted;
        const BoxGrad g = iou3d_loss_grad(pred, target);
        for (int a = 0; a < 3; ++a) {
            Box3D up = pred;
            Box3D down = pred;
            up.center[a] += h;
            down.center[a] -= h;
            double fd = (iou3d_loss(up, target) - iou3d_loss(down, target)) /
                        (2.0 * h);
            if (!grad_ok(fd, g.d_center[a])) {
                return fail("overlap-loss center gradient off, axis " +
                            std::to_string(a));
            }
            up = pred;
            down = pred;
            up.size[a] += h;
            down.size[a] -= h;
            fd = (iou3d_loss(up, target) - iou3d_loss(down, target)) /
                 (2.0 * h);
            if (!grad_ok(fd, g.d_size[a])) {
                return fail("overlap-loss size gradient off, axis " +
                            std::to_string(a));
            }
        }
    }
    if (accepted < 100) {
        return fail("sampler produced only " + std::to_string(accepted) +
                    " overlap pairs");
    }

    // Depth error gradients, valid and invalid pixels alike.
    for (int i = 0; i < 25; ++i) {
        DepthMap target(4, 3);
        DepthMap pred(4, 3);
        for (std::size_t jj = 0; jj < target.data.size(); ++jj) {
            target.data[jj] = jj % 4 == 3 ? 0.0 : draw(0.5, 2.0);
            const double offset = (jj % 2 == 0 ? 1.0 : -1.0) * draw(0.25, 0.9);
            pred.data[jj] = target.data[jj] + offset;
        }
        const auto mask = valid_depth_mask(target);
        const std::vector<double> g = depth_l1_grad(pred, target, mask);
        for (std::size_t jj = 0; jj < pred.data.size(); ++jj) {
            DepthMap up = pred;
            DepthMap down = pred;
            up.data[jj] += h;
            down.data[jj] -= h;
            const double fd = (depth_l1(up, target, mask) -
                               depth_l1(down, target, mask)) /
                              (2.0 * h);
            if (!grad_ok(fd, g[jj])) {
                return fail("depth gradient off at pixel " +
                            std::to_string(jj));
            }
        }
    }

    // The combined objective reproduces its worked arithmetic exactly.
    LossComponents indoor;
    indoor.cls = 1.0;
    indoor.box = 2.0;
    indoor.ctr = 0.5;
    indoor.dir = 0.7;  // ignored by the indoor head
    indoor.depth = 1.0;
    LossWeights weights;  // lambda 0.5, alpha 2, beta 0.2, n_pos 1
    if (total_loss(indoor, weights, DetectionHead::Indoor) != 4.0) {
        return fail("indoor worked example mismatch");
    }
    LossComponents outdoor;
    outdoor.cls = 1.0;
    outdoor.box = 1.0;
    outdoor.ctr = 0.9;  // ignored by the outdoor head
    outdoor.dir = 1.0;
    outdoor.depth = 1.0;
    LossWeights halved = weights;
    halved.n_pos = 2;
    if (total_loss(outdoor, halved, DetectionHead::Outdoor) != 2.1) {
        return fail("outdoor worked example mismatch");
    }
    return true;
}

// --- suppression and ranking metrics against brute force -------------------

bool detection_metrics_reference() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(5000 + trial);
        const auto draw = [&](double lo, double hi) {
            return lo + (hi - lo) * unit(rng);
        };
        const int num_gts = 1 + static_cast<int>(unit(rng) * 6) % 6;
        std::vector<LabeledBox> gts;
        for (int g = 0; g < num_gts; ++g) {
            LabeledBox gt;
            gt.box.center = Vector3d(2.2 * g, 1.7 * (g % 2), 0.4 * (g % 3));
            gt.box.size = Vector3d(draw(0.6, 1.6), draw(0.6, 1.6),
                                   draw(0.6, 1.6));
            gt.box.yaw = g % 2 == 0 ? 0.0 : draw(-1.2, 1.2);
            gt.label = g % 2;
            gts.push_back(gt);
        }
        const int num_dets = 3 + static_cast<int>(unit(rng) * 8) % 8;
        std::vector<Detection> dets;
        for (int i = 0; i < num_dets; ++i) {
            const LabeledBox& anchor = gts[i % gts.size()];
            Detection det;
            det.box.center =
                anchor.box.center + Vector3d(draw(-0.5, 0.5), draw(-0.5, 0.5),
                                             draw(-0.3, 0.3));
            det.box.size = Vector3d(draw(0.6, 1.6), draw(0.6, 1.6),
                                    draw(0.6, 1.6));
            det.box.yaw = i % 3 == 0 ? 0.0 : draw(-1.2, 1.2);
            det.label = i % 2;
            det.score = 0.95 - 0.06 * i;
            dets.push_back(det);
        }

        const double nms_threshold = trial % 2 == 0 ? 0.25 : 0.5;
        const std::vector<Detection> kept = nms(dets, nms_threshold);
        const std::vector<Detection> kept_ref =
            oracles::nms_reference(dets, nms_threshold);
        if (kept.size() != kept_ref.size()) {
            return fail("suppression count mismatch in trial " +
                        std::to_string(trial));
        }
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (kept[i].box.center != kept_ref[i].box.center ||
                kept[i].box.size != kept_ref[i].box.size ||
                kept[i].box.yaw != kept_ref[i].box.yaw ||
                kept[i].label != kept_ref[i].label ||
                kept[i].score != kept_ref[i].score) {
                return fail("suppression mismatch in trial " +
                            std::to_string(trial));
            }
        }

        const int positions = trial % 3 == 0 ? 11 : 40;
        const double ap = average_precision(dets, gts, 0.25, positions);
        const double ap_ref =
            oracles::ap_reference(dets, gts, 0.25, positions);
        if (ap != ap_ref) {
            return fail("ranking metric mismatch in trial " +
                        std::to_string(trial));
        }
    }

    // Worked ranking example: hit, miss, hit against two ground truths.
    std::vector<LabeledBox> gts(2);
    gts[0].box.center = Vector3d::Zero();
    gts[0].label = 1;
    gts[1].box.center = Vector3d(4.0, 0.0, 0.0);
    gts[1].label = 1;
    std::vector<Detection> dets(3);
    dets[0].box.center = Vector3d::Zero();
    dets[0].label = 1;
    dets[0].score = 0.9;
    dets[1].box.center = Vector3d(8.0, 0.0, 0.0);
    dets[1].label = 1;
    dets[1].score = 0.8;
    dets[2].box.center = Vector3d(4.0, 0.0, 0.0);
    dets[2].label = 1;
    dets[2].score = 0.7;
    const double ap = average_precision(dets, gts, 0.25, 40);
    if (!close(ap, 5.0 / 6.0, 1e-12)) {
        return fail("worked ranking example gave " + std::to_string(ap));
    }

    // Rotated overlap against Monte-Carlo integration.
    Box3D axis;
    Box3D twisted;
    twisted.yaw = std::numbers::pi / 4.0;
    const double exact = iou3d(axis, twisted);
    const double sampled = oracles::mc_iou(axis, twisted, 10000000, 424242);
    if (!close(exact, sampled, 1e-3)) {
        return fail("rotated overlap " + std::to_string(exact) +
                    " vs sampled " + std::to_string(sampled));
    }
    return true;
}

// --- bitwise reruns and thread-count independence --------------------------

bool pipeline_determinism() {
    Scene scene;
    Sphere sphere;
    sphere.center = Vector3d(0.2, -0.3, 1.0);
    sphere.radius = 0.6;
    BoxPrim box;
    box.center = Vector3d(-0.8, 0.6, 0.7);
    box.size = Vector3d(0.7, 0.9, 1.0);
    Plane floor;
    floor.normal = Vector3d(0.0, 0.0, 1.0);
    floor.offset = 0.2;
    scene.primitives = {sphere, box, floor};

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(130.0, 130.0, 80.0, 60.0, 160, 120, 40, 30),
        Vector3d(0.0, 0.0, 1.0), 3.0, 1.2, 6);

    PipelineConfig config;
    config.grid.dims = {24, 24, 12};
    config.grid.voxel_size = 0.2;
    config.grid.origin = Vector3d(-2.4, -2.4, 0.0);
    config.stride = 2;
    config.seed = 2026;
    config.feature_channels = 4;
    config.feature_pattern = FeaturePattern::Random;

    const fs::path dir_a = fs::temp_directory_path() / "voxelgeo_gate_run_a";
    const fs::path dir_b = fs::temp_directory_path() / "voxelgeo_gate_run_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);

    const PipelineResult first = run_pipeline(scene, cameras, config);
    const PipelineResult second = run_pipeline(scene, cameras, config);
    write_pipeline_outputs(first, dir_a.string());
    write_pipeline_outputs(second, dir_b.string());

    const auto slurp = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    for (const char* name :
         {"feature_volume.vxg", "tsdf.vxg", "scores.vxg"}) {
        const std::string a = slurp(dir_a / name);
        const std::string b = slurp(dir_b / name);
        if (a.empty() || a != b) {
            fs::remove_all(dir_a);
            fs::remove_all(dir_b);
            return fail(std::string("rerun bytes differ for ") + name);
        }
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const int previous = num_threads();
    set_num_threads(1);
    const PipelineResult single = run_pipeline(scene, cameras, config);
    set_num_threads(8);
    const PipelineResult pooled = run_pipeline(scene, cameras, config);
    set_num_threads(previous);

    if (single.output.data.size() != pooled.output.data.size()) {
        return fail("thread runs disagree on shape");
    }
    for (std::size_t i = 0; i < single.output.data.size(); ++i) {
        if (!close(single.output.data[i], pooled.output.data[i], 1e-9)) {
            return fail("thread drift in features at " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < single.tsdf.tsdf.size(); ++i) {
        if (!close(single.tsdf.tsdf[i], pooled.tsdf.tsdf[i], 1e-9)) {
            return fail("thread drift in tsdf at " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < single.scores.data.size(); ++i) {
        if (!close(single.scores.data[i], pooled.scores.data[i], 1e-9)) {
            return fail("thread drift in scores at " + std::to_string(i));
        }
    }
    return true;
}

// --- full indoor-scale run inside the time budget ---------------------------

bool pipeline_runtime_budget() {
    Scene scene;
    Sphere sphere;
    sphere.center = Vector3d(0.0, 0.0, 0.1);
    sphere.radius = 0.8;
    BoxPrim box;
    box.center = Vector3d(1.2, -0.9, -0.5);
    box.size = Vector3d(1.2, 1.0, 0.9);
    Plane floor;
    floor.normal = Vector3d(0.0, 0.0, 1.0);
    floor.offset = -1.28;
    scene.primitives = {sphere, box, floor};

    const std::vector<CameraParams> cameras = fixtures::ring(
        fixtures::pinhole(260.0, 260.0, 160.0, 120.0, 320, 240, 80, 60),
        Vector3d::Zero(), 4.0, 1.5, 20);

    PipelineConfig config = indoor_config();
    config.stride = 2;
    config.seed = 7;
    config.feature_pattern = FeaturePattern::Random;

    const auto start = Clock::now();
    const PipelineResult result = run_pipeline(scene, cameras, config);
    const double elapsed = seconds_since(start);
    if (elapsed >= 30.0) {
        return fail("took " + std::to_string(elapsed) + " s");
    }
    const bool nonzero =
        std::any_of(result.output.data.begin(), result.output.data.end(),
                    [](double v) { return v != 0.0; });
    if (!nonzero) {
        return fail("run produced an all-zero volume");
    }
    return true;
}

}  // namespace

int main() {
    struct Check {
        const char* name;
        bool (*run)();
    };
    const Check checks[] = {
        {"projection-round-trip", projection_round_trip},
        {"multiview-aggregation-reference", multiview_aggregation_reference},
        {"occupancy-scoring-reference", occupancy_scoring_reference},
        {"attention-identity-bias-one", attention_identity_bias_one},
        {"tsdf-fusion-reference", tsdf_fusion_reference},
        {"tsdf-plane-fidelity", tsdf_plane_fidelity},
        {"attention-surface-discrimination", attention_surface_discrimination},
        {"loss-gradient-checks", loss_gradient_checks},
        {"detection-metrics-reference", detection_metrics_reference},
        {"pipeline-determinism", pipeline_determinism},
        {"pipeline-runtime-budget", pipeline_runtime_budget},
    };

    int failures = 0;
    for (const Check& check : checks) {
        bool ok = false;
        try {
            ok = check.run();
        } catch (const std::exception& error) {
            std::cerr << "  unexpected exception: " << error.what() << "\n";
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << check.name << std::endl;
        if (!ok) {
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
