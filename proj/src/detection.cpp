#include "voxelgeo/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace voxelgeo {

void Box3D::validate() const {
    if (!(size.x() > 0.0) || !(size.y() > 0.0) || !(size.z() > 0.0) ||
        !size.allFinite() || !center.allFinite() || !std::isfinite(yaw)) {
        throw std::invalid_argument("box extents must be positive and finite");
    }
}

double normalize_yaw(double yaw) {
    double r = std::remainder(yaw, 2.0 * M_PI);
    if (r <= -M_PI) {
        r += 2.0 * M_PI;
    }
    return r;
}

namespace {

using Vector2d = Eigen::Vector2d;

// Footprint corners in the xy plane, counter-clockwise.
std::array<Vector2d, 4> footprint(const Box3D& box) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double hx = 0.5 * box.size.x();
    const double hy = 0.5 * box.size.y();
    const Vector2d center(box.center.x(), box.center.y());
    const auto corner = [&](double dx, double dy) -> Vector2d {
        return center + Vector2d(c * dx - s * dy, s * dx + c * dy);
    };
    return {corner(-hx, -hy), corner(hx, -hy), corner(hx, hy),
            corner(-hx, hy)};
}

// Clips a convex polygon against the half-plane on the left of edge a->b.
std::vector<Vector2d> clip_against_edge(const std::vector<Vector2d>& poly,
                                        const Vector2d& a, const Vector2d& b) {
    std::vector<Vector2d> out;
    out.reserve(poly.size() + 1);
    const Vector2d edge = b - a;
    const auto side = [&](const Vector2d& p) {
        return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x());
    };
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vector2d& curr = poly[i];
        const Vector2d& next = poly[(i + 1) % n];
        const double sc = side(curr);
        const double sn = side(next);
        if (sc >= 0.0) {
            out.push_back(curr);
        }
        if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
            const double t = sc / (sc - sn);
            out.push_back(curr + t * (next - curr));
        }
    }
    return out;
}

double polygon_area(const std::vector<Vector2d>& poly) {
    if (poly.size() < 3) {
        return 0.0;
    }
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vector2d& p = poly[i];
        const Vector2d& q = poly[(i + 1) % poly.size()];
        twice += p.x() * q.y() - p.y() * q.x();
    }
    return 0.5 * std::abs(twice);
}

double interval_overlap(double center_a, double extent_a, double center_b,
                        double extent_b) {
    const double lo = std::max(center_a - 0.5 * extent_a,
                               center_b - 0.5 * extent_b);
    const double hi = std::min(center_a + 0.5 * extent_a,
                               center_b + 0.5 * extent_b);
    return std::max(hi - lo, 0.0);
}

double axis_aligned_intersection(const Box3D& a, const Box3D& b) {
    double volume = 1.0;
    for (int k = 0; k < 3 && volume > 0.0; ++k) {
        volume *= interval_overlap(a.center[k], a.size[k], b.center[k],
                                   b.size[k]);
    }
    return volume;
}

}  // namespace

double bev_overlap(const Box3D& a, const Box3D& b) {
    a.validate();
    b.validate();
    const auto fa = footprint(a);
    const auto fb = footprint(b);
    std::vector<Vector2d> poly(fa.begin(), fa.end());
    for (int i = 0; i < 4 && !poly.empty(); ++i) {
        poly = clip_against_edge(poly, fb[i], fb[(i + 1) % 4]);
    }
    return polygon_area(poly);
}

double iou3d(const Box3D& a, const Box3D& b) {
    a.validate();
    b.validate();
    const double yaw_a = normalize_yaw(a.yaw);
    const double yaw_b = normalize_yaw(b.yaw);

    double intersection;
    if (yaw_a == 0.0 && yaw_b == 0.0) {
        intersection = axis_aligned_intersection(a, b);
    } else {
        intersection =
            bev_overlap(a, b) * interval_overlap(a.center.z(), a.size.z(),
                                                 b.center.z(), b.size.z());
    }
    const double unioned = a.volume() + b.volume() - intersection;
    if (!(unioned > 0.0)) {
        throw std::invalid_argument("iou3d: degenerate boxes");
    }
    return std::clamp(intersection / unioned, 0.0, 1.0);
}

std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold) {
    if (iou_threshold < 0.0 || iou_threshold > 1.0) {
        throw std::invalid_argument("nms: threshold must be in [0, 1]");
    }
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (dets[i].score != dets[j].score) {
            return dets[i].score > dets[j].score;
        }
        return i < j;
    });

    std::vector<Detection> kept;
    for (const std::size_t i : order) {
        bool suppressed = false;
        for (const Detection& survivor : kept) {
            if (survivor.label == dets[i].label &&
                iou3d(survivor.box, dets[i].box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept.push_back(dets[i]);
        }
    }
    return kept;
}

namespace {

std::vector<double> recall_levels(int recall_positions) {
    std::vector<double> levels;
    if (recall_positions == 40) {
        for (int i = 1; i <= 40; ++i) {
            levels.push_back(static_cast<double>(i) / 40.0);
        }
    } else if (recall_positions == 11) {
        for (int i = 0; i <= 10; ++i) {
            levels.push_back(static_cast<double>(i) / 10.0);
        }
    } else {
        throw std::invalid_argument("recall_positions must be 11 or 40");
    }
    return levels;
}

}  // namespace

double average_precision(const std::vector<Detection>& dets,
                         const std::vector<LabeledBox>& gts,
                         double iou_threshold, int recall_positions,
                         const GtFilter& gt_filter) {
    const std::vector<double> levels = recall_levels(recall_positions);

    std::vector<LabeledBox> active;
    for (const LabeledBox& gt : gts) {
        if (!gt_filter || gt_filter(gt)) {
            active.push_back(gt);
        }
    }
    if (active.empty()) {
        return 0.0;
    }
    if (dets.empty()) {
        return 0.0;
    }

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (dets[i].score != dets[j].score) {
            return dets[i].score > dets[j].score;
        }
        return i < j;
    });

    std::vector<bool> matched(active.size(), false);
    std::vector<int> tp_flags;
    tp_flags.reserve(order.size());
    for (const std::size_t i : order) {
        double best_iou = -1.0;
        std::size_t best_gt = active.size();
        for (std::size_t g = 0; g < active.size(); ++g) {
            if (matched[g] || active[g].label != dets[i].label) {
                continue;
            }
            const double overlap = iou3d(dets[i].box, active[g].box);
            if (overlap > best_iou) {
                best_iou = overlap;
                best_gt = g;
            }
        }
        if (best_gt < active.size() && best_iou >= iou_threshold) {
            matched[best_gt] = true;
            tp_flags.push_back(1);
        } else {
            tp_flags.push_back(0);
        }
    }

    // Precision/recall after each detection, then interpolate: precision at
    // recall r is the maximum precision among operating points with
    // recall >= r.
    const double num_gt = static_cast<double>(active.size());
    std::vector<double> precisions;
    std::vector<double> recalls;
    int tp = 0;
    for (std::size_t k = 0; k < tp_flags.size(); ++k) {
        tp += tp_flags[k];
        precisions.push_back(static_cast<double>(tp) /
                             static_cast<double>(k + 1));
        recalls.push_back(static_cast<double>(tp) / num_gt);
    }

    double sum = 0.0;
    for (const double level : levels) {
        double best = 0.0;
        for (std::size_t k = 0; k < recalls.size(); ++k) {
            if (recalls[k] >= level) {
                best = std::max(best, precisions[k]);
            }
        }
        sum += best;
    }
    return sum / static_cast<double>(levels.size());
}

ApReport mean_ap(const std::vector<Detection>& dets,
                 const std::vector<LabeledBox>& gts, double iou_threshold,
                 int recall_positions, const GtFilter& gt_filter) {
    std::set<int> classes;
    for (const LabeledBox& gt : gts) {
        if (!gt_filter || gt_filter(gt)) {
            classes.insert(gt.label);
        }
    }
    if (classes.empty()) {
        throw std::invalid_argument("mean_ap: no ground-truth boxes");
    }

    ApReport report;
    double sum = 0.0;
    for (const int label : classes) {
        std::vector<Detection> class_dets;
        for (const Detection& det : dets) {
            if (det.label == label) {
                class_dets.push_back(det);
            }
        }
        std::vector<LabeledBox> class_gts;
        for (const LabeledBox& gt : gts) {
            if (gt.label == label) {
                class_gts.push_back(gt);
            }
        }
        const double ap = average_precision(class_dets, class_gts,
                                            iou_threshold, recall_positions,
                                            gt_filter);
        report.per_class[label] = ap;
        sum += ap;
    }
    report.mean_ap = sum / static_cast<double>(classes.size());
    return report;
}

}  // namespace voxelgeo
