#pragma once

#include <functional>
#include <map>
#include <vector>

#include "voxelgeo/geometry.hpp"

namespace voxelgeo {

/// Oriented 3D bounding box: center, full extents, rotation about z.
struct Box3D {
    Vector3d center = Vector3d::Zero();
    Vector3d size = Vector3d::Ones();
    double yaw = 0.0;

    /// Throws std::invalid_argument unless all extents are positive and
    /// finite.
    void validate() const;
    double volume() const { return size.x() * size.y() * size.z(); }
};

struct Detection {
    Box3D box;
    int label = 0;
    double score = 0.0;
};

struct LabeledBox {
    Box3D box;
    int label = 0;
};

/// Maps an angle to the equivalent value in (-pi, pi].
double normalize_yaw(double yaw);

/// Area of the intersection of the two boxes' z-axis-aligned footprints in
/// the xy plane (convex quadrilateral clipping).
double bev_overlap(const Box3D& a, const Box3D& b);

/// Intersection-over-union of two boxes. Uses the axis-aligned closed form
/// when both yaws are 0, otherwise the xy footprint overlap times the
/// z-interval overlap. Throws std::invalid_argument on degenerate boxes.
double iou3d(const Box3D& a, const Box3D& b);

/// Greedy non-maximum suppression: detections sorted by descending score
/// (ties by lower input index), each kept iff its IoU with every
/// already-kept detection of the same class is <= the threshold. Returns
/// survivors in that sorted order.
std::vector<Detection> nms(const std::vector<Detection>& dets,
                           double iou_threshold);

/// Optional ground-truth filter; boxes failing the predicate are removed
/// before matching (detections that would have matched them count as false
/// positives).
using GtFilter = std::function<bool(const LabeledBox&)>;

/// Interpolated average precision. Detections are matched greedily in
/// descending score order against the best-IoU unmatched ground-truth box of
/// the same class (threshold inclusive). AP is the mean of interpolated
/// precision (max precision at recall >= r) over recall_positions sample
/// points: 1/40..40/40 for 40, or 0, 0.1, .., 1.0 for 11.
/// Throws std::invalid_argument unless recall_positions is 11 or 40.
double average_precision(const std::vector<Detection>& dets,
                         const std::vector<LabeledBox>& gts,
                         double iou_threshold, int recall_positions,
                         const GtFilter& gt_filter = nullptr);

struct ApReport {
    std::map<int, double> per_class;
    double mean_ap = 0.0;
};

/// Per-class AP over every class present in the ground truth, plus their
/// mean. Throws std::invalid_argument when no ground-truth box survives the
/// filter.
ApReport mean_ap(const std::vector<Detection>& dets,
                 const std::vector<LabeledBox>& gts, double iou_threshold,
                 int recall_positions, const GtFilter& gt_filter = nullptr);

}  // namespace voxelgeo
