#pragma once

#include <cstdint>
#include <vector>

#include "voxelgeo/detection.hpp"
#include "voxelgeo/image.hpp"

namespace voxelgeo {

/// Weights of the combined detection objective. lambda scales the depth
/// term, alpha and beta the outdoor box and direction terms, n_pos is the
/// positive-sample normalizer.
struct LossWeights {
    double lambda = 0.5;
    double alpha = 2.0;
    double beta = 0.2;
    int n_pos = 1;

    /// Throws std::invalid_argument on negative weights or n_pos < 1.
    void validate() const;
};

enum class DetectionHead { Indoor, Outdoor };

/// Per-term loss values feeding total_loss. ctr is the indoor centerness
/// term, dir the outdoor direction term; the unused one is ignored.
struct LossComponents {
    double cls = 0.0;
    double box = 0.0;
    double ctr = 0.0;
    double dir = 0.0;
    double depth = 0.0;
};

/// Mask of pixels with target depth > 0 (the valid-pixel convention).
std::vector<std::uint8_t> valid_depth_mask(const DepthMap& target);

/// Mean absolute depth error over mask-selected pixels; 0 when no pixel is
/// valid. Throws std::invalid_argument on shape mismatch.
double depth_l1(const DepthMap& pred, const DepthMap& target,
                const std::vector<std::uint8_t>& valid_mask);

/// d(depth_l1)/d(pred) per pixel: sign(pred - target)/n_valid on valid
/// pixels, 0 elsewhere. Undefined at pred == target (returns 0 there).
std::vector<double> depth_l1_grad(const DepthMap& pred, const DepthMap& target,
                                  const std::vector<std::uint8_t>& valid_mask);

/// Focal loss for one binary prediction: -alpha_bal*(1-p)^gamma*log(p) for
/// target 1, -(1-alpha_bal)*p^gamma*log(1-p) for target 0.
/// Throws std::invalid_argument unless p is strictly inside (0, 1), target
/// is 0 or 1, gamma >= 0 and alpha_bal is in [0, 1].
double focal_loss(double pred_prob, int target, double gamma = 2.0,
                  double alpha_bal = 0.25);

/// d(focal_loss)/d(pred_prob).
double focal_loss_grad(double pred_prob, int target, double gamma = 2.0,
                       double alpha_bal = 0.25);

/// Huber-style penalty: 0.5*x^2/beta_pt for |x| < beta_pt, |x| - 0.5*beta_pt
/// otherwise. Throws std::invalid_argument when beta_pt <= 0.
double smooth_l1(double x, double beta_pt = 1.0);

/// d(smooth_l1)/dx: x/beta_pt inside the quadratic zone, sign(x) outside.
double smooth_l1_grad(double x, double beta_pt = 1.0);

/// 1 - iou3d(pred, target). Throws std::invalid_argument on degenerate
/// boxes.
double iou3d_loss(const Box3D& pred, const Box3D& target);

/// Gradient of iou3d_loss with respect to the predicted box's center and
/// size. Defined for axis-aligned pairs (both yaws 0); throws
/// std::invalid_argument otherwise. Piecewise-smooth: valid away from
/// tangency (touching faces) and from ties in the overlap extents.
struct BoxGrad {
    Vector3d d_center = Vector3d::Zero();
    Vector3d d_size = Vector3d::Zero();
};
BoxGrad iou3d_loss_grad(const Box3D& pred, const Box3D& target);

/// -log(p[target_index]). Probabilities must sum to 1 within 1e-6 and be
/// non-negative (throws std::invalid_argument), the index in range (throws
/// std::out_of_range). p[target] == 0 yields +infinity.
double cross_entropy(const std::vector<double>& pred_prob, int target_index);

/// d(cross_entropy)/d(p[i]): -1/p[target] at the target index, 0 elsewhere.
std::vector<double> cross_entropy_grad(const std::vector<double>& pred_prob,
                                       int target_index);

/// Combined objective. Indoor: (cls + box + ctr)/n_pos + lambda*depth.
/// Outdoor: (cls + alpha*box + beta*dir)/n_pos + lambda*depth.
/// Throws std::invalid_argument on negative components.
double total_loss(const LossComponents& components, const LossWeights& weights,
                  DetectionHead head);

}  // namespace voxelgeo
