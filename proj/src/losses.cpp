#include "voxelgeo/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace voxelgeo {

void LossWeights::validate() const {
    if (lambda < 0.0 || alpha < 0.0 || beta < 0.0 || n_pos < 1) {
        throw std::invalid_argument(
            "loss weights must be non-negative with n_pos >= 1");
    }
}

std::vector<std::uint8_t> valid_depth_mask(const DepthMap& target) {
    std::vector<std::uint8_t> mask(target.data.size(), 0);
    for (std::size_t i = 0; i < target.data.size(); ++i) {
        mask[i] = (target.data[i] > 0.0 && std::isfinite(target.data[i])) ? 1
                                                                          : 0;
    }
    return mask;
}

namespace {

void check_depth_shapes(const DepthMap& pred, const DepthMap& target,
                        const std::vector<std::uint8_t>& valid_mask) {
    if (pred.width != target.width || pred.height != target.height ||
        valid_mask.size() != target.data.size()) {
        throw std::invalid_argument("depth loss: mismatched shapes");
    }
}

}  // namespace

double depth_l1(const DepthMap& pred, const DepthMap& target,
                const std::vector<std::uint8_t>& valid_mask) {
    check_depth_shapes(pred, target, valid_mask);
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::size_t i = 0; i < valid_mask.size(); ++i) {
        if (valid_mask[i]) {
            sum += std::abs(pred.data[i] - target.data[i]);
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

std::vector<double> depth_l1_grad(const DepthMap& pred, const DepthMap& target,
                                  const std::vector<std::uint8_t>& valid_mask) {
    check_depth_shapes(pred, target, valid_mask);
    std::int64_t count = 0;
    for (const std::uint8_t m : valid_mask) {
        count += m ? 1 : 0;
    }
    std::vector<double> grad(valid_mask.size(), 0.0);
    if (count == 0) {
        return grad;
    }
    const double scale = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < valid_mask.size(); ++i) {
        if (valid_mask[i]) {
            const double diff = pred.data[i] - target.data[i];
            grad[i] = diff > 0.0 ? scale : (diff < 0.0 ? -scale : 0.0);
        }
    }
    return grad;
}

namespace {

void check_focal_args(double p, int target, double gamma, double alpha_bal) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::invalid_argument(
            "focal loss: probability must be strictly inside (0, 1)");
    }
    if (target != 0 && target != 1) {
        throw std::invalid_argument("focal loss: target must be 0 or 1");
    }
    if (gamma < 0.0 || alpha_bal < 0.0 || alpha_bal > 1.0) {
        throw std::invalid_argument("focal loss: bad gamma or alpha");
    }
}

}  // namespace

double focal_loss(double pred_prob, int target, double gamma,
                  double alpha_bal) {
    check_focal_args(pred_prob, target, gamma, alpha_bal);
    if (target == 1) {
        return -alpha_bal * std::pow(1.0 - pred_prob, gamma) *
               std::log(pred_prob);
    }
    return -(1.0 - alpha_bal) * std::pow(pred_prob, gamma) *
           std::log(1.0 - pred_prob);
}

double focal_loss_grad(double pred_prob, int target, double gamma,
                       double alpha_bal) {
    check_focal_args(pred_prob, target, gamma, alpha_bal);
    const double p = pred_prob;
    if (target == 1) {
        // d/dp of -a*(1-p)^g*log(p)
        const double pow_term = std::pow(1.0 - p, gamma);
        const double pow_dn = gamma > 0.0
                                  ? std::pow(1.0 - p, gamma - 1.0)
                                  : 0.0;
        return -alpha_bal * (-gamma * pow_dn * std::log(p) + pow_term / p);
    }
    // d/dp of -(1-a)*p^g*log(1-p)
    const double pow_term = std::pow(p, gamma);
    const double pow_dn = gamma > 0.0 ? std::pow(p, gamma - 1.0) : 0.0;
    return -(1.0 - alpha_bal) *
           (gamma * pow_dn * std::log(1.0 - p) - pow_term / (1.0 - p));
}

double smooth_l1(double x, double beta_pt) {
    if (!(beta_pt > 0.0)) {
        throw std::invalid_argument("smooth_l1: beta must be positive");
    }
    const double ax = std::abs(x);
    if (ax < beta_pt) {
        return 0.5 * x * x / beta_pt;
    }
    return ax - 0.5 * beta_pt;
}

double smooth_l1_grad(double x, double beta_pt) {
    if (!(beta_pt > 0.0)) {
        throw std::invalid_argument("smooth_l1: beta must be positive");
    }
    if (std::abs(x) < beta_pt) {
        return x / beta_pt;
    }
    return x > 0.0 ? 1.0 : -1.0;
}

double iou3d_loss(const Box3D& pred, const Box3D& target) {
    return 1.0 - iou3d(pred, target);
}

BoxGrad iou3d_loss_grad(const Box3D& pred, const Box3D& target) {
    pred.validate();
    target.validate();
    if (normalize_yaw(pred.yaw) != 0.0 || normalize_yaw(target.yaw) != 0.0) {
        throw std::invalid_argument(
            "iou3d_loss_grad: defined for axis-aligned boxes only");
    }

    // Per-axis overlap ov_k = min(hi) - max(lo). Derivatives of ov_k with
    // respect to the predicted center are -1, 0, or +1 depending on which
    // bounds are active; each predicted half-extent contributes 0.5 per
    // active bound.
    double overlap[3];
    double d_center[3];
    double d_size[3];
    for (int k = 0; k < 3; ++k) {
        const double pred_lo = pred.center[k] - 0.5 * pred.size[k];
        const double pred_hi = pred.center[k] + 0.5 * pred.size[k];
        const double tgt_lo = target.center[k] - 0.5 * target.size[k];
        const double tgt_hi = target.center[k] + 0.5 * target.size[k];
        const double lo = std::max(pred_lo, tgt_lo);
        const double hi = std::min(pred_hi, tgt_hi);
        overlap[k] = hi - lo;
        const bool lo_active = pred_lo > tgt_lo;
        const bool hi_active = pred_hi < tgt_hi;
        d_center[k] = (hi_active ? 1.0 : 0.0) - (lo_active ? 1.0 : 0.0);
        d_size[k] = 0.5 * ((hi_active ? 1.0 : 0.0) + (lo_active ? 1.0 : 0.0));
    }

    BoxGrad grad;
    const double inter = overlap[0] * overlap[1] * overlap[2];
    if (inter <= 0.0) {
        // Disjoint boxes: IoU is locally constant 0.
        return grad;
    }
    const double pred_vol = pred.volume();
    const double unioned = pred_vol + target.volume() - inter;

    for (int k = 0; k < 3; ++k) {
        const double di_dc = d_center[k] * inter / overlap[k];
        const double di_ds = d_size[k] * inter / overlap[k];
        const double dv_ds = pred_vol / pred.size[k];
        // IoU = I/U with U = Vp + Vt - I; dIoU = (I'U - I U')/U^2 and
        // U' = V' - I'.
        const double du_dc = -di_dc;
        const double du_ds = dv_ds - di_ds;
        const double diou_dc =
            (di_dc * unioned - inter * du_dc) / (unioned * unioned);
        const double diou_ds =
            (di_ds * unioned - inter * du_ds) / (unioned * unioned);
        grad.d_center[k] = -diou_dc;
        grad.d_size[k] = -diou_ds;
    }
    return grad;
}

double cross_entropy(const std::vector<double>& pred_prob, int target_index) {
    double sum = 0.0;
    for (const double p : pred_prob) {
        if (p < 0.0 || !std::isfinite(p)) {
            throw std::invalid_argument(
                "cross_entropy: probabilities must be non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument(
            "cross_entropy: probabilities must sum to 1");
    }
    if (target_index < 0 ||
        target_index >= static_cast<int>(pred_prob.size())) {
        throw std::out_of_range("cross_entropy: target index out of range");
    }
    const double p = pred_prob[target_index];
    if (p == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -std::log(p);
}

std::vector<double> cross_entropy_grad(const std::vector<double>& pred_prob,
                                       int target_index) {
    cross_entropy(pred_prob, target_index);  // reuse validation
    std::vector<double> grad(pred_prob.size(), 0.0);
    const double p = pred_prob[target_index];
    grad[target_index] = p > 0.0 ? -1.0 / p
                                 : -std::numeric_limits<double>::infinity();
    return grad;
}

double total_loss(const LossComponents& components, const LossWeights& weights,
                  DetectionHead head) {
    weights.validate();
    if (components.cls < 0.0 || components.box < 0.0 || components.ctr < 0.0 ||
        components.dir < 0.0 || components.depth < 0.0) {
        throw std::invalid_argument("total_loss: components must be >= 0");
    }
    const double n = static_cast<double>(weights.n_pos);
    if (head == DetectionHead::Indoor) {
        return (components.cls + components.box + components.ctr) / n +
               weights.lambda * components.depth;
    }
    return (components.cls + weights.alpha * components.box +
            weights.beta * components.dir) /
               n +
           weights.lambda * components.depth;
}

}  // namespace voxelgeo
