#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "dqf/core.hpp"

namespace dqf {

/// Inner products between observations, backed either by coordinates or by a
/// precomputed Gram matrix. Every geometric quantity downstream is derived
/// from ip() alone, so the two backings share one code path.
class InnerProductView {
public:
    static InnerProductView from_coordinates(Matrix coords);
    static InnerProductView from_gram(Matrix gram);

    std::size_t size() const { return n_; }
    bool gram_backed() const { return gram_ != nullptr; }

    double ip(std::size_t a, std::size_t b) const {
        if (gram_) return (*gram_)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        return row_dot(a, b);
    }
    double sq_norm(std::size_t a) const { return diag_[a]; }

private:
    double row_dot(std::size_t a, std::size_t b) const;

    std::size_t n_ = 0;
    std::shared_ptr<const Matrix> coords_;
    std::shared_ptr<const Matrix> gram_;
    std::vector<double> diag_;
};

/// Dot product of two equal-length vectors, summed left to right. The
/// coordinate-backed view and gram_from_coordinates both use it, so a Gram
/// matrix built here reproduces the coordinate path bit for bit.
double sequential_dot(std::span<const double> a, std::span<const double> b);

/// K = X * X^T with sequential_dot entries.
Matrix gram_from_coordinates(const Matrix& coords);

/// One observation pair expressed along its axis. Axis coordinate 0 is the
/// anchor; the positive direction points from x_i to x_j.
struct PairFrame {
    std::size_t i = 0;
    std::size_t j = 0;
    AnchorKind anchor = AnchorKind::midpoint;
    /// Half the distance between x_i and x_j.
    double half_span = 0.0;
    /// Axis coordinate of every observation.
    std::vector<double> t;
    /// Squared distance of every observation to the axis, clamped at 0.
    std::vector<double> perp2;
};

/// Throws DegeneratePairError when ||x_j - x_i|| <= 1e-12, and
/// std::invalid_argument when i == j.
PairFrame pair_frame(const InnerProductView& view, std::size_t i, std::size_t j, AnchorKind anchor);

/// Whether w lies in the cone with tip at axis coordinate c (c != 0), opening
/// angle alpha, pointing from the tip toward the anchor. Boundary points count.
bool cone_contains(const PairFrame& frame, double c, std::size_t w, double alpha);

/// Same test with cos(alpha) precomputed.
inline bool in_cone(double t, double perp2, double c, double cos_alpha) {
    const double d = c < 0.0 ? 1.0 : -1.0;
    const double ahead = d * (t - c);
    if (ahead < 0.0) return false;
    return ahead >= cos_alpha * std::sqrt((t - c) * (t - c) + perp2);
}

enum class Side { A, B, outside };

/// A: between tip and anchor, anchor hyperplane included. B: beyond the anchor.
Side side_of(const PairFrame& frame, double c, std::size_t w, double alpha);

struct ProjectionStats {
    double t_min = 0.0;
    double t_max = 0.0;
    /// Winsorized standard deviation of the axis coordinates.
    double robust_sd = 0.0;
    double half_span = 0.0;

    bool degenerate_spread() const { return !(robust_sd > 0.0); }
};

/// Sample variance (divisor n-1) after clamping the k smallest values to the
/// (k+1)-th smallest and the k largest to the (k+1)-th largest. k is reduced
/// to (n-1)/2 for small samples.
double winsorized_variance(std::span<const double> values, std::size_t k);

ProjectionStats projection_stats(const PairFrame& frame, std::size_t winsorize_per_side = 3);

}  // namespace dqf
