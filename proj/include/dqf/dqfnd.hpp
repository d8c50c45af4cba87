#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqf/core.hpp"
#include "dqf/geometry.hpp"

namespace dqf {

class Rng;

/// Relative offset (times the half span) of the two tips used when the
/// projected spread is zero and the tip law collapses onto the anchor.
inline constexpr double kCollapsedTipOffset = 1e-6;

/// Mid-quantile tips G^{-1}((k - 1/2)/m), k = 1..m, in axis coordinates.
/// A tip landing exactly on the anchor is moved to +1e-12 * half_span. For
/// the adaptive laws a zero spread yields the collapsed grid: the lower half
/// of the tips at -kCollapsedTipOffset * half_span, the rest at +that.
std::vector<double> tip_grid(const TipDistributionSpec& spec, const ProjectionStats& stats, std::size_t m);

/// m independent draws from the same law, sorted ascending.
std::vector<double> tip_sample(const TipDistributionSpec& spec, const ProjectionStats& stats, std::size_t m,
                               Rng& rng);

/// Cone depths of the anchor at each tip, stored as counts out of n.
struct DepthProfile {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t n = 0;
    std::vector<double> tips;
    std::vector<int> counts;

    double depth(std::size_t k) const { return static_cast<double>(counts[k]) / static_cast<double>(n); }
    std::vector<double> depths() const;
};

/// min(#A, #B) at every tip for a single opening angle.
DepthProfile pair_depth_profile(const PairFrame& frame, std::span<const double> tips, double alpha);

/// Sorted depth counts; entry k is the count at delta = (k+1)/m.
std::vector<int> pair_dqf_counts(const DepthProfile& profile);

/// The pair DQF on delta_k = k/m, as depths.
std::vector<double> pair_dqf(const DepthProfile& profile);

/// Pointwise mean of equally long DQFs, summed in the given order.
std::vector<double> aggregate(std::span<const std::vector<double>> dqfs);

/// Row-wise division by the last column. Rows whose last entry is zero are set
/// to zero and reported in `zero_rows` (when non-null). NaN rows stay NaN.
Matrix normalize(const Matrix& q_bar, std::vector<std::size_t>* zero_rows = nullptr);

/// Odd moving-average window used by smooth_derivative.
std::size_t smoothing_window(std::size_t m, double window_fraction);

/// Centred moving average with point-reflected boundaries (x[-k] = 2x[0] - x[k],
/// which keeps linear rows linear), then central differences on the grid
/// delta_k = k/m with one-sided differences at both ends.
/// Throws std::invalid_argument when m < 5.
Matrix smooth_derivative(const Matrix& q_tilde, double window_fraction);

struct AngleBlock {
    double alpha = 0.0;
    Matrix q_bar;
    Matrix q_tilde;
    Matrix dq;
    /// Mean zero-interval length over each observation's pairs.
    std::vector<double> zero_interval_mean;
    /// Rows with q_bar(1) == 0.
    std::vector<std::size_t> zero_norm_rows;
};

struct BundleFlags {
    bool z_scaled = false;
    std::vector<std::size_t> constant_columns;
    /// Contributing pairs per observation.
    std::vector<std::size_t> pair_counts;
    /// Observations with no usable pair; their rows are NaN.
    std::vector<std::size_t> excluded;
    /// Skipped degenerate pairs, as (i, j).
    std::vector<std::pair<std::size_t, std::size_t>> degenerate_pairs;
    /// Pairs whose adaptive tip law collapsed onto the anchor.
    std::size_t collapsed_tip_pairs = 0;
    /// Resolved uniform_fixed bounds when they were derived from the data.
    std::optional<std::pair<double, double>> fixed_bounds;
};

struct DQFBundle {
    std::vector<std::string> ids;
    std::vector<double> delta_grid;
    std::vector<AngleBlock> angles;
    Config config;
    BundleFlags flags;

    std::size_t size() const { return ids.size(); }
};

struct ComputeOptions {
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Keep per-pair depth profiles (memory heavy; for inspection and tests).
    bool keep_profiles = false;
};

/// Output of compute_bundle when profiles are kept.
struct PairRecord {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t angle = 0;
    DepthProfile profile;
};

/// Full DQF pipeline over an inner-product view: pair plan, frames, tips,
/// per-angle depth profiles, averaging, normalisation and derivative.
/// Results do not depend on the thread count.
DQFBundle compute_bundle(const InnerProductView& view, std::vector<std::string> ids, const Config& cfg,
                         const ComputeOptions& opts = {}, std::vector<PairRecord>* profiles = nullptr);

/// Convenience overload: optional z-scaling, then the coordinate-backed view.
DQFBundle compute_bundle(const Dataset& ds, const Config& cfg, bool z_scale_first,
                         const ComputeOptions& opts = {});

}  // namespace dqf
