#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace dqf {

/// Row-major dense matrix; rows are observations.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class AnchorKind { midpoint, self };

enum class TipVariant { uniform_range, uniform_robust, uniform_fixed, normal_adaptive };

/// How tips are placed along a pair axis: deterministic mid-quantiles of G,
/// or m independent draws from G.
enum class TipSampling { quantile, monte_carlo };

/**
 * Law of the cone tip along a pair axis, in axis coordinates (anchor at 0).
 *
 * - uniform_range: uniform on the range of the projected data.
 * - uniform_robust: uniform on [-c*s, c*s], s the Winsorized sd of the projections.
 * - uniform_fixed: uniform on [lower, upper] for every pair. When the bounds are
 *   unset the engine uses the envelope of projection ranges over all sampled pairs.
 * - normal_adaptive: normal with mean 0 and sd c*s.
 */
struct TipDistributionSpec {
    TipVariant variant = TipVariant::normal_adaptive;
    double scale = 1.0;
    std::optional<double> lower;
    std::optional<double> upper;

    void validate() const;
};

struct Config {
    std::vector<double> angles{std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 3};
    std::size_t n_pairs = 40;
    std::size_t m_tips = 100;
    AnchorKind anchor = AnchorKind::midpoint;
    TipDistributionSpec tip_distribution;
    TipSampling tip_sampling = TipSampling::quantile;
    std::uint64_t seed = 1;
    /// 0 means "same as m_tips".
    std::size_t delta_grid_size = 0;
    double smoothing_window_fraction = 0.05;
    std::size_t winsorize_per_side = 3;

    std::size_t grid_size() const { return delta_grid_size == 0 ? m_tips : delta_grid_size; }
    void validate() const;
};

nlohmann::json to_json(const Config& cfg);
/// Missing keys take the defaults above. Unknown keys are rejected.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);

std::string to_string(AnchorKind kind);
std::string to_string(TipVariant variant);
AnchorKind parse_anchor(const std::string& s);
/// Accepts both the enum spelling (normal_adaptive) and the CLI spelling (normal).
TipVariant parse_tip_variant(const std::string& s);

struct Dataset {
    std::vector<std::string> ids;
    /// n x d. Zero columns in Gram-only mode.
    Matrix coords;
    /// 1 = anomaly, 0 = normal.
    std::optional<std::vector<int>> labels;
    bool scaled = false;
    std::vector<std::size_t> constant_columns;

    std::size_t size() const { return ids.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(coords.cols()); }
    bool has_coords() const { return coords.cols() > 0; }

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;
};

struct GramMatrix {
    Matrix entries;
    double tolerance = 1e-8;
    std::vector<std::string> ids;

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
    /// Symmetry and diagonal checks always run; the eigenvalue check is
    /// skipped when check_psd is false.
    void validate(bool check_psd = true) const;
};

struct LoadOptions {
    bool has_header = true;
    /// Column holding observation ids, by header name (or 0-based index when
    /// there is no header).
    std::optional<std::string> id_column;
    /// Column holding 0/1 anomaly labels. Ignored if absent from the header.
    std::optional<std::string> label_column = std::string("label");
};

Dataset load_dataset(const std::string& path, const LoadOptions& opts = {});
Dataset parse_dataset(std::istream& in, const LoadOptions& opts = {});

/// Square CSV. With a header, the header names become the ids.
GramMatrix load_gram(const std::string& path, bool has_header = false, double tolerance = 1e-8,
                     std::size_t psd_check_max_n = 2000);

/// Reads an "id,label" CSV and aligns it with `ids`. Every id must be present.
std::vector<int> load_labels(const std::string& path, std::span<const std::string> ids);

/// Default ids "1".."n".
std::vector<std::string> default_ids(std::size_t n);

/// Column-wise standardisation with divisor n-1. Constant columns become 0
/// and are listed in `constant_columns`.
Dataset z_scale(const Dataset& ds);

/// Partner lists for every observation. Partners of i are the first
/// min(n_pairs, n-1) entries of a seeded permutation of {0..n-1}\{i};
/// continuing that permutation gives the reserve used to replace degenerate pairs.
class PairPlan {
public:
    PairPlan() = default;
    PairPlan(std::size_t n, std::size_t n_pairs, std::uint64_t seed);

    std::size_t size() const { return partners_.size(); }
    std::size_t n_pairs() const { return n_pairs_; }
    std::span<const std::size_t> partners(std::size_t i) const { return partners_.at(i); }

    /// The permutation of i's candidates, starting with partners(i), truncated
    /// to `count` entries (at most n-1).
    std::vector<std::size_t> sequence(std::size_t i, std::size_t count) const;

private:
    std::size_t n_ = 0;
    std::size_t n_pairs_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<std::size_t>> partners_;
};

PairPlan sample_pairs(std::size_t n, const Config& cfg);

}  // namespace dqf
