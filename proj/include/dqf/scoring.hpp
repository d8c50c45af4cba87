#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqf/core.hpp"
#include "dqf/dqfnd.hpp"

namespace dqf {

/// Fraction of tips in the run of zero depths that surrounds the anchor
/// (axis coordinate 0). Tips are mid-quantiles of G, so this is the G-measure
/// of the zero interval up to 1/m. Zero when neither tip adjacent to the
/// anchor has depth zero.
double zero_interval(const DepthProfile& profile);

struct RankResult {
    /// 1 = most anomalous; 0 for rows that were excluded (NaN).
    std::vector<std::size_t> ranks;
    std::vector<double> scores;
    std::size_t delta_index = 0;
    double delta_star = 0.0;
    /// No grid point had a unique minimum; the fallback rule picked delta_star.
    bool fallback = false;
};

/// Ranks rows at the smallest grid delta whose row-minimum is attained by a
/// single row; scores are the column at that delta and ranks ascend with the
/// score (ties by row index). Without such a delta the largest delta with the
/// smallest tie set is used and `fallback` is set. NaN rows are not ranked.
RankResult rank_first_unique_argmin(const Matrix& values, std::span<const double> delta_grid);

struct DeltaScores {
    std::size_t delta_index = 0;
    double delta = 0.0;
    std::vector<double> scores;
    /// The chosen column is delta = 1 of a normalised matrix (all ones).
    bool uninformative = false;
};

/// Column at the grid point nearest to `delta` (lower index on ties). Throws
/// DomainError unless 0 < delta <= grid.back().
DeltaScores score_at_delta(const Matrix& values, std::span<const double> delta_grid, double delta,
                           bool normalized = false);

/// Mann-Whitney AUC of "lower score means anomaly" against labels
/// (1 = anomaly); tied scores across classes count one half. NaN scores are
/// dropped. Throws UndefinedAucError when only one class remains.
double auc(std::span<const double> scores, std::span<const int> labels);

enum class ScoreView { q_bar, q_tilde };

struct ReportOptions {
    /// Index into bundle.angles; unset picks the angle closest to pi/4.
    std::optional<std::size_t> angle;
    ScoreView view = ScoreView::q_bar;
    /// When set, score_at_delta replaces the first-unique-argmin rule.
    std::optional<double> delta;
};

struct AnomalyReport {
    std::vector<std::string> ids;
    std::vector<std::size_t> ranks;
    std::vector<double> scores;
    std::vector<double> zero_interval_mean;
    double delta_star = 0.0;
    double alpha = 0.0;
    std::string method;
    std::string view;
    std::optional<double> auc;
    bool fallback = false;
    std::vector<std::string> warnings;
};

std::size_t default_angle_index(const DQFBundle& bundle);

AnomalyReport make_report(const DQFBundle& bundle, const ReportOptions& opts = {},
                          const std::optional<std::vector<int>>& labels = std::nullopt);

nlohmann::json to_json(const AnomalyReport& report);

}  // namespace dqf
