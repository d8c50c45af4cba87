#include "dqf/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dqf/error.hpp"

namespace dqf {

double zero_interval(const DepthProfile& profile) {
    const auto& tips = profile.tips;
    const auto& counts = profile.counts;
    const std::size_t m = tips.size();
    if (m == 0) return 0.0;
    // Tips are sorted and never sit exactly on the anchor.
    const auto right = static_cast<std::size_t>(std::lower_bound(tips.begin(), tips.end(), 0.0) - tips.begin());
    std::size_t lo = right;  // first tip of the run
    std::size_t hi = right;  // one past the last tip of the run
    while (lo > 0 && counts[lo - 1] == 0) --lo;
    while (hi < m && counts[hi] == 0) ++hi;
    return static_cast<double>(hi - lo) / static_cast<double>(m);
}

RankResult rank_first_unique_argmin(const Matrix& values, std::span<const double> delta_grid) {
    const auto n = values.rows();
    const auto m = values.cols();
    if (static_cast<std::size_t>(m) != delta_grid.size()) {
        throw std::invalid_argument("rank_first_unique_argmin: grid and matrix width differ");
    }
    std::vector<Eigen::Index> valid;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (!values.row(r).hasNaN()) valid.push_back(r);
    }
    if (valid.empty()) throw ValidationError("no rankable observations (all rows excluded)");

    RankResult out;
    std::size_t best_ties = std::numeric_limits<std::size_t>::max();
    std::size_t best_col = 0;
    bool found = false;
    for (Eigen::Index k = 0; k < m; ++k) {
        double low = std::numeric_limits<double>::infinity();
        std::size_t ties = 0;
        for (auto r : valid) {
            const double v = values(r, k);
            if (v < low) {
                low = v;
                ties = 1;
            } else if (v == low) {
                ++ties;
            }
        }
        if (ties == 1) {
            best_col = static_cast<std::size_t>(k);
            found = true;
            break;
        }
        if (ties <= best_ties) {
            best_ties = ties;
            best_col = static_cast<std::size_t>(k);
        }
    }
    out.fallback = !found;
    out.delta_index = best_col;
    out.delta_star = delta_grid[best_col];

    out.scores.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) out.scores[static_cast<std::size_t>(r)] = values(r, static_cast<Eigen::Index>(best_col));
    std::vector<Eigen::Index> order = valid;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return out.scores[static_cast<std::size_t>(a)] < out.scores[static_cast<std::size_t>(b)];
    });
    out.ranks.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) out.ranks[static_cast<std::size_t>(order[pos])] = pos + 1;
    return out;
}

DeltaScores score_at_delta(const Matrix& values, std::span<const double> delta_grid, double delta, bool normalized) {
    if (delta_grid.empty()) throw std::invalid_argument("score_at_delta: empty grid");
    if (!(delta > 0.0 && delta <= delta_grid.back() + 1e-12)) {
        throw DomainError("delta " + std::to_string(delta) + " is outside the grid range");
    }
    std::size_t best = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < delta_grid.size(); ++k) {
        const double g = std::abs(delta_grid[k] - delta);
        if (g < gap - 1e-12) {
            gap = g;
            best = k;
        }
    }
    DeltaScores out;
    out.delta_index = best;
    out.delta = delta_grid[best];
    out.scores.resize(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        out.scores[static_cast<std::size_t>(r)] = values(r, static_cast<Eigen::Index>(best));
    }
    out.uninformative = normalized && best + 1 == delta_grid.size();
    return out;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (!std::isnan(scores[k])) idx.push_back(k);
    }
    std::size_t n_pos = 0;
    for (auto k : idx) n_pos += labels[k] == 1 ? 1 : 0;
    const std::size_t n_neg = idx.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedAucError("AUC needs both anomalies and normal observations");

    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mid-ranks; the rank sum of the normal class counts (normal, anomaly)
    // pairs ordered "anomaly lower", ties contributing one half.
    double normal_rank_sum = 0.0;
    std::size_t pos = 0;
    while (pos < idx.size()) {
        std::size_t end = pos;
        while (end < idx.size() && scores[idx[end]] == scores[idx[pos]]) ++end;
        const double mid_rank = 0.5 * static_cast<double>(pos + 1 + end);
        for (std::size_t k = pos; k < end; ++k) {
            if (labels[idx[k]] != 1) normal_rank_sum += mid_rank;
        }
        pos = end;
    }
    const double nn = static_cast<double>(n_neg);
    const double u = normal_rank_sum - nn * (nn + 1.0) / 2.0;
    return u / (nn * static_cast<double>(n_pos));
}

std::size_t default_angle_index(const DQFBundle& bundle) {
    if (bundle.angles.empty()) throw ValidationError("bundle has no angle blocks");
    std::size_t best = 0;
    for (std::size_t a = 1; a < bundle.angles.size(); ++a) {
        if (std::abs(bundle.angles[a].alpha - std::numbers::pi / 4) <
            std::abs(bundle.angles[best].alpha - std::numbers::pi / 4)) {
            best = a;
        }
    }
    return best;
}

AnomalyReport make_report(const DQFBundle& bundle, const ReportOptions& opts,
                          const std::optional<std::vector<int>>& labels) {
    const std::size_t a = opts.angle.value_or(default_angle_index(bundle));
    if (a >= bundle.angles.size()) throw std::invalid_argument("angle index out of range");
    const auto& block = bundle.angles[a];
    const Matrix& values = opts.view == ScoreView::q_bar ? block.q_bar : block.q_tilde;

    AnomalyReport rep;
    rep.ids = bundle.ids;
    rep.alpha = block.alpha;
    rep.view = opts.view == ScoreView::q_bar ? "q_bar" : "q_tilde";
    rep.zero_interval_mean = block.zero_interval_mean;

    if (opts.delta) {
        auto ds = score_at_delta(values, bundle.delta_grid, *opts.delta, opts.view == ScoreView::q_tilde);
        rep.method = "score_at_delta";
        rep.delta_star = ds.delta;
        rep.scores = ds.scores;
        if (ds.uninformative) rep.warnings.emplace_back("delta = 1 on the normalised view is uninformative");
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < rep.scores.size(); ++i) {
            if (!std::isnan(rep.scores[i])) order.push_back(i);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return rep.scores[x] < rep.scores[y]; });
        rep.ranks.assign(rep.scores.size(), 0);
        for (std::size_t pos = 0; pos < order.size(); ++pos) rep.ranks[order[pos]] = pos + 1;
    } else {
        auto rr = rank_first_unique_argmin(values, bundle.delta_grid);
        rep.method = "first_unique_argmin";
        rep.delta_star = rr.delta_star;
        rep.scores = std::move(rr.scores);
        rep.ranks = std::move(rr.ranks);
        rep.fallback = rr.fallback;
        if (rr.fallback) rep.warnings.emplace_back("no delta with a unique minimum; used the smallest tie set");
    }

    if (!bundle.flags.excluded.empty()) {
        rep.warnings.push_back(std::to_string(bundle.flags.excluded.size()) +
                               " observation(s) excluded: no usable pairs");
    }
    if (labels) {
        if (labels->size() != rep.scores.size()) throw ValidationError("label count differs from bundle size");
        try {
            rep.auc = auc(rep.scores, *labels);
        } catch (const UndefinedAucError& e) {
            rep.warnings.emplace_back(e.what());
        }
    }
    return rep;
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const AnomalyReport& report) {
    nlohmann::json ranks = nlohmann::json::array();
    for (auto r : report.ranks) ranks.push_back(r == 0 ? nlohmann::json(nullptr) : nlohmann::json(r));
    nlohmann::json scores = nlohmann::json::array();
    for (double s : report.scores) scores.push_back(number_or_null(s));
    nlohmann::json zero = nlohmann::json::array();
    for (double z : report.zero_interval_mean) zero.push_back(number_or_null(z));
    nlohmann::json j = {
        {"ids", report.ids},
        {"ranks", ranks},
        {"scores", scores},
        {"delta_star", report.delta_star},
        {"zero_interval_mean", zero},
        {"flags",
         {{"method", report.method},
          {"view", report.view},
          {"alpha", report.alpha},
          {"fallback", report.fallback},
          {"warnings", report.warnings}}},
    };
    if (report.auc) j["auc"] = *report.auc;
    return j;
}

}  // namespace dqf
