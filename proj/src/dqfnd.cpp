#include "dqf/dqfnd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "dqf/dqf1d.hpp"
#include "dqf/error.hpp"
#include "dqf/rng.hpp"
#include "dqf/scoring.hpp"

namespace dqf {

namespace {

std::vector<double> collapsed_tips(const ProjectionStats& stats, std::size_t m) {
    std::vector<double> tips(m);
    const double offset = kCollapsedTipOffset * stats.half_span;
    for (std::size_t k = 0; k < m; ++k) tips[k] = k < m / 2 ? -offset : offset;
    return tips;
}

void nudge_off_anchor(std::vector<double>& tips, double half_span) {
    for (auto& c : tips) {
        if (c == 0.0) c = 1e-12 * half_span;
    }
}

bool adaptive_collapse(const TipDistributionSpec& spec, const ProjectionStats& stats) {
    return (spec.variant == TipVariant::normal_adaptive || spec.variant == TipVariant::uniform_robust) &&
           stats.degenerate_spread();
}

std::pair<double, double> fixed_bounds(const TipDistributionSpec& spec) {
    if (!spec.lower || !spec.upper) {
        throw std::invalid_argument("uniform_fixed tips need resolved bounds");
    }
    return {*spec.lower, *spec.upper};
}

}  // namespace

std::vector<double> tip_grid(const TipDistributionSpec& spec, const ProjectionStats& stats, std::size_t m) {
    if (m == 0) throw std::invalid_argument("tip_grid needs m >= 1");
    if (adaptive_collapse(spec, stats)) return collapsed_tips(stats, m);

    std::vector<double> tips;
    switch (spec.variant) {
        case TipVariant::uniform_range:
            tips = uniform_tips(stats.t_min, stats.t_max, m);
            break;
        case TipVariant::uniform_robust: {
            const double half = spec.scale * stats.robust_sd;
            tips = uniform_tips(-half, half, m);
            break;
        }
        case TipVariant::uniform_fixed: {
            const auto [lo, hi] = fixed_bounds(spec);
            tips = uniform_tips(lo, hi, m);
            break;
        }
        case TipVariant::normal_adaptive: {
            const double sd = spec.scale * stats.robust_sd;
            const boost::math::normal standard;
            tips.resize(m);
            for (std::size_t k = 0; k < m; ++k) {
                const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
                tips[k] = sd * boost::math::quantile(standard, p);
            }
            break;
        }
    }
    nudge_off_anchor(tips, stats.half_span);
    return tips;
}

std::vector<double> tip_sample(const TipDistributionSpec& spec, const ProjectionStats& stats, std::size_t m,
                               Rng& rng) {
    if (adaptive_collapse(spec, stats)) return collapsed_tips(stats, m);
    std::vector<double> tips(m);
    for (auto& c : tips) {
        switch (spec.variant) {
            case TipVariant::uniform_range:
                c = rng.uniform(stats.t_min, stats.t_max);
                break;
            case TipVariant::uniform_robust: {
                const double half = spec.scale * stats.robust_sd;
                c = rng.uniform(-half, half);
                break;
            }
            case TipVariant::uniform_fixed: {
                const auto [lo, hi] = fixed_bounds(spec);
                c = rng.uniform(lo, hi);
                break;
            }
            case TipVariant::normal_adaptive:
                c = rng.normal(0.0, spec.scale * stats.robust_sd);
                break;
        }
    }
    std::sort(tips.begin(), tips.end());
    nudge_off_anchor(tips, stats.half_span);
    return tips;
}

std::vector<double> DepthProfile::depths() const {
    std::vector<double> out(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) out[k] = depth(k);
    return out;
}

DepthProfile pair_depth_profile(const PairFrame& frame, std::span<const double> tips, double alpha) {
    DepthProfile p;
    p.i = frame.i;
    p.j = frame.j;
    p.n = frame.t.size();
    p.tips.assign(tips.begin(), tips.end());
    p.counts.resize(tips.size());
    const double cos_alpha = std::cos(alpha);
    const std::size_t n = frame.t.size();
    for (std::size_t k = 0; k < tips.size(); ++k) {
        const double c = tips[k];
        const double d = c < 0.0 ? 1.0 : -1.0;
        int count_a = 0;
        int count_b = 0;
        for (std::size_t w = 0; w < n; ++w) {
            if (!in_cone(frame.t[w], frame.perp2[w], c, cos_alpha)) continue;
            if (d * frame.t[w] <= 0.0) {
                ++count_a;
            } else {
                ++count_b;
            }
        }
        p.counts[k] = std::min(count_a, count_b);
    }
    return p;
}

std::vector<int> pair_dqf_counts(const DepthProfile& profile) {
    std::vector<int> sorted = profile.counts;
    std::sort(sorted.begin(), sorted.end());
    return sorted;
}

std::vector<double> pair_dqf(const DepthProfile& profile) {
    const auto sorted = pair_dqf_counts(profile);
    std::vector<double> out(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        out[k] = static_cast<double>(sorted[k]) / static_cast<double>(profile.n);
    }
    return out;
}

std::vector<double> aggregate(std::span<const std::vector<double>> dqfs) {
    if (dqfs.empty()) throw std::invalid_argument("aggregate needs at least one DQF");
    const std::size_t m = dqfs.front().size();
    std::vector<double> mean(m, 0.0);
    for (const auto& q : dqfs) {
        if (q.size() != m) throw std::invalid_argument("aggregate: DQFs differ in length");
        for (std::size_t k = 0; k < m; ++k) mean[k] += q[k];
    }
    for (auto& v : mean) v /= static_cast<double>(dqfs.size());
    return mean;
}

Matrix normalize(const Matrix& q_bar, std::vector<std::size_t>* zero_rows) {
    Matrix out = q_bar;
    const Eigen::Index last = q_bar.cols() - 1;
    for (Eigen::Index r = 0; r < q_bar.rows(); ++r) {
        const double top = q_bar(r, last);
        if (std::isnan(top)) continue;
        if (top == 0.0) {
            out.row(r).setZero();
            if (zero_rows) zero_rows->push_back(static_cast<std::size_t>(r));
        } else {
            out.row(r) /= top;
            out(r, last) = 1.0;
        }
    }
    return out;
}

std::size_t smoothing_window(std::size_t m, double window_fraction) {
    auto w = static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(m)));
    w = std::max<std::size_t>(3, w);
    if (w % 2 == 0) ++w;
    return w;
}

namespace {

Matrix differences(const Matrix& s) {
    const Eigen::Index m = s.cols();
    const double h = 1.0 / static_cast<double>(m);
    Matrix dq(s.rows(), m);
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        for (Eigen::Index k = 0; k < m; ++k) {
            if (k == 0) {
                dq(r, k) = (s(r, 1) - s(r, 0)) / h;
            } else if (k == m - 1) {
                dq(r, k) = (s(r, m - 1) - s(r, m - 2)) / h;
            } else {
                dq(r, k) = (s(r, k + 1) - s(r, k - 1)) / (2.0 * h);
            }
        }
    }
    return dq;
}

}  // namespace

Matrix smooth_derivative(const Matrix& q_tilde, double window_fraction) {
    const Eigen::Index m = q_tilde.cols();
    if (m < 5) throw std::invalid_argument("smooth_derivative needs at least 5 grid points");
    const auto w = static_cast<Eigen::Index>(smoothing_window(static_cast<std::size_t>(m), window_fraction));
    const Eigen::Index half = w / 2;

    Matrix smooth(q_tilde.rows(), m);
    for (Eigen::Index r = 0; r < q_tilde.rows(); ++r) {
        // Point reflection about the end samples.
        auto value = [&](Eigen::Index k) {
            if (k < 0) return 2.0 * q_tilde(r, 0) - q_tilde(r, std::min(-k, m - 1));
            if (k >= m) return 2.0 * q_tilde(r, m - 1) - q_tilde(r, std::max(2 * (m - 1) - k, Eigen::Index{0}));
            return q_tilde(r, k);
        };
        for (Eigen::Index k = 0; k < m; ++k) {
            double sum = 0.0;
            for (Eigen::Index o = -half; o <= half; ++o) sum += value(k + o);
            smooth(r, k) = sum / static_cast<double>(w);
        }
    }
    return differences(smooth);
}

namespace {

struct RowResult {
    std::vector<std::vector<std::int64_t>> sums;  // per angle, per grid point
    std::vector<double> zero_sum;                   // per angle
    std::size_t pairs = 0;
    std::vector<std::pair<std::size_t, std::size_t>> degenerate;
    std::size_t collapsed = 0;
    std::vector<PairRecord> records;
};

// Calls fn(j, frame) for each usable partner of i, replacing degenerate
// partners from the plan's reserve. Returns skipped pairs.
template <class Fn>
std::vector<std::pair<std::size_t, std::size_t>> for_each_pair(const InnerProductView& view,
                                                               const PairPlan& plan, AnchorKind anchor,
                                                               std::size_t i, Fn&& fn) {
    std::vector<std::pair<std::size_t, std::size_t>> skipped;
    const auto want = plan.partners(i).size();
    std::vector<std::size_t> order(plan.partners(i).begin(), plan.partners(i).end());
    bool extended = false;
    std::size_t used = 0;
    for (std::size_t pos = 0; used < want; ++pos) {
        if (pos == order.size()) {
            if (extended) break;
            order = plan.sequence(i, view.size() - 1);
            extended = true;
            if (pos == order.size()) break;
        }
        const std::size_t j = order[pos];
        PairFrame frame;
        try {
            frame = pair_frame(view, i, j, anchor);
        } catch (const DegeneratePairError&) {
            skipped.emplace_back(i, j);
            continue;
        }
        fn(j, frame);
        ++used;
    }
    return skipped;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

DQFBundle compute_bundle(const InnerProductView& view, std::vector<std::string> ids, const Config& cfg,
                         const ComputeOptions& opts, std::vector<PairRecord>* profiles) {
    cfg.validate();
    const std::size_t n = view.size();
    if (n < 3) throw ValidationError("DQF computation needs at least 3 observations");
    if (ids.size() != n) throw std::invalid_argument("compute_bundle: ids and view differ in size");

    const PairPlan plan = sample_pairs(n, cfg);
    const std::size_t m = cfg.m_tips;
    const std::size_t grid_size = cfg.grid_size();
    const auto grid = regular_delta_grid(grid_size);
    const std::size_t n_angles = cfg.angles.size();

    // Column of the sorted depth counts read at each grid delta.
    std::vector<std::size_t> pick(grid_size);
    for (std::size_t g = 0; g < grid_size; ++g) {
        const double pos = grid[g] * static_cast<double>(m);
        auto k = static_cast<std::size_t>(std::ceil(pos - 1e-9));
        pick[g] = std::clamp<std::size_t>(k, 1, m) - 1;
    }

    DQFBundle bundle;
    bundle.config = cfg;
    TipDistributionSpec spec = cfg.tip_distribution;

    if (spec.variant == TipVariant::uniform_fixed && !spec.lower) {
        std::vector<std::pair<double, double>> ranges(n, {std::numeric_limits<double>::infinity(),
                                                          -std::numeric_limits<double>::infinity()});
        parallel_for(n, opts.threads, [&](std::size_t i) {
            for_each_pair(view, plan, cfg.anchor, i, [&](std::size_t, const PairFrame& frame) {
                const auto [lo, hi] = std::minmax_element(frame.t.begin(), frame.t.end());
                ranges[i].first = std::min(ranges[i].first, *lo);
                ranges[i].second = std::max(ranges[i].second, *hi);
            });
        });
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& r : ranges) {
            lo = std::min(lo, r.first);
            hi = std::max(hi, r.second);
        }
        if (!(lo < hi)) throw ValidationError("cannot derive uniform_fixed bounds: no usable pairs");
        spec.lower = lo;
        spec.upper = hi;
        bundle.flags.fixed_bounds = std::make_pair(lo, hi);
    }

    std::vector<RowResult> rows(n);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        RowResult& row = rows[i];
        row.sums.assign(n_angles, std::vector<std::int64_t>(grid_size, 0));
        row.zero_sum.assign(n_angles, 0.0);
        row.degenerate = for_each_pair(view, plan, cfg.anchor, i, [&](std::size_t j, const PairFrame& frame) {
            const auto stats = projection_stats(frame, cfg.winsorize_per_side);
            if (adaptive_collapse(spec, stats)) ++row.collapsed;
            std::vector<double> tips;
            if (cfg.tip_sampling == TipSampling::quantile) {
                tips = tip_grid(spec, stats, m);
            } else {
                Rng rng(stream_key(cfg.seed, i, j));
                tips = tip_sample(spec, stats, m, rng);
            }
            for (std::size_t a = 0; a < n_angles; ++a) {
                auto profile = pair_depth_profile(frame, tips, cfg.angles[a]);
                const auto sorted = pair_dqf_counts(profile);
                for (std::size_t g = 0; g < grid_size; ++g) row.sums[a][g] += sorted[pick[g]];
                row.zero_sum[a] += zero_interval(profile);
                if (opts.keep_profiles) row.records.push_back({i, j, a, std::move(profile)});
            }
            ++row.pairs;
        });
    });

    bundle.ids = std::move(ids);
    bundle.delta_grid = grid;
    auto& flags = bundle.flags;
    flags.pair_counts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        flags.pair_counts[i] = rows[i].pairs;
        if (rows[i].pairs == 0) flags.excluded.push_back(i);
        flags.degenerate_pairs.insert(flags.degenerate_pairs.end(), rows[i].degenerate.begin(),
                                      rows[i].degenerate.end());
        flags.collapsed_tip_pairs += rows[i].collapsed;
        if (profiles) {
            for (auto& rec : rows[i].records) profiles->push_back(std::move(rec));
        }
    }

    const auto rows_n = static_cast<Eigen::Index>(n);
    const auto cols_n = static_cast<Eigen::Index>(grid_size);
    for (std::size_t a = 0; a < n_angles; ++a) {
        AngleBlock block;
        block.alpha = cfg.angles[a];
        block.q_bar.resize(rows_n, cols_n);
        block.zero_interval_mean.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (rows[i].pairs == 0) {
                block.q_bar.row(r).setConstant(std::numeric_limits<double>::quiet_NaN());
                block.zero_interval_mean[i] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const double denom = static_cast<double>(n) * static_cast<double>(rows[i].pairs);
            for (std::size_t g = 0; g < grid_size; ++g) {
                block.q_bar(r, static_cast<Eigen::Index>(g)) = static_cast<double>(rows[i].sums[a][g]) / denom;
            }
            block.zero_interval_mean[i] = rows[i].zero_sum[a] / static_cast<double>(rows[i].pairs);
        }
        block.q_tilde = normalize(block.q_bar, &block.zero_norm_rows);
        if (grid_size >= 5) {
            block.dq = smooth_derivative(block.q_tilde, cfg.smoothing_window_fraction);
        } else {
            block.dq = differences(block.q_tilde);
        }
        bundle.angles.push_back(std::move(block));
    }
    return bundle;
}

DQFBundle compute_bundle(const Dataset& ds, const Config& cfg, bool z_scale_first, const ComputeOptions& opts) {
    if (!ds.has_coords()) throw UnsupportedOperation("compute_bundle(Dataset) needs coordinates");
    Dataset prepared = z_scale_first ? z_scale(ds) : ds;
    auto bundle = compute_bundle(InnerProductView::from_coordinates(prepared.coords), prepared.ids, cfg, opts);
    bundle.flags.z_scaled = prepared.scaled;
    bundle.flags.constant_columns = prepared.constant_columns;
    return bundle;
}

}  // namespace dqf
