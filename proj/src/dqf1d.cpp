#include "dqf/dqf1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dqf/error.hpp"

namespace dqf {

Sample1D::Sample1D(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("sample contains a non-finite value");
    }
    std::sort(values_.begin(), values_.end());
}

double ecdf(const Sample1D& s, double x) {
    if (s.size() == 0) return 0.0;
    const auto v = s.values();
    const auto count = std::upper_bound(v.begin(), v.end(), x) - v.begin();
    return static_cast<double>(count) / static_cast<double>(s.size());
}

double depth_1d(const Sample1D& s, double x, double tip) {
    const double fx = ecdf(s, x);
    if (x <= tip) return std::min(fx, ecdf(s, tip) - fx);
    return std::min(fx - ecdf(s, tip), 1.0 - fx);
}

std::vector<double> uniform_tips(double lo, double hi, std::size_t m) {
    std::vector<double> tips(m);
    const double width = hi - lo;
    for (std::size_t k = 0; k < m; ++k) {
        tips[k] = lo + width * ((static_cast<double>(k) + 0.5) / static_cast<double>(m));
    }
    return tips;
}

std::vector<double> regular_delta_grid(std::size_t size) {
    std::vector<double> grid(size);
    for (std::size_t k = 0; k < size; ++k) {
        grid[k] = static_cast<double>(k + 1) / static_cast<double>(size);
    }
    return grid;
}

double step_quantile(std::span<const double> sorted, double delta) {
    const auto m = sorted.size();
    if (delta <= 0.0) return sorted.front();
    // Guard against k/m * m rounding just above an integer.
    const double pos = delta * static_cast<double>(m);
    auto k = static_cast<std::size_t>(std::ceil(pos - 1e-9));
    k = std::clamp<std::size_t>(k, 1, m);
    return sorted[k - 1];
}

DQFCurve dqf_1d(const Sample1D& s, double x, std::span<const double> tips,
                std::span<const double> delta_grid) {
    if (tips.empty()) throw std::invalid_argument("dqf_1d needs at least one tip");
    std::vector<double> depths;
    depths.reserve(tips.size());
    for (double tip : tips) depths.push_back(depth_1d(s, x, tip));
    std::sort(depths.begin(), depths.end());

    DQFCurve curve;
    curve.delta_grid.assign(delta_grid.begin(), delta_grid.end());
    curve.q.reserve(delta_grid.size());
    for (double delta : delta_grid) curve.q.push_back(step_quantile(depths, delta));
    return curve;
}

Distribution1D Distribution1D::uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("uniform law needs lo < hi");
    Distribution1D d;
    d.lo = lo;
    d.hi = hi;
    d.cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
    d.quantile = [lo, hi](double p) { return lo + std::clamp(p, 0.0, 1.0) * (hi - lo); };
    return d;
}

Distribution1D Distribution1D::linear_density() {
    Distribution1D d;
    d.cdf = [](double x) {
        const double u = std::clamp(x, 0.0, 1.0);
        return u * u;
    };
    d.quantile = [](double p) { return std::sqrt(std::clamp(p, 0.0, 1.0)); };
    return d;
}

double population_depth_1d(const Distribution1D& F, double x, double s) {
    const double fx = F.cdf(x);
    if (x <= s) return std::min(fx, F.cdf(s) - fx);
    return std::min(fx - F.cdf(s), 1.0 - fx);
}

namespace {

constexpr int kBisectionSteps = 200;

// Largest s in [from, to] with depth(s) <= t, depth monotone non-decreasing
// when moving from `from` toward `to`.
double sublevel_end(const Distribution1D& F, double x, double t, double from, double to) {
    if (population_depth_1d(F, x, to) <= t) return to;
    double inside = from;
    double outside = to;
    for (int it = 0; it < kBisectionSteps; ++it) {
        const double mid = 0.5 * (inside + outside);
        if (mid == inside || mid == outside) break;
        if (population_depth_1d(F, x, mid) <= t) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return inside;
}

}  // namespace

double population_dqf_1d(const Distribution1D& F, const Distribution1D& G, double x, double delta) {
    if (delta <= 0.0) return 0.0;
    const double fx = F.cdf(x);
    const double td = std::min(fx, 1.0 - fx);

    auto measure = [&](double t) {
        const double b = sublevel_end(F, x, t, x, G.hi);
        const double a = sublevel_end(F, x, t, x, G.lo);
        return G.cdf(b) - G.cdf(a);
    };

    if (measure(0.0) >= delta) return 0.0;
    double lo = 0.0;
    double hi = td;
    for (int it = 0; it < kBisectionSteps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (measure(mid) >= delta) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double delta_star(const Distribution1D& F, double x) {
    if (!(x >= F.lo && x <= F.hi)) throw DomainError("delta_star: x outside the support of F");
    const double fx = F.cdf(x);
    if (fx <= 0.5) return F.quantile(2.0 * fx);
    return 1.0 - F.quantile(2.0 * fx - 1.0);
}

double zero_run_length_1d(const Sample1D& s, double x, double support_lo, double support_hi) {
    const auto v = s.values();
    if (std::binary_search(v.begin(), v.end(), x)) return 0.0;
    const auto above = std::upper_bound(v.begin(), v.end(), x);
    const double left = above == v.begin() ? -std::numeric_limits<double>::infinity() : *(above - 1);
    const double right = above == v.end() ? std::numeric_limits<double>::infinity() : *above;
    const double lo = std::max(left, support_lo);
    const double hi = std::min(right, support_hi);
    return std::max(0.0, hi - lo);
}

double shorth(const Sample1D& s, double alpha, double x) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("shorth: alpha must lie in (0, 1]");
    const auto v = s.values();
    const std::size_t n = v.size();
    if (n == 0) throw std::invalid_argument("shorth: empty sample");
    auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + k <= n; ++i) {
        const double lo = std::min(v[i], x);
        const double hi = std::max(v[i + k - 1], x);
        best = std::min(best, hi - lo);
    }
    return best;
}

}  // namespace dqf
