#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dqf {

/// A sorted sample of finite reals.
class Sample1D {
public:
    Sample1D() = default;
    /// Sorts the input; throws std::invalid_argument on non-finite values.
    explicit Sample1D(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }

private:
    std::vector<double> values_;
};

struct DQFCurve {
    std::vector<double> delta_grid;
    std::vector<double> q;
};

/// Fraction of the sample that is <= x.
double ecdf(const Sample1D& s, double x);

/// Empirical depth of x when the split point is at `tip`: the Tukey depth of x
/// for the sample restricted to the half-line beyond the tip. Zero at tip == x.
double depth_1d(const Sample1D& s, double x, double tip);

/// m mid-quantiles (k - 1/2)/m, k = 1..m, of the uniform law on [lo, hi].
std::vector<double> uniform_tips(double lo, double hi, std::size_t m);

/// Regular grid k/size, k = 1..size.
std::vector<double> regular_delta_grid(std::size_t size);

/// Left-continuous quantile of the sorted values taken as equally weighted
/// atoms: the ceil(delta*m)-th smallest, and values[0] at delta <= 0.
double step_quantile(std::span<const double> sorted, double delta);

/// Empirical DQF of x: depths at the given tips, sorted, then read off as a
/// left-continuous step function on delta_grid. Throws std::invalid_argument
/// for an empty tip list.
DQFCurve dqf_1d(const Sample1D& s, double x, std::span<const double> tips,
                std::span<const double> delta_grid);

/// A continuous law given by its cdf and (generalised) quantile function on
/// a bounded support [lo, hi].
struct Distribution1D {
    std::function<double(double)> cdf;
    std::function<double(double)> quantile;
    double lo = 0.0;
    double hi = 1.0;

    static Distribution1D uniform(double lo = 0.0, double hi = 1.0);
    /// Density 2u on [0, 1]; cdf u^2.
    static Distribution1D linear_density();
};

/// Population depth of x at split point s (F in place of F_n).
double population_depth_1d(const Distribution1D& F, double x, double s);

/// Population DQF q_x(delta) = inf{t >= 0 : G(d_x(S) <= t) >= delta},
/// evaluated by nested bisection: the sublevel set {s : d_x(s) <= t} is an
/// interval whose ends are found on each side of x, and the level t is then
/// searched. Accurate to roughly 1e-12 in t.
double population_dqf_1d(const Distribution1D& F, const Distribution1D& G, double x, double delta);

/// Flattening point of the population DQF for G = U(0, 1):
/// F^-1(2F(x)) when F(x) <= 1/2, and 1 - F^-1(2F(x) - 1) otherwise.
/// Throws DomainError when x lies outside [F.lo, F.hi].
double delta_star(const Distribution1D& F, double x);

/// Length of the largest sample-free interval around x, clipped to the tip
/// support [support_lo, support_hi]. Zero when x is a sample point.
double zero_run_length_1d(const Sample1D& s, double x, double support_lo, double support_hi);

/// Empirical shorth: shortest interval containing x whose sample mass is at
/// least alpha. Throws std::invalid_argument unless 0 < alpha <= 1.
double shorth(const Sample1D& s, double alpha, double x);

}  // namespace dqf
