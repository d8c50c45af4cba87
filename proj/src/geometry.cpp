#include "dqf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dqf/error.hpp"

namespace dqf {

double sequential_dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
    return sum;
}

namespace {

std::span<const double> row_span(const Matrix& m, std::size_t r) {
    return {m.data() + static_cast<std::ptrdiff_t>(r) * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

Matrix gram_from_coordinates(const Matrix& coords) {
    const auto n = static_cast<std::size_t>(coords.rows());
    Matrix k(coords.rows(), coords.rows());
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                sequential_dot(row_span(coords, a), row_span(coords, b));
        }
    }
    return k;
}

InnerProductView InnerProductView::from_coordinates(Matrix coords) {
    InnerProductView view;
    view.n_ = static_cast<std::size_t>(coords.rows());
    view.coords_ = std::make_shared<const Matrix>(std::move(coords));
    view.diag_.resize(view.n_);
    for (std::size_t a = 0; a < view.n_; ++a) view.diag_[a] = view.row_dot(a, a);
    return view;
}

InnerProductView InnerProductView::from_gram(Matrix gram) {
    if (gram.rows() != gram.cols()) throw std::invalid_argument("Gram matrix must be square");
    InnerProductView view;
    view.n_ = static_cast<std::size_t>(gram.rows());
    view.gram_ = std::make_shared<const Matrix>(std::move(gram));
    view.diag_.resize(view.n_);
    for (std::size_t a = 0; a < view.n_; ++a) view.diag_[a] = view.ip(a, a);
    return view;
}

double InnerProductView::row_dot(std::size_t a, std::size_t b) const {
    return sequential_dot(row_span(*coords_, a), row_span(*coords_, b));
}

PairFrame pair_frame(const InnerProductView& view, std::size_t i, std::size_t j, AnchorKind anchor) {
    if (i == j) throw std::invalid_argument("pair_frame needs i != j");
    const double ii = view.sq_norm(i);
    const double jj = view.sq_norm(j);
    const double ij = view.ip(i, j);
    const double dist2 = ii + jj - 2.0 * ij;
    if (!(dist2 > 1e-24)) {
        throw DegeneratePairError("observations " + std::to_string(i) + " and " + std::to_string(j) +
                                  " coincide");
    }
    const double dist = std::sqrt(dist2);

    PairFrame f;
    f.i = i;
    f.j = j;
    f.anchor = anchor;
    f.half_span = 0.5 * dist;
    const std::size_t n = view.size();
    f.t.resize(n);
    f.perp2.resize(n);
    const double mid_norm2 = 0.25 * (ii + 2.0 * ij + jj);
    for (std::size_t w = 0; w < n; ++w) {
        const double wi = view.ip(w, i);
        const double wj = view.ip(w, j);
        const double ww = view.sq_norm(w);
        double t;
        double norm2;
        if (anchor == AnchorKind::midpoint) {
            t = (wj - wi - 0.5 * (jj - ii)) / dist;
            norm2 = ww - wi - wj + mid_norm2;
        } else {
            t = (wj - wi - ij + ii) / dist;
            norm2 = ww - 2.0 * wi + ii;
        }
        f.t[w] = t;
        f.perp2[w] = std::max(0.0, norm2 - t * t);
    }
    return f;
}

bool cone_contains(const PairFrame& frame, double c, std::size_t w, double alpha) {
    return in_cone(frame.t[w], frame.perp2[w], c, std::cos(alpha));
}

Side side_of(const PairFrame& frame, double c, std::size_t w, double alpha) {
    if (!cone_contains(frame, c, w, alpha)) return Side::outside;
    const double d = c < 0.0 ? 1.0 : -1.0;
    return d * frame.t[w] <= 0.0 ? Side::A : Side::B;
}

double winsorized_variance(std::span<const double> values, std::size_t k) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    k = std::min(k, (n - 1) / 2);
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double low = v[k];
    const double high = v[n - 1 - k];
    for (auto& x : v) x = std::clamp(x, low, high);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(n - 1);
}

ProjectionStats projection_stats(const PairFrame& frame, std::size_t winsorize_per_side) {
    if (frame.t.size() < 3) throw std::invalid_argument("projection_stats needs at least 3 observations");
    ProjectionStats s;
    const auto [lo, hi] = std::minmax_element(frame.t.begin(), frame.t.end());
    s.t_min = *lo;
    s.t_max = *hi;
    s.half_span = frame.half_span;
    const double var = winsorized_variance(frame.t, winsorize_per_side);
    // Spread below rounding noise of the axis coordinates counts as zero.
    const double noise = 1e-12 * std::max(frame.half_span, std::max(std::abs(s.t_min), std::abs(s.t_max)));
    const double sd = std::sqrt(var);
    s.robust_sd = sd > noise ? sd : 0.0;
    return s;
}

}  // namespace dqf
