#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/QR>

#include "dqf/error.hpp"
#include "dqf/bundle_io.hpp"
#include "dqf/dqf1d.hpp"
#include "dqf/dqfnd.hpp"
#include "dqf/rng.hpp"
#include "dqf/scoring.hpp"

using dqf::AnchorKind;
using dqf::InnerProductView;
using dqf::Matrix;
using dqf::TipVariant;

namespace {

dqf::ProjectionStats stats(double lo, double hi, double sd, double half_span = 1.0) {
    dqf::ProjectionStats s;
    s.t_min = lo;
    s.t_max = hi;
    s.robust_sd = sd;
    s.half_span = half_span;
    return s;
}

Matrix four_points() {
    Matrix x(4, 2);
    x << 0, 0, 2, 0, 1, 0.5, 1, 3;
    return x;
}

Matrix gaussian(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
    dqf::Rng rng(seed);
    Matrix x(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) x(r, c) = rng.normal();
    }
    return x;
}

}  // namespace

TEST_CASE("tip grids are mid-quantiles of G") {
    dqf::TipDistributionSpec fixed;
    fixed.variant = TipVariant::uniform_fixed;
    fixed.lower = 0.0;
    fixed.upper = 1.0;
    CHECK(dqf::tip_grid(fixed, stats(-1, 1, 1), 4) == std::vector<double>{0.125, 0.375, 0.625, 0.875});

    dqf::TipDistributionSpec normal;
    const auto n2 = dqf::tip_grid(normal, stats(-5, 5, 2.0), 2);
    CHECK(n2[0] == doctest::Approx(-1.3490).epsilon(1e-4));
    CHECK(n2[1] == doctest::Approx(1.3490).epsilon(1e-4));

    dqf::TipDistributionSpec range;
    range.variant = TipVariant::uniform_range;
    CHECK(dqf::tip_grid(range, stats(-1, 1, 1), 4) == std::vector<double>{-0.75, -0.25, 0.25, 0.75});

    dqf::TipDistributionSpec robust;
    robust.variant = TipVariant::uniform_robust;
    robust.scale = 2.0;
    CHECK(dqf::tip_grid(robust, stats(-9, 9, 0.5), 2) == std::vector<double>{-0.5, 0.5});
}

TEST_CASE("tips never sit on the anchor; zero spread collapses the grid") {
    dqf::TipDistributionSpec normal;
    const auto odd = dqf::tip_grid(normal, stats(-1, 1, 1.0, 2.0), 5);
    CHECK(odd[2] == doctest::Approx(2e-12));
    CHECK(odd[2] > 0.0);
    const auto collapsed = dqf::tip_grid(normal, stats(-1, 1, 0.0, 2.0), 4);
    CHECK(collapsed == std::vector<double>{-2e-6, -2e-6, 2e-6, 2e-6});
}

TEST_CASE("monte carlo tips are sorted draws from G") {
    dqf::TipDistributionSpec range;
    range.variant = TipVariant::uniform_range;
    dqf::Rng rng(4);
    const auto tips = dqf::tip_sample(range, stats(-1, 3, 1), 500, rng);
    CHECK(std::is_sorted(tips.begin(), tips.end()));
    CHECK(tips.front() >= -1.0);
    CHECK(tips.back() <= 3.0);
}

TEST_CASE("four-point depth profile by hand") {
    const auto view = InnerProductView::from_coordinates(four_points());
    const auto f = dqf::pair_frame(view, 0, 1, AnchorKind::midpoint);
    const double a = std::numbers::pi / 4;
    const auto p = dqf::pair_depth_profile(f, std::vector<double>{-2.0, -0.25, 5.0}, a);
    CHECK(p.depth(0) == doctest::Approx(0.25));
    CHECK(p.depth(1) == 0.0);
    // Mirror of the first tip: x_i alone on side B.
    CHECK(p.depth(2) == doctest::Approx(0.25));
}

TEST_CASE("pair DQF sorts depths") {
    dqf::DepthProfile p;
    p.n = 4;
    p.tips = {-1, -0.5, 0.5, 1};
    p.counts = {2, 1, 1, 2};
    CHECK(dqf::pair_dqf(p) == std::vector<double>{0.25, 0.25, 0.5, 0.5});
    p.counts = {0, 0, 0, 0};
    CHECK(dqf::pair_dqf(p) == std::vector<double>{0, 0, 0, 0});
    p.counts = {0, 0, 1, 0};
    CHECK(dqf::pair_dqf(p) == std::vector<double>{0, 0, 0, 0.25});
}

TEST_CASE("aggregate and normalize") {
    const std::vector<std::vector<double>> two{{0, 0.2}, {0.1, 0.3}};
    const auto mean = dqf::aggregate(two);
    CHECK(mean[0] == doctest::Approx(0.05));
    CHECK(mean[1] == doctest::Approx(0.25));
    const std::vector<std::vector<double>> one{{0.1, 0.4}};
    CHECK(dqf::aggregate(one) == one[0]);

    Matrix q(3, 3);
    q << 0.1, 0.2, 0.4, 0, 0, 0, 0.05, 0.3, 0.3;
    std::vector<std::size_t> zero_rows;
    const auto t = dqf::normalize(q, &zero_rows);
    CHECK(t(0, 0) == doctest::Approx(0.25));
    CHECK(t(0, 1) == doctest::Approx(0.5));
    CHECK(t(0, 2) == 1.0);
    CHECK(t.row(1).isZero());
    CHECK(zero_rows == std::vector<std::size_t>{1});
    CHECK(t(2, 2) == 1.0);
}

TEST_CASE("smoothed derivative") {
    const std::size_t m = 100;
    Matrix lin(1, m), flat(1, m), step(1, m);
    for (std::size_t k = 0; k < m; ++k) {
        const double d = static_cast<double>(k + 1) / m;
        lin(0, k) = 0.3 * d + 0.1;
        flat(0, k) = 0.7;
        step(0, k) = d < 0.5 ? 0.0 : 1.0;
    }
    CHECK(dqf::smoothing_window(m, 0.05) == 5);
    CHECK(dqf::smoothing_window(m, 0.0) == 3);
    CHECK(dqf::smoothing_window(m, 0.1) == 11);
    const auto dl = dqf::smooth_derivative(lin, 0.05);
    for (std::size_t k = 0; k < m; ++k) CHECK(std::abs(dl(0, k) - 0.3) <= 1e-9);
    const auto df = dqf::smooth_derivative(flat, 0.05);
    CHECK(df.cwiseAbs().maxCoeff() <= 1e-12);
    const auto ds = dqf::smooth_derivative(step, 0.05);
    Eigen::Index peak = 0;
    ds.row(0).maxCoeff(&peak);
    const double at = static_cast<double>(peak + 1) / m;
    CHECK(std::abs(at - 0.5) <= 3.0 / m);
    CHECK_THROWS_AS(dqf::smooth_derivative(Matrix::Ones(1, 4), 0.05), std::invalid_argument);
}

TEST_CASE("exchangeable points of an equilateral triangle get identical rows") {
    Matrix x(3, 2);
    x << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2;
    dqf::Config cfg;
    cfg.m_tips = 20;
    cfg.tip_distribution.variant = TipVariant::uniform_range;
    const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(3), cfg);
    for (const auto& block : b.angles) {
        CHECK(block.q_bar.row(0).isApprox(block.q_bar.row(1), 1e-12));
        CHECK(block.q_bar.row(0).isApprox(block.q_bar.row(2), 1e-12));
    }
}

TEST_CASE("bundle invariants on random data for every tip law") {
    const Matrix x = gaussian(12, 60, 4);
    for (auto g : {TipVariant::normal_adaptive, TipVariant::uniform_range, TipVariant::uniform_robust,
                   TipVariant::uniform_fixed}) {
        dqf::Config cfg;
        cfg.tip_distribution.variant = g;
        cfg.tip_distribution.scale = 2.0;
        cfg.n_pairs = 15;
        const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(60), cfg);
        CHECK(b.delta_grid.size() == 100);
        CHECK(b.angles.size() == 3);
        for (const auto& block : b.angles) {
            for (Eigen::Index r = 0; r < block.q_bar.rows(); ++r) {
                for (Eigen::Index k = 1; k < block.q_bar.cols(); ++k) {
                    CHECK(block.q_bar(r, k) >= block.q_bar(r, k - 1));
                }
                CHECK(block.q_bar.row(r).maxCoeff() <= 0.5);
                if (block.q_bar(r, 99) > 0) CHECK(block.q_tilde(r, 99) == 1.0);
                CHECK(block.dq.row(r).minCoeff() >= -1e-9);
            }
        }
        CHECK(b.flags.pair_counts == std::vector<std::size_t>(60, 15));
        if (g == TipVariant::uniform_fixed) CHECK(b.flags.fixed_bounds.has_value());
    }
}

TEST_CASE("pair DQFs are counts over n") {
    const Matrix x = gaussian(8, 25, 3);
    const auto view = InnerProductView::from_coordinates(x);
    const auto f = dqf::pair_frame(view, 3, 9, AnchorKind::midpoint);
    const auto st = dqf::projection_stats(f);
    const auto tips = dqf::tip_grid(dqf::TipDistributionSpec{}, st, 50);
    const auto p = dqf::pair_depth_profile(f, tips, 0.9);
    CHECK(p.counts.size() == 50);
    for (int c : p.counts) {
        CHECK(c >= 0);
        CHECK(c <= 12);
    }
    const auto q = dqf::pair_dqf(p);
    CHECK(std::is_sorted(q.begin(), q.end()));
}

TEST_CASE("results do not depend on the thread count") {
    const Matrix x = gaussian(21, 70, 6);
    dqf::Config cfg;
    dqf::ComputeOptions one;
    one.threads = 1;
    dqf::ComputeOptions many;
    many.threads = 5;
    const auto a = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(70), cfg, one);
    const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(70), cfg, many);
    CHECK(dqf::serialize_bundle(a) == dqf::serialize_bundle(b));
    cfg.tip_sampling = dqf::TipSampling::monte_carlo;
    const auto c = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(70), cfg, one);
    const auto d = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(70), cfg, many);
    CHECK(dqf::serialize_bundle(c) == dqf::serialize_bundle(d));
}

TEST_CASE("duplicate points are replaced from the reserve; isolated duplicates are excluded") {
    Matrix x = gaussian(31, 10, 2);
    x.row(1) = x.row(0);
    dqf::Config cfg;
    cfg.n_pairs = 3;
    const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(10), cfg);
    CHECK(b.flags.excluded.empty());
    CHECK(b.flags.pair_counts == std::vector<std::size_t>(10, 3));

    Matrix same(4, 2);
    same << 1, 1, 1, 1, 1, 1, 2, 2;
    const auto c = dqf::compute_bundle(InnerProductView::from_coordinates(same), dqf::default_ids(4), cfg);
    CHECK(c.flags.excluded.empty());
    CHECK_FALSE(c.flags.degenerate_pairs.empty());
}

TEST_CASE("bundle JSON round trip is lossless") {
    const Matrix x = gaussian(2, 20, 3);
    const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(20), dqf::Config{});
    const auto text = dqf::serialize_bundle(b);
    const auto back = dqf::bundle_from_json(nlohmann::json::parse(text));
    CHECK(dqf::serialize_bundle(back) == text);
    const auto j = nlohmann::json::parse(text);
    for (const char* key : {"ids", "delta_grid", "angles", "config", "flags"}) CHECK(j.contains(key));
    for (const char* key : {"alpha", "q_bar", "q_tilde", "dq"}) CHECK(j["angles"][0].contains(key));
    CHECK_THROWS_AS(dqf::bundle_from_json(nlohmann::json{{"ids", {"a"}}}), dqf::ParseError);
}

TEST_CASE("orthogonal embedding into higher dimension leaves DQFs unchanged") {
    const Matrix x2 = gaussian(41, 40, 2);
    Eigen::MatrixXd a = gaussian(42, 10, 10);
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    const Matrix x10 = x2 * q.leftCols(2).transpose();
    dqf::Config cfg;
    cfg.tip_distribution.variant = TipVariant::uniform_range;
    const auto b2 = dqf::compute_bundle(InnerProductView::from_coordinates(x2), dqf::default_ids(40), cfg);
    const auto b10 = dqf::compute_bundle(InnerProductView::from_coordinates(x10), dqf::default_ids(40), cfg);
    for (std::size_t k = 0; k < b2.angles.size(); ++k) {
        CHECK((b2.angles[k].q_bar - b10.angles[k].q_bar).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("anchor in an empty gap: pair DQF is zero up to the zero interval") {
    Matrix x(8, 2);
    x << -3, 0, 3, 0, -2.5, 0.3, -2.8, -0.4, -3.4, 0.2, 2.6, -0.3, 3.3, 0.1, 2.9, 0.5;
    const auto f = dqf::pair_frame(InnerProductView::from_coordinates(x), 0, 1, AnchorKind::midpoint);
    dqf::TipDistributionSpec range;
    range.variant = TipVariant::uniform_range;
    const std::size_t m = 200;
    const auto tips = dqf::tip_grid(range, dqf::projection_stats(f), m);
    const auto p = dqf::pair_depth_profile(f, tips, std::numbers::pi / 4);
    const double z = dqf::zero_interval(p);
    CHECK(z > 0.3);
    const auto q = dqf::pair_dqf(p);
    const auto grid = dqf::regular_delta_grid(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (grid[k] <= z) CHECK(q[k] == 0.0);
    }
}

TEST_CASE("small-delta growth ranks with the density at the anchor") {
    // Self anchors in a standard normal sample, the same uniform tip law for
    // every pair: the early slope of q_bar should order like the density.
    const Matrix x = gaussian(77, 300, 2);
    dqf::Config cfg;
    cfg.anchor = AnchorKind::self;
    cfg.angles = {std::numbers::pi / 4};
    cfg.tip_distribution.variant = TipVariant::uniform_fixed;
    cfg.tip_distribution.lower = -4.0;
    cfg.tip_distribution.upper = 4.0;
    const auto b = dqf::compute_bundle(InnerProductView::from_coordinates(x), dqf::default_ids(300), cfg);
    std::vector<double> slope(300), dens(300);
    for (Eigen::Index i = 0; i < 300; ++i) {
        slope[i] = b.angles[0].q_bar(i, 9) / 0.1;
        dens[i] = std::exp(-0.5 * x.row(i).squaredNorm());
    }
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto c) { return v[a] < v[c]; });
        std::vector<double> r(v.size());
        for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
        return r;
    };
    const auto ra = ranks(slope);
    const auto rb = ranks(dens);
    const double mean = (300 - 1) / 2.0;
    double num = 0, da = 0, db = 0;
    for (std::size_t k = 0; k < 300; ++k) {
        num += (ra[k] - mean) * (rb[k] - mean);
        da += (ra[k] - mean) * (ra[k] - mean);
        db += (rb[k] - mean) * (rb[k] - mean);
    }
    CHECK(num / std::sqrt(da * db) > 0.5);
}
