#include "dqf/datagen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

#include "dqf/rng.hpp"

namespace dqf::datagen {

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

constexpr double kHole = 0.13;
constexpr double kShoulder = 0.26;
constexpr double kWeight = 0.987;
constexpr double kHoleDensity = 0.05;

double upper_half_cdf(double x) {
    if (x <= kHole) return 0.5 + kHoleDensity * x;
    const double at_hole = 0.5 + kHoleDensity * kHole;
    if (x < kShoulder) {
        return at_hole + kWeight * (Phi(x) - Phi(kHole) + Phi(x - kHole) - Phi(0.0));
    }
    const double at_shoulder =
        at_hole + kWeight * (Phi(kShoulder) - Phi(kHole) + Phi(kShoulder - kHole) - Phi(0.0));
    return at_shoulder + kWeight * (Phi(x) - Phi(kShoulder));
}

std::vector<std::string> row_ids(std::size_t n) { return default_ids(n); }

Matrix uniform_map(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.uniform(-1.0, 1.0);
    }
    return a;
}

// Random direction orthogonal to the row space of `map`, scaled to `norm`.
Eigen::RowVectorXd orthogonal_shift(Rng& rng, const Matrix& map, double norm) {
    const auto dim = map.cols();
    Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(map.transpose())
                                .householderQ() *
                            Eigen::MatrixXd::Identity(dim, map.rows());
    Eigen::VectorXd v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = rng.normal();
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    v *= norm / v.norm();
    return v.transpose();
}

Dataset labelled(Matrix coords, std::size_t outlier) {
    Dataset ds;
    ds.ids = row_ids(static_cast<std::size_t>(coords.rows()));
    std::vector<int> labels(ds.ids.size(), 0);
    labels[outlier] = 1;
    ds.labels = std::move(labels);
    ds.coords = std::move(coords);
    return ds;
}

Dataset curved_manifold(std::uint64_t seed, double outlier_height, double noise_sd, double outlier_y3_base) {
    Rng rng(stream_key(seed, 0x3a11));
    const std::size_t n = 101;
    Matrix y(static_cast<Eigen::Index>(n), 3);
    for (std::size_t r = 0; r + 1 < n; ++r) {
        const double y1 = rng.uniform();
        const double y2 = rng.uniform();
        y.row(static_cast<Eigen::Index>(r)) << y1, y2, 2.0 * std::cos((y1 - 0.5) * std::numbers::pi);
    }
    y.row(static_cast<Eigen::Index>(n - 1)) << 0.5, 0.5, noise_sd > 0.0 ? outlier_y3_base : outlier_height;
    if (noise_sd > 0.0) {
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            for (Eigen::Index c = 0; c < 3; ++c) y(r, c) += rng.normal(0.0, noise_sd);
        }
    }
    const Matrix map = uniform_map(rng, 3, 30);
    return labelled(y * map, n - 1);
}

}  // namespace

double holey_normal_pdf(double x) {
    const double a = std::abs(x);
    if (a <= kHole) return kHoleDensity;
    if (a < kShoulder) return kWeight * (phi(x) + phi(a - kHole));
    return kWeight * phi(x);
}

double holey_normal_cdf(double x) {
    if (x >= 0.0) return upper_half_cdf(x);
    return 1.0 - upper_half_cdf(-x);
}

double holey_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("holey_normal_quantile: p must lie in (0, 1)");
    double lo = -40.0;
    double hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (holey_normal_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double holey_radius_cdf(double r) {
    if (r <= 0.0) return 0.0;
    return 2.0 * holey_normal_cdf(r) - 1.0;
}

Sample1D gen_holey_normal_1d(std::size_t n, std::uint64_t seed) {
    Rng rng(stream_key(seed, 0x401e));
    std::vector<double> v(n);
    for (auto& x : v) x = holey_normal_quantile(rng.uniform_open());
    return Sample1D(std::move(v));
}

Dataset gen_holey_2d(std::size_t n, std::uint64_t seed) {
    Rng rng(stream_key(seed, 0x2d));
    Dataset ds;
    ds.ids = row_ids(n);
    ds.coords.resize(static_cast<Eigen::Index>(n), 2);
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double radius = std::abs(holey_normal_quantile(rng.uniform_open()));
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        ds.coords.row(static_cast<Eigen::Index>(r)) << radius * std::cos(theta), radius * std::sin(theta);
        labels[r] = radius <= kHole ? 1 : 0;
    }
    ds.labels = std::move(labels);
    return ds;
}

Dataset gen_annulus_microcluster(std::uint64_t seed) {
    Rng rng(stream_key(seed, 0xa1));
    constexpr Eigen::Index dim = 30;
    constexpr Eigen::Index bulk = 100;
    Matrix x(bulk + 6, dim);
    for (Eigen::Index r = 0; r < bulk; ++r) {
        Eigen::RowVectorXd dir(dim);
        for (Eigen::Index c = 0; c < dim; ++c) dir(c) = rng.normal();
        dir.normalize();
        const double radius = 1.0 - (2.0 / 3.0) * std::sqrt(1.0 - rng.uniform());
        x.row(r) = radius * dir;
    }
    for (Eigen::Index r = bulk; r < bulk + 5; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) x(r, c) = rng.normal(0.0, 0.02);
        x(r, 0) += 0.15;
    }
    x.row(bulk + 5) = -x.row(bulk);

    Dataset ds;
    ds.ids = row_ids(bulk + 6);
    std::vector<int> labels(bulk + 6, 0);
    for (Eigen::Index r = bulk; r < bulk + 6; ++r) labels[static_cast<std::size_t>(r)] = 1;
    ds.labels = std::move(labels);
    ds.coords = std::move(x);
    return ds;
}

Dataset gen_table1_scenario(int row, std::uint64_t seed) {
    Rng rng(stream_key(seed, 0x7ab1e, static_cast<std::uint64_t>(row)));
    switch (row) {
        case 1:
        case 2: {
            const std::size_t n = row == 1 ? 80 : 100;
            const std::size_t d = row == 1 ? 2 : 6;
            const std::size_t big_d = row == 1 ? 50 : 100;
            Matrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                for (Eigen::Index c = 0; c < y.cols(); ++c) y(r, c) = rng.uniform();
            }
            const Matrix map = uniform_map(rng, d, big_d);
            Matrix x = y * map;
            if (row == 2) {
                for (Eigen::Index r = 0; r < x.rows(); ++r) {
                    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) += rng.normal(0.0, 0.05);
                }
            }
            const auto outlier = static_cast<std::size_t>(rng.below(n));
            x.row(static_cast<Eigen::Index>(outlier)) += orthogonal_shift(rng, map, row == 1 ? 0.4 : 10.0);
            return labelled(std::move(x), outlier);
        }
        case 3:
            return curved_manifold(seed, 1.0, 0.0, 0.0);
        case 4: {
            Matrix x(50, 30);
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.normal();
            }
            const auto outlier = static_cast<std::size_t>(rng.below(50));
            x(static_cast<Eigen::Index>(outlier), 0) = 6.0;
            return labelled(std::move(x), outlier);
        }
        default:
            throw std::invalid_argument("simulation row must be 1, 2, 3 or 4");
    }
}

Dataset gen_manifold_fig7(std::uint64_t seed) { return curved_manifold(seed, 1.5, 0.0, 0.0); }

Dataset gen_manifold_noisy(std::uint64_t seed) { return curved_manifold(seed, 0.0, 0.05, 0.0); }

std::vector<ScenarioSpec> scenarios() {
    return {
        {"holey-2d", 400, 2, 2, 0.0, "points inside the central hole"},
        {"annulus", 106, 30, 30, 0.0, "inlying micro-cluster x101..x105 and isolated x106"},
        {"table1-row1", 80, 50, 2, 0.0, "orthogonal shift of norm 0.4"},
        {"table1-row2", 100, 100, 6, 0.05, "orthogonal shift of norm 10"},
        {"table1-row3", 101, 30, 2, 0.0, "x101 at (0.5, 0.5, 1)"},
        {"table1-row4", 50, 30, 30, 0.0, "first coordinate set to 6"},
        {"manifold", 101, 30, 2, 0.0, "x101 at (0.5, 0.5, 1.5)"},
        {"manifold-noisy", 101, 30, 2, 0.05, "x101 at (0.5, 0.5, 0) plus noise"},
    };
}

Dataset generate(const std::string& name, std::uint64_t seed, std::optional<std::size_t> n) {
    if (name == "holey-2d") return gen_holey_2d(n.value_or(400), seed);
    if (name == "annulus") return gen_annulus_microcluster(seed);
    if (name == "table1-row1") return gen_table1_scenario(1, seed);
    if (name == "table1-row2") return gen_table1_scenario(2, seed);
    if (name == "table1-row3") return gen_table1_scenario(3, seed);
    if (name == "table1-row4") return gen_table1_scenario(4, seed);
    if (name == "manifold") return gen_manifold_fig7(seed);
    if (name == "manifold-noisy") return gen_manifold_noisy(seed);
    throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace dqf::datagen
