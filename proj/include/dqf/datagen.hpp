#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqf/core.hpp"
#include "dqf/dqf1d.hpp"

namespace dqf::datagen {

/// Standard normal density with a low-density hole around 0:
/// 0.05 on |x| <= 0.13, 0.987*(phi(x) + phi(|x| - 0.13)) on 0.13 < |x| < 0.26,
/// 0.987*phi(x) beyond.
double holey_normal_pdf(double x);
double holey_normal_cdf(double x);
double holey_normal_quantile(double p);

/// P(|X| <= r) for X with the holey density.
double holey_radius_cdf(double r);

Sample1D gen_holey_normal_1d(std::size_t n, std::uint64_t seed);

/// Rotationally symmetric 2-D version: R = |X|, angle uniform. Points inside
/// the hole (radius <= 0.13) are labelled 1.
Dataset gen_holey_2d(std::size_t n, std::uint64_t seed);

/// 100 points in a 30-dimensional annulus 1/3 <= |x| <= 1 with radial density
/// proportional to (1 - r), an inlying micro-cluster of five points around
/// 0.15*e1 (sd 0.02 per coordinate), and x106 = -x101. The six are labelled 1.
Dataset gen_annulus_microcluster(std::uint64_t seed);

/// Simulation rows 1-4 with a single labelled outlier:
///  1. U(0,1)^2, n = 80, embedded in D = 50; outlier shifted by 0.4 orthogonally.
///  2. U(0,1)^6, n = 100, embedded in D = 100, N(0, 0.05^2) noise; shift of norm 10.
///  3. 100 points on y3 = 2cos((y1 - 0.5)pi), 101st at (0.5, 0.5, 1), D = 30.
///  4. n = 50 standard normal in D = 30; one first coordinate set to 6.
/// Embeddings use a random linear map with U(-1,1) coefficients.
Dataset gen_table1_scenario(int row, std::uint64_t seed);

/// The curved-manifold example with its outlier at (0.5, 0.5, 1.5).
Dataset gen_manifold_fig7(std::uint64_t seed);

/// Noisy curved manifold: every point gets N(0, 0.05^2 I) in 3-space, the
/// outlier sits at (0.5, 0.5, 0) plus that noise.
Dataset gen_manifold_noisy(std::uint64_t seed);

struct ScenarioSpec {
    std::string name;
    std::size_t n = 0;
    std::size_t ambient_dim = 0;
    std::size_t intrinsic_dim = 0;
    double noise_sd = 0.0;
    std::string outlier;
};

std::vector<ScenarioSpec> scenarios();

/// Dispatches on the scenario name. `n` only applies to holey-2d.
Dataset generate(const std::string& name, std::uint64_t seed, std::optional<std::size_t> n = std::nullopt);

}  // namespace dqf::datagen
