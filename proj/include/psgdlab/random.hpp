#pragma once

#include <cstdint>
#include <random>

#include "psgdlab/linalg.hpp"

namespace psgdlab {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for replicate/grid cell `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Counter-based uniform draw on {0, ..., n-1}: the t-th sampled index of a
// stream is a pure function of (seed, t), so replay never needs the stream.
std::size_t counter_index(std::uint64_t seed, std::uint64_t t, std::size_t n);

Vec standard_normal(Rng& rng, int dim);
double uniform(Rng& rng, double lo, double hi);

// Haar-ish orthogonal matrix (QR of a Gaussian matrix with sign fix).
Mat random_orthogonal(Rng& rng, int dim);

// SPD matrix with lambda_max = 1 and condition number exactly `kappa`;
// interior eigenvalues log-uniform in [1/kappa, 1].
SymmetricPD random_spd(Rng& rng, int dim, double kappa);

// Symmetric W with spectrum in [0, 1].
Mat random_contraction(Rng& rng, int dim);

}  // namespace psgdlab
