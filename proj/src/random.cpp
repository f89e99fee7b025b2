#include "psgdlab/random.hpp"

#include <cmath>

#include "psgdlab/errors.hpp"

namespace psgdlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

std::size_t counter_index(std::uint64_t seed, std::uint64_t t, std::size_t n) {
  const std::uint64_t bits = splitmix64(seed ^ splitmix64(t));
  return static_cast<std::size_t>((static_cast<unsigned __int128>(bits) * n) >> 64);
}

Vec standard_normal(Rng& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out(i) = g(rng);
  return out;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Mat random_orthogonal(Rng& rng, int dim) {
  Mat g(dim, dim);
  for (int j = 0; j < dim; ++j) g.col(j) = standard_normal(rng, dim);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

SymmetricPD random_spd(Rng& rng, int dim, double kappa) {
  if (dim < 1 || !(kappa >= 1.0)) throw ValidationError("random_spd: need dim >= 1 and kappa >= 1");
  Vec values(dim);
  const double lo = -std::log(kappa);
  for (int i = 0; i < dim; ++i) values(i) = std::exp(uniform(rng, lo, 0.0));
  values(0) = 1.0;
  if (dim > 1) values(dim - 1) = 1.0 / kappa;
  return SymmetricPD::from_eigen(random_orthogonal(rng, dim), values);
}

Mat random_contraction(Rng& rng, int dim) {
  const Mat q = random_orthogonal(rng, dim);
  Vec values(dim);
  for (int i = 0; i < dim; ++i) values(i) = uniform(rng, 0.0, 1.0);
  return symmetrize(q * values.asDiagonal() * q.transpose());
}

}  // namespace psgdlab
