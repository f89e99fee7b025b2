#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "psgdlab/errors.hpp"
#include "psgdlab/linalg.hpp"
#include "psgdlab/random.hpp"

using namespace psgdlab;

namespace {

Mat random_symmetric(Rng& rng, int d) {
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = uniform(rng, -1.0, 1.0);
  return symmetrize(a);
}

}  // namespace

TEST(SymEig, IdentityHasUnitSpectrumAndOrthonormalBasis) {
  const EigenDecomposition e = sym_eig(Mat::Identity(3, 3));
  EXPECT_TRUE(e.values.isApprox(Vec::Ones(3)));
  EXPECT_TRUE((e.vectors.transpose() * e.vectors).isApprox(Mat::Identity(3, 3), 1e-14));
}

TEST(SymEig, TwoByTwo) {
  Mat a(2, 2);
  a << 2, 1, 1, 2;
  const EigenDecomposition e = sym_eig(a);
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), s, 1e-14);
  EXPECT_NEAR(e.vectors(0, 0) * e.vectors(1, 0), 0.5, 1e-14);
  EXPECT_NEAR(e.vectors(0, 1) * e.vectors(1, 1), -0.5, 1e-14);
}

TEST(SymEig, ReconstructionResidualAndOrdering) {
  Rng rng(1);
  for (int d : {1, 2, 5, 16, 40}) {
    const Mat a = random_symmetric(rng, d);
    const EigenDecomposition e = sym_eig(a);
    const Mat back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LE((back - a).norm(), 1e-10 * a.norm()) << "d=" << d;
    for (int i = 1; i < d; ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  }
}

TEST(SymEig, AgreesWithEigenSolver) {
  Rng rng(2);
  const Mat a = random_symmetric(rng, 7);
  const EigenDecomposition e = sym_eig(a);
  Eigen::SelfAdjointEigenSolver<Mat> ref(a);
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(e.values(i), ref.eigenvalues()(6 - i), 1e-12);
}

TEST(SymEig, RejectsNonSymmetricAndNonFinite) {
  Mat a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(sym_eig(a), ValidationError);
  a << 1, NAN, NAN, 1;
  EXPECT_THROW(sym_eig(a), ValidationError);
}

TEST(SymmetricPD, RejectsIndefinite) {
  Mat a(2, 2);
  a << 1, 2, 2, 1;
  EXPECT_THROW(SymmetricPD{a}, ValidationError);
  EXPECT_THROW(SymmetricPD{Mat::Zero(2, 2)}, ValidationError);
}

TEST(FracPower, DiagonalSquareRoot) {
  const SymmetricPD a = SymmetricPD::diagonal((Vec(2) << 4, 9).finished());
  const SymmetricPD r = frac_power(a, 0.5);
  EXPECT_TRUE(r.matrix().isApprox((Vec(2) << 2, 3).finished().asDiagonal().toDenseMatrix(), 1e-14));
}

TEST(FracPower, InverseAndSquareRootSelfConsistency) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const SymmetricPD a = random_spd(rng, 5, 50.0).scaled(3.0);
    EXPECT_LE((a.matrix() * frac_power(a, -1.0).matrix() - Mat::Identity(5, 5)).norm(), 1e-10);
    const Mat half = frac_power(a, 0.5).matrix();
    EXPECT_LE((half * half - a.matrix()).norm(), 1e-9 * a.matrix().norm());
  }
}

TEST(FracPower, EndpointsAreExact) {
  Rng rng(4);
  const SymmetricPD a = random_spd(rng, 4, 10.0);
  EXPECT_EQ((frac_power(a, 1.0).matrix() - a.matrix()).norm(), 0.0);
  EXPECT_EQ((frac_power(a, 0.0).matrix() - Mat::Identity(4, 4)).norm(), 0.0);
}

TEST(WeightedNorm, SmallCases) {
  EXPECT_DOUBLE_EQ(weighted_norm_sq((Vec(2) << 1, 0).finished(), Mat::Identity(2, 2)), 1.0);
  EXPECT_DOUBLE_EQ(weighted_norm_sq((Vec(2) << 1, 1).finished(), SymmetricPD::diagonal((Vec(2) << 2, 3).finished())),
                   5.0);
}

TEST(WeightedNorm, MatchesCholeskyFactor) {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const SymmetricPD m = random_spd(rng, 6, 100.0);
    const Vec x = standard_normal(rng, 6);
    const Eigen::LLT<Mat> llt(m.matrix());
    const double ref = (llt.matrixU() * x).squaredNorm();
    EXPECT_NEAR(weighted_norm_sq(x, m), ref, 1e-12 * (1.0 + ref));
  }
}

TEST(WeightedNorm, DimensionMismatchThrows) {
  EXPECT_THROW(weighted_norm_sq(Vec::Ones(3), Mat::Identity(2, 2)), ValidationError);
}

TEST(TraceProd, SmallCases) {
  const Mat sigma = (Vec(3) << 1, 2, 3).finished().asDiagonal();
  EXPECT_DOUBLE_EQ(trace_prod(Mat::Identity(3, 3), sigma), 6.0);
  const SymmetricPD a = SymmetricPD::diagonal((Vec(2) << 1, 0.5).finished());
  const SymmetricPD b = SymmetricPD::diagonal((Vec(2) << 0.2, 0.1).finished());
  EXPECT_NEAR(trace_prod(frac_power(a, -1.0), b), 0.4, 1e-15);
}

TEST(TraceProd, MatchesExplicitProductTrace) {
  Rng rng(6);
  const Mat a = random_symmetric(rng, 4);
  const Mat b = random_symmetric(rng, 4);
  EXPECT_NEAR(trace_prod(a, b), (a * b).trace(), 1e-12);
}

TEST(Pencil, InverseGivesUnitSpectrum) {
  Rng rng(7);
  const SymmetricPD h = random_spd(rng, 4, 20.0);
  const PencilSpectrum ps = pencil_spectrum(frac_power(h, -1.0), h);
  EXPECT_NEAR(ps.lambda_min, 1.0, 1e-12);
  EXPECT_NEAR(ps.lambda_max, 1.0, 1e-12);
  EXPECT_NEAR(ps.kappa, 1.0, 1e-12);
}

TEST(Pencil, DiagonalCase) {
  const PencilSpectrum ps =
      pencil_spectrum(SymmetricPD::identity(2), SymmetricPD::diagonal((Vec(2) << 1, 0.25).finished()));
  EXPECT_NEAR(ps.lambda_max, 1.0, 1e-15);
  EXPECT_NEAR(ps.lambda_min, 0.25, 1e-15);
  EXPECT_NEAR(ps.kappa, 4.0, 1e-14);
}

TEST(Pencil, DeterminantAndSimilarityOracles) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const SymmetricPD p = random_spd(rng, 5, 10.0);
    const SymmetricPD h = random_spd(rng, 5, 10.0);
    const PencilSpectrum ps = pencil_spectrum(p, h);
    const double det = p.matrix().determinant() * h.matrix().determinant();
    EXPECT_NEAR(ps.values.prod() / det, 1.0, 1e-9);
    // Eigenvalues of the non-symmetric PH.
    Eigen::EigenSolver<Mat> es(p.matrix() * h.matrix());
    Vec ev = es.eigenvalues().real();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    EXPECT_LE((ev - ps.values).norm(), 1e-10);
  }
}

TEST(MatrixCsv, RoundTripIsExact) {
  Rng rng(9);
  const Mat a = random_spd(rng, 4, 7.0).matrix();
  const auto path = (std::filesystem::temp_directory_path() / "psgdlab_rt.csv").string();
  write_matrix_csv(path, a);
  EXPECT_EQ((read_matrix_csv(path) - a).norm(), 0.0);
}

TEST(MatrixCsv, ReportsLineOfBadEntry) {
  const auto path = (std::filesystem::temp_directory_path() / "psgdlab_bad.csv").string();
  std::ofstream(path) << "1,2\n3,x\n";
  try {
    read_matrix_csv(path);
    FAIL() << "expected an error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  std::ofstream(path) << "1,2\n3\n";
  EXPECT_THROW(read_matrix_csv(path), ValidationError);
}
