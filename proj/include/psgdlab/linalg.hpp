#pragma once

#include <Eigen/Dense>
#include <string>

namespace psgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct EigenDecomposition {
  Mat vectors;  // columns are orthonormal eigenvectors
  Vec values;   // descending
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver for dense symmetric matrices.
//
// Sweeps until the largest off-diagonal magnitude is at most
// 1e-13 * ||A||_F, with a budget of 100 sweeps. Throws ValidationError on
// non-symmetric input and NumericError when the budget runs out.
EigenDecomposition sym_eig(const Mat& a);

bool is_symmetric(const Mat& a);

/// Symmetric positive-definite matrix with its eigendecomposition cached at
/// construction. Immutable; every spectral query reads the cache.
class SymmetricPD {
 public:
  /// Rejects non-symmetric input and min eigenvalue <= 1e-12 * max eigenvalue.
  explicit SymmetricPD(const Mat& entries);

  static SymmetricPD identity(int dim);
  static SymmetricPD diagonal(const Vec& diag);
  /// Builds Q diag(values) Q^T from an orthonormal basis and positive values.
  static SymmetricPD from_eigen(const Mat& vectors, const Vec& values);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Mat& matrix() const { return entries_; }
  const Mat& eigenvectors() const { return vectors_; }
  const Vec& eigenvalues() const { return values_; }
  double lambda_max() const { return values_(0); }
  double lambda_min() const { return values_(values_.size() - 1); }
  double condition_number() const { return lambda_max() / lambda_min(); }

  /// s * A for s > 0; reuses the eigenbasis.
  SymmetricPD scaled(double s) const;
  /// Q diag(lambda^p) Q^T as a plain matrix.
  Mat power_matrix(double p) const;

 private:
  SymmetricPD(Mat entries, Mat vectors, Vec values);

  Mat entries_;
  Mat vectors_;
  Vec values_;
};

/// A^p through the cached eigendecomposition.
SymmetricPD frac_power(const SymmetricPD& a, double p);

/// x^T M x.
double weighted_norm_sq(const Vec& x, const SymmetricPD& m);
double weighted_norm_sq(const Vec& x, const Mat& m);

/// tr(AB) for symmetric A, B, as the entrywise sum of A .* B.
double trace_prod(const SymmetricPD& a, const SymmetricPD& b);
double trace_prod(const Mat& a, const Mat& b);

/// Spectrum of the pencil (P, H): eigenvalues of S = H^{1/2} P H^{1/2},
/// which coincide with those of PH.
struct PencilSpectrum {
  Vec values;   // descending
  Mat vectors;  // eigenvectors of S
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 1.0;
};

PencilSpectrum pencil_spectrum(const SymmetricPD& p, const SymmetricPD& h);

Mat symmetrize(const Mat& a);

/// Row-major CSV, comma separated, no header.
Mat read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Mat& m);

}  // namespace psgdlab
