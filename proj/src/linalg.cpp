#include "psgdlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "psgdlab/errors.hpp"

namespace psgdlab {

namespace {

constexpr double kOffDiagonalTol = 1e-13;
constexpr int kMaxSweeps = 100;
constexpr double kDegeneracyRatio = 1e-12;

double max_off_diagonal(const Mat& a) {
  double m = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

void sort_descending(Mat& vectors, Vec& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  Mat v(vectors.rows(), n);
  Vec l(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    v.col(k) = vectors.col(order[static_cast<size_t>(k)]);
    l(k) = values(order[static_cast<size_t>(k)]);
  }
  vectors = std::move(v);
  values = std::move(l);
}

}  // namespace

bool is_symmetric(const Mat& a) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(1.0, std::abs(a(i, j)))) return false;
  return true;
}

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

EigenDecomposition sym_eig(const Mat& input) {
  if (input.rows() == 0 || !is_symmetric(input))
    throw ValidationError("sym_eig: input is not a non-empty symmetric matrix");
  if (!input.allFinite()) throw ValidationError("sym_eig: input has non-finite entries");

  const Eigen::Index n = input.rows();
  Mat a = symmetrize(input);
  Mat v = Mat::Identity(n, n);
  const double tol = kOffDiagonalTol * a.norm();

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (max_off_diagonal(a) <= tol) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  const double residual = max_off_diagonal(a);
  if (residual > tol) {
    std::ostringstream msg;
    msg << "sym_eig: no convergence after " << kMaxSweeps << " sweeps, off-diagonal residual " << residual;
    throw NumericError(msg.str());
  }

  EigenDecomposition out{std::move(v), a.diagonal(), sweep};
  sort_descending(out.vectors, out.values);
  return out;
}

SymmetricPD::SymmetricPD(Mat entries, Mat vectors, Vec values)
    : entries_(std::move(entries)), vectors_(std::move(vectors)), values_(std::move(values)) {}

SymmetricPD::SymmetricPD(const Mat& entries) {
  EigenDecomposition eig = sym_eig(entries);
  if (!(eig.values(eig.values.size() - 1) > kDegeneracyRatio * eig.values(0)) || !(eig.values(0) > 0.0)) {
    std::ostringstream msg;
    msg << "SymmetricPD: matrix is not positive definite (eigenvalue range [" << eig.values(eig.values.size() - 1)
        << ", " << eig.values(0) << "])";
    throw ValidationError(msg.str());
  }
  entries_ = symmetrize(entries);
  vectors_ = std::move(eig.vectors);
  values_ = std::move(eig.values);
}

SymmetricPD SymmetricPD::identity(int dim) {
  return SymmetricPD(Mat::Identity(dim, dim), Mat::Identity(dim, dim), Vec::Ones(dim));
}

SymmetricPD SymmetricPD::diagonal(const Vec& diag) {
  if (diag.size() == 0 || diag.minCoeff() <= kDegeneracyRatio * diag.maxCoeff())
    throw ValidationError("SymmetricPD::diagonal: entries must be positive");
  Mat vectors = Mat::Identity(diag.size(), diag.size());
  Vec values = diag;
  sort_descending(vectors, values);
  return SymmetricPD(Mat(diag.asDiagonal()), std::move(vectors), std::move(values));
}

SymmetricPD SymmetricPD::from_eigen(const Mat& vectors, const Vec& values) {
  if (vectors.rows() != vectors.cols() || vectors.cols() != values.size())
    throw ValidationError("SymmetricPD::from_eigen: shape mismatch");
  if (!(values.minCoeff() > 0.0)) throw ValidationError("SymmetricPD::from_eigen: values must be positive");
  Mat q = vectors;
  Vec l = values;
  sort_descending(q, l);
  Mat entries = symmetrize(q * l.asDiagonal() * q.transpose());
  return SymmetricPD(std::move(entries), std::move(q), std::move(l));
}

SymmetricPD SymmetricPD::scaled(double s) const {
  if (!(s > 0.0)) throw ValidationError("SymmetricPD::scaled: factor must be positive");
  return SymmetricPD(entries_ * s, vectors_, values_ * s);
}

Mat SymmetricPD::power_matrix(double p) const {
  if (p == 1.0) return entries_;
  const Vec lp = values_.array().pow(p).matrix();
  return symmetrize(vectors_ * lp.asDiagonal() * vectors_.transpose());
}

SymmetricPD frac_power(const SymmetricPD& a, double p) {
  if (p == 1.0) return a;
  if (p == 0.0) return SymmetricPD::identity(a.dim());
  return SymmetricPD::from_eigen(a.eigenvectors(), a.eigenvalues().array().pow(p).matrix());
}

double weighted_norm_sq(const Vec& x, const Mat& m) {
  if (m.rows() != m.cols() || x.size() != m.rows())
    throw ValidationError("weighted_norm_sq: dimension mismatch");
  return x.dot(m * x);
}

double weighted_norm_sq(const Vec& x, const SymmetricPD& m) { return weighted_norm_sq(x, m.matrix()); }

double trace_prod(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw ValidationError("trace_prod: dimension mismatch");
  return a.cwiseProduct(b).sum();
}

double trace_prod(const SymmetricPD& a, const SymmetricPD& b) { return trace_prod(a.matrix(), b.matrix()); }

PencilSpectrum pencil_spectrum(const SymmetricPD& p, const SymmetricPD& h) {
  if (p.dim() != h.dim()) throw ValidationError("pencil_spectrum: dimension mismatch");
  const Mat h_half = h.power_matrix(0.5);
  EigenDecomposition eig = sym_eig(symmetrize(h_half * p.matrix() * h_half));
  PencilSpectrum out;
  out.values = std::move(eig.values);
  out.vectors = std::move(eig.vectors);
  out.lambda_max = out.values(0);
  out.lambda_min = out.values(out.values.size() - 1);
  if (!(out.lambda_min > 0.0)) throw NumericError("pencil_spectrum: non-positive pencil eigenvalue");
  out.kappa = out.lambda_max / out.lambda_min;
  return out;
}

Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": empty matrix file");
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write matrix file '" + path + "'");
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace psgdlab
