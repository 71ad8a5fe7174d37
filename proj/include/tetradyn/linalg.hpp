#pragma once

// Small dense kernels (n <= 9) on top of Eigen. Every routine here is a pure
// function of its arguments; nothing allocates on the heap because all
// dynamic shapes are bounded by kMaxDim.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <tuple>

#include "tetradyn/error.hpp"

namespace tetradyn {

inline constexpr int kMaxDim = 9;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::ColMajor, kMaxDim, kMaxDim>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor,
                           kMaxDim, 1>;
using Complex = std::complex<double>;
using ComplexVecN = Eigen::Matrix<Complex, Eigen::Dynamic, 1, Eigen::ColMajor,
                                  kMaxDim, 1>;
using ComplexMatN = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::ColMajor, kMaxDim, kMaxDim>;

struct SvdResult {
  MatN u;       // rows x rows, orthogonal
  VecN sigma;   // min(rows, cols), descending, nonnegative
  MatN v;       // cols x cols, orthogonal

  /// u * diag(sigma) * v^T with the thin block of u.
  MatN reconstruct() const {
    const auto k = sigma.size();
    return u.leftCols(k) * sigma.asDiagonal() * v.leftCols(k).transpose();
  }
};

struct PolarDecomposition {
  Mat3 rotation;  // det +1
  Mat3 stretch;   // symmetric positive definite
};

struct SpectralFactor {
  Mat3 q;      // orthogonal, det +1
  Mat3 delta;  // diagonal, descending
};

/// Eigenvalues sorted by descending modulus. Conjugate pairs are adjacent,
/// positive imaginary part first.
struct EigenList {
  ComplexVecN values;
};

struct EigenDecomposition {
  ComplexVecN values;
  ComplexMatN vectors;  // column k belongs to values[k]
};

struct LeastSquaresResult {
  VecN solution;
  double residual = 0.0;  // ||a * solution - b||_2
  int rank = 0;           // singular values kept after truncation
  /// Part of ||b|| lying along left singular directions that the cutoff
  /// discarded; zero when nothing was truncated.
  double truncated_residual = 0.0;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* where) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::InvalidInput,
                std::string(where) + ": non-finite matrix entry");
  }
}

template <typename Derived>
void require_size(const Eigen::MatrixBase<Derived>& m, const char* where) {
  if (m.rows() < 1 || m.cols() < 1 || m.rows() > kMaxDim ||
      m.cols() > kMaxDim) {
    throw Error(ErrorKind::InvalidInput,
                std::string(where) + ": dimensions must lie in [1, 9]");
  }
}

inline bool eigen_order(const Complex& a, const Complex& b) {
  return std::make_tuple(-std::abs(a), -a.real(), -a.imag()) <
         std::make_tuple(-std::abs(b), -b.real(), -b.imag());
}

}  // namespace detail

template <typename Derived>
SvdResult svd(const Eigen::MatrixBase<Derived>& m) {
  detail::require_size(m, "svd");
  detail::require_finite(m, "svd");
  const MatN a = m;
  Eigen::JacobiSVD<MatN> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success || !solver.singularValues().allFinite()) {
    throw Error(ErrorKind::NoConvergence, "svd: iteration did not converge");
  }
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

template <typename Derived>
VecN singular_values(const Eigen::MatrixBase<Derived>& m) {
  detail::require_size(m, "singular_values");
  detail::require_finite(m, "singular_values");
  const MatN a = m;
  Eigen::JacobiSVD<MatN> solver(a);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence, "svd: iteration did not converge");
  }
  return solver.singularValues();
}

template <typename Derived>
EigenDecomposition eigen_decompose(const Eigen::MatrixBase<Derived>& m) {
  detail::require_size(m, "eigenvalues");
  detail::require_finite(m, "eigenvalues");
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::InvalidInput, "eigenvalues: matrix must be square");
  }
  const MatN a = m;
  Eigen::EigenSolver<MatN> solver(a, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence,
                "eigenvalues: QR iteration did not converge");
  }
  const ComplexVecN raw_values = solver.eigenvalues();
  const ComplexMatN raw_vectors = solver.eigenvectors();

  const auto n = raw_values.size();
  std::array<Eigen::Index, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + n, Eigen::Index{0});
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](Eigen::Index i, Eigen::Index j) {
                     return detail::eigen_order(raw_values[i], raw_values[j]);
                   });

  EigenDecomposition out{ComplexVecN(n), ComplexMatN(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = raw_values[order[k]];
    out.vectors.col(k) = raw_vectors.col(order[k]);
  }
  return out;
}

template <typename Derived>
EigenList eigenvalues(const Eigen::MatrixBase<Derived>& m) {
  return {eigen_decompose(m).values};
}

/// Minimum-norm least squares through a truncated pseudo-inverse: singular
/// values below cutoff * sigma_max are dropped.
template <typename DerivedA, typename DerivedB>
LeastSquaresResult solve_least_squares(const Eigen::MatrixBase<DerivedA>& a,
                                       const Eigen::MatrixBase<DerivedB>& b,
                                       double cutoff = 1e-10) {
  if (b.cols() != 1 || b.rows() != a.rows()) {
    throw Error(ErrorKind::InvalidInput,
                "solve_least_squares: right-hand side has the wrong shape");
  }
  detail::require_finite(b, "solve_least_squares");
  const SvdResult f = svd(a);
  const VecN rhs = b;
  const double sigma_max = f.sigma.size() > 0 ? f.sigma[0] : 0.0;

  LeastSquaresResult out;
  out.solution = VecN::Zero(a.cols());
  for (Eigen::Index k = 0; k < f.sigma.size(); ++k) {
    if (sigma_max == 0.0 || f.sigma[k] <= cutoff * sigma_max) break;
    out.solution += (f.u.col(k).dot(rhs) / f.sigma[k]) * f.v.col(k);
    ++out.rank;
  }
  double dropped = 0.0;
  for (Eigen::Index k = out.rank; k < f.sigma.size(); ++k) {
    const double c = f.u.col(k).dot(rhs);
    dropped += c * c;
  }
  out.truncated_residual = std::sqrt(dropped);
  out.residual = (a * out.solution - rhs).norm();
  return out;
}

inline PolarDecomposition polar_decompose(const Mat3& x) {
  detail::require_finite(x, "polar_decompose");
  const double det = x.determinant();
  if (std::abs(det) < 1e-12) {
    throw Error(ErrorKind::SingularInput,
                "polar_decompose: |det| below 1e-12");
  }
  if (det < 0.0) {
    throw Error(ErrorKind::InvalidInput,
                "polar_decompose: orientation-reversing input (det < 0)");
  }
  Eigen::JacobiSVD<Mat3> f(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = f.matrixU();
  const Mat3 v = f.matrixV();
  Vec3 s = f.singularValues();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
    s[2] = -s[2];
  }
  PolarDecomposition out;
  out.rotation = u * v.transpose();
  const Mat3 stretch = v * s.asDiagonal() * v.transpose();
  out.stretch = 0.5 * (stretch + stretch.transpose());
  return out;
}

inline SpectralFactor spectral_factor(const Mat3& s) {
  detail::require_finite(s, "spectral_factor");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error(ErrorKind::NotSymmetric,
                "spectral_factor: asymmetry exceeds 1e-10");
  }
  const Mat3 sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoConvergence, "spectral_factor: no convergence");
  }
  // Eigen sorts ascending.
  const Vec3 ascending = solver.eigenvalues();
  if (ascending[0] <= 0.0) {
    throw Error(ErrorKind::InvalidInput,
                "spectral_factor: input is not positive definite");
  }
  SpectralFactor out;
  out.q = solver.eigenvectors().rowwise().reverse();
  out.delta = ascending.reverse().asDiagonal();
  if (out.q.determinant() < 0.0) out.q.col(2) = -out.q.col(2);
  return out;
}

}  // namespace tetradyn
