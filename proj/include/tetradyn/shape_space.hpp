#pragma once

// Geometry of SL(3)/SO(3): the traceless basis, left-translated tangent
// frames, the split of a tangent space into rotation-orbit directions and
// their Frobenius complement, and shape measures that are blind to rotation.

#include <array>
#include <cmath>

#include "tetradyn/linalg.hpp"
#include "tetradyn/tetrahedron.hpp"

namespace tetradyn {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using FrameColumns = Eigen::Matrix<double, 9, 8>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

/// Column-major flattening; the Frobenius inner product becomes the dot product.
inline Vec9 flatten(const Mat3& m) { return Eigen::Map<const Vec9>(m.data()); }
inline Mat3 unflatten(const Vec9& v) { return Eigen::Map<const Mat3>(v.data()); }

inline double frobenius_inner(const Mat3& a, const Mat3& b) {
  return (a.array() * b.array()).sum();
}

/// Orthonormal basis of sl(3) (traceless matrices). Order: the two diagonal
/// generators, then E12, E21, E13, E31, E23, E32. The second diagonal
/// generator is (E11 + E22 - 2 E33)/sqrt(6) so that it is orthogonal to
/// (E11 - E22)/sqrt(2).
struct LieBasis {
  std::array<Mat3, 8> basis;
  /// Symmetric traceless part (rotation-free shape directions).
  std::array<Mat3, 5> symmetric_part;
  /// E21-E12, E31-E13, E32-E23: generators of so(3).
  std::array<Mat3, 3> skew_generators;
};

namespace detail {

inline Mat3 unit(int i, int j) {
  Mat3 m = Mat3::Zero();
  m(i, j) = 1.0;
  return m;
}

inline LieBasis make_lie_basis() {
  const double r2 = std::sqrt(2.0);
  const double r6 = std::sqrt(6.0);
  LieBasis b;
  b.basis = {(unit(0, 0) - unit(1, 1)) / r2,
             (unit(0, 0) + unit(1, 1) - 2.0 * unit(2, 2)) / r6,
             unit(0, 1), unit(1, 0), unit(0, 2), unit(2, 0), unit(1, 2),
             unit(2, 1)};
  b.symmetric_part = {b.basis[0], b.basis[1],
                      (unit(0, 1) + unit(1, 0)) / r2,
                      (unit(0, 2) + unit(2, 0)) / r2,
                      (unit(1, 2) + unit(2, 1)) / r2};
  b.skew_generators = {unit(1, 0) - unit(0, 1), unit(2, 0) - unit(0, 2),
                       unit(2, 1) - unit(1, 2)};
  return b;
}

}  // namespace detail

inline const LieBasis& lie_basis() {
  static const LieBasis basis = detail::make_lie_basis();
  return basis;
}

/// The regular tetrahedron used as reference point: 2^(-1/3) times the
/// matrix with columns (1,1,0), (0,1,1), (1,0,1). det = 1, all six edges
/// have length 2^(1/6).
inline Tetrahedron canonical_regular() {
  Mat3 m;
  m << 1.0, 0.0, 1.0,
       1.0, 1.0, 0.0,
       0.0, 1.0, 1.0;
  return Tetrahedron(m / std::cbrt(2.0));
}

/// Frame columns x * B_k for a bare matrix.
inline FrameColumns frame_columns(const Mat3& x) {
  FrameColumns cols;
  const auto& b = lie_basis().basis;
  for (int k = 0; k < 8; ++k) cols.col(k) = flatten(x * b[k]);
  return cols;
}

struct TangentFrame {
  Tetrahedron point;
  std::array<Mat3, 8> frame;
  FrameColumns as_columns;
};

inline TangentFrame tangent_frame(const Tetrahedron& t) {
  TangentFrame out{t, {}, frame_columns(t.edges())};
  for (int k = 0; k < 8; ++k) out.frame[k] = t.edges() * lie_basis().basis[k];
  return out;
}

/// Thin QR of the frame columns: as_columns = q * r with q orthonormal.
struct OrthonormalFrame {
  FrameColumns q;
  Mat8 r;
};

inline OrthonormalFrame orthonormal_frame(const Mat3& x) {
  const FrameColumns cols = frame_columns(x);
  Eigen::HouseholderQR<FrameColumns> qr(cols);
  OrthonormalFrame out;
  out.q = qr.householderQ() * FrameColumns::Identity();
  out.r = qr.matrixQR().topRows<8>().triangularView<Eigen::Upper>();
  return out;
}

struct TangentSplitting {
  std::array<Mat3, 3> orbit_tangent;
  std::array<Mat3, 5> transverse;
  Eigen::Matrix<double, 9, 3> orbit_columns;
  Eigen::Matrix<double, 9, 5> transverse_columns;

  /// Share of ||v||^2 that lies in the orbit tangent, in [0, 1].
  double orbit_fraction(const Vec9& v) const {
    const double n2 = v.squaredNorm();
    return n2 > 0.0 ? (orbit_columns.transpose() * v).squaredNorm() / n2 : 0.0;
  }

  double orbit_fraction(const Eigen::Matrix<Complex, 9, 1>& v) const {
    const double n2 = v.squaredNorm();
    if (n2 <= 0.0) return 0.0;
    const Eigen::Matrix<Complex, 3, 1> p =
        orbit_columns.transpose().cast<Complex>() * v;
    return p.squaredNorm() / n2;
  }
};

inline TangentSplitting tangent_splitting(const Mat3& x) {
  const auto& skew = lie_basis().skew_generators;
  Eigen::Matrix<double, 9, 3> gen;
  for (int k = 0; k < 3; ++k) gen.col(k) = flatten(skew[k] * x);
  Eigen::HouseholderQR<Eigen::Matrix<double, 9, 3>> qr(gen);

  TangentSplitting out;
  out.orbit_columns = qr.householderQ() * Eigen::Matrix<double, 9, 3>::Identity();

  const FrameColumns cols = frame_columns(x);
  const FrameColumns complement =
      cols - out.orbit_columns * (out.orbit_columns.transpose() * cols);
  Eigen::JacobiSVD<FrameColumns> f(complement, Eigen::ComputeFullU);
  out.transverse_columns = f.matrixU().leftCols<5>();

  for (int k = 0; k < 3; ++k) out.orbit_tangent[k] = unflatten(out.orbit_columns.col(k));
  for (int k = 0; k < 5; ++k) out.transverse[k] = unflatten(out.transverse_columns.col(k));
  return out;
}

inline TangentSplitting tangent_splitting(const Tetrahedron& t) {
  return tangent_splitting(t.edges());
}

struct ShapeRepresentative {
  Mat3 stretch;  // symmetric positive definite polar factor
  double quality;
};

/// Mean-ratio quality against the regular element: with m = x * x_eq^-1 and
/// S = m^T m, quality = 3 det(S)^(1/3) / tr(S). Equals 1 exactly on the
/// rotation orbit of x_eq (at any scale) and lies in (0, 1) elsewhere.
inline double mean_ratio_quality(const Mat3& edges) {
  static const Mat3 reference_inverse = canonical_regular().edges().inverse();
  const Mat3 m = edges * reference_inverse;
  const Mat3 s = m.transpose() * m;
  const double det_m = m.determinant();
  return 3.0 * std::cbrt(det_m * det_m) / s.trace();
}

inline double quality(const Tetrahedron& t) { return mean_ratio_quality(t.edges()); }

inline ShapeRepresentative shape_representative(const Tetrahedron& t) {
  return {polar_decompose(t.edges()).stretch, quality(t)};
}

/// Frobenius distance between polar stretch factors; zero exactly when the
/// two tetrahedra differ by a rotation.
inline double shape_distance(const Tetrahedron& a, const Tetrahedron& b) {
  return (polar_decompose(a.edges()).stretch - polar_decompose(b.edges()).stretch)
      .norm();
}

}  // namespace tetradyn
