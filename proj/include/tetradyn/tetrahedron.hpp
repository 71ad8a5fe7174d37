#pragma once

// The tetrahedron transformation. A tetrahedron is stored as the 3x3 matrix
// whose columns are the edge vectors x1-x0, x2-x0, x3-x0, with x0 pinned to
// the origin.
//
// Each triangular face (v0, v1, v2) is "pseudo-rotated" about its centroid c:
// the image of v_j stays on the ray from c through v_j, at the centroid
// distance of the cyclically preceding vertex v_{j-1}. Every vertex lies on
// three faces; its new position is the mean of its three images, and the
// whole tetrahedron is translated so that vertex 0 returns to the origin.
// The result is then rescaled to restore the input determinant.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "tetradyn/error.hpp"
#include "tetradyn/linalg.hpp"

namespace tetradyn {

class Tetrahedron {
 public:
  /// Rejects non-finite entries and det <= 0 (negatively oriented or flat).
  explicit Tetrahedron(const Mat3& edges) : edges_(edges) {
    detail::require_finite(edges_, "Tetrahedron");
    if (!(edges_.determinant() > 0.0)) {
      throw Error(ErrorKind::InvalidInput,
                  "Tetrahedron: edge matrix must have positive determinant");
    }
  }

  static Tetrahedron from_vertices(const Vec3& x0, const Vec3& x1,
                                   const Vec3& x2, const Vec3& x3) {
    Mat3 e;
    e << x1 - x0, x2 - x0, x3 - x0;
    return Tetrahedron(e);
  }

  /// Rescales to determinant 1.
  static Tetrahedron unit_volume(const Mat3& edges) {
    const Tetrahedron t(edges);
    return Tetrahedron(edges / std::cbrt(t.det()));
  }

  const Mat3& edges() const noexcept { return edges_; }
  double det() const { return edges_.determinant(); }

  /// Vertex i in 0..3; vertex 0 is the origin.
  Vec3 vertex(int i) const {
    return i == 0 ? Vec3::Zero() : Vec3(edges_.col(i - 1));
  }

  bool is_unit_volume(double tol = 1e-10) const {
    return std::abs(det() - 1.0) <= tol;
  }

  Tetrahedron normalized() const { return unit_volume(edges_); }

  /// Left action of a rotation (or any det > 0 matrix).
  Tetrahedron rotated(const Mat3& rho) const { return Tetrahedron(rho * edges_); }

 private:
  Mat3 edges_;
};

struct Face {
  std::array<Vec3, 3> vertices;
  Vec3 centroid;

  static Face of(const Vec3& a, const Vec3& b, const Vec3& c) {
    return {{a, b, c}, (a + b + c) / 3.0};
  }

  /// Largest centroid distance; degeneracy thresholds are relative to it.
  double scale() const {
    double s = 0.0;
    for (const auto& v : vertices) s = std::max(s, (v - centroid).norm());
    return s;
  }
};

/// Vertex indices of the four faces, in the fixed cyclic order the map uses.
inline constexpr std::array<std::array<int, 3>, 4> kFaceVertices{{
    {0, 1, 3},
    {1, 2, 3},
    {2, 0, 3},
    {0, 1, 2},
}};

inline std::array<Face, 4> faces_of(const Mat3& edges) {
  const std::array<Vec3, 4> v{Vec3::Zero(), edges.col(0), edges.col(1),
                              edges.col(2)};
  std::array<Face, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& idx = kFaceVertices[i];
    out[i] = Face::of(v[idx[0]], v[idx[1]], v[idx[2]]);
  }
  return out;
}

inline std::array<Face, 4> faces_of(const Tetrahedron& t) {
  return faces_of(t.edges());
}

inline std::array<Vec3, 3> pseudo_rotate_face(const Face& f) {
  std::array<double, 3> dist{};
  for (std::size_t j = 0; j < 3; ++j) {
    dist[j] = (f.vertices[j] - f.centroid).norm();
  }
  const double scale = std::max({dist[0], dist[1], dist[2]});
  for (double d : dist) {
    if (!(scale > 0.0) || !std::isfinite(scale) || d <= 1e-12 * scale) {
      throw Error(ErrorKind::DegenerateFace,
                  "pseudo_rotate_face: vertex coincides with face centroid");
    }
  }
  std::array<Vec3, 3> out;
  for (std::size_t j = 0; j < 3; ++j) {
    const double prev = dist[(j + 2) % 3];
    out[j] = f.centroid + (prev / dist[j]) * (f.vertices[j] - f.centroid);
  }
  return out;
}

/// The unnormalized map: mean of the three face images of each vertex,
/// re-translated so vertex 0 sits at the origin.
inline Mat3 raw_transform(const Mat3& edges) {
  const auto faces = faces_of(edges);
  std::array<Vec3, 4> sum;
  sum.fill(Vec3::Zero());
  for (std::size_t i = 0; i < 4; ++i) {
    const auto images = pseudo_rotate_face(faces[i]);
    for (std::size_t j = 0; j < 3; ++j) sum[kFaceVertices[i][j]] += images[j];
  }
  Mat3 out;
  for (int k = 1; k <= 3; ++k) out.col(k - 1) = (sum[k] - sum[0]) / 3.0;
  return out;
}

inline Mat3 raw_transform(const Tetrahedron& t) { return raw_transform(t.edges()); }

struct TransformResult {
  Tetrahedron image;
  Mat3 raw_image;
  double scale;
  /// det(raw_image) < 0; the real cube root still restores det(input).
  bool orientation_reversed = false;
};

namespace detail {

struct ScaledImage {
  Mat3 raw;
  double scale;
};

inline ScaledImage scaled_image(const Mat3& x) {
  const Mat3 raw = raw_transform(x);
  const double det_raw = raw.determinant();
  const double det_x = x.determinant();
  if (!std::isfinite(det_raw) || std::abs(det_raw) < 1e-12 * std::abs(det_x) ||
      det_raw == 0.0) {
    throw Error(ErrorKind::DegenerateImage,
                "transform: raw image is singular");
  }
  return {raw, std::cbrt(det_x / det_raw)};
}

}  // namespace detail

/// Normalized map on bare matrices, for probes that need not be validated
/// tetrahedra (finite-difference stencils, Newton trial points).
inline Mat3 theta_map(const Mat3& x) {
  const auto [raw, scale] = detail::scaled_image(x);
  return scale * raw;
}

inline TransformResult transform(const Tetrahedron& t) {
  const auto [raw, scale] = detail::scaled_image(t.edges());
  return {Tetrahedron(scale * raw), raw, scale, raw.determinant() < 0.0};
}

}  // namespace tetradyn
