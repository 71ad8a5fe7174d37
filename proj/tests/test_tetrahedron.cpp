#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tetradyn/dynamics.hpp"
#include "tetradyn/shape_space.hpp"
#include "tetradyn/tetrahedron.hpp"

using namespace tetradyn;

namespace {

Mat3 to_mat(const oracle::M3& m) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j];
  }
  return out;
}

oracle::M3 to_oracle(const Mat3& m) {
  oracle::M3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i][j] = m(i, j);
  }
  return out;
}

Mat3 from_rows(const double (&a)[3][3]) {
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = a[i][j];
  }
  return m;
}

Mat3 random_rotation(std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  return to_mat(oracle::rotation({d(gen), d(gen), d(gen)}, angle(gen)));
}

}  // namespace

TEST(TetrahedronType, RejectsNonPositiveDeterminant) {
  Mat3 flat = Mat3::Identity();
  flat(2, 2) = 0.0;
  EXPECT_THROW(Tetrahedron{flat}, Error);
  Mat3 reflected = Mat3::Identity();
  reflected(0, 0) = -1.0;
  EXPECT_THROW(Tetrahedron{reflected}, Error);
  Mat3 nan = Mat3::Identity();
  nan(0, 1) = std::nan("");
  EXPECT_THROW(Tetrahedron{nan}, Error);
}

TEST(TetrahedronType, FromVerticesAndUnitVolume) {
  const auto t = Tetrahedron::from_vertices(Vec3(1, 1, 1), Vec3(3, 1, 1), Vec3(1, 2, 1),
                                            Vec3(1, 1, 4));
  EXPECT_NEAR(t.det(), 6.0, 1e-14);
  EXPECT_TRUE((t.vertex(0)).isZero());
  EXPECT_TRUE(t.normalized().is_unit_volume(1e-12));
}

TEST(Faces, OrderAndCentroidsAtIdentity) {
  const auto faces = faces_of(Tetrahedron(Mat3::Identity()));
  EXPECT_TRUE(faces[3].vertices[0].isZero());
  EXPECT_EQ(faces[3].vertices[1], Vec3(1, 0, 0));
  EXPECT_EQ(faces[3].vertices[2], Vec3(0, 1, 0));
  EXPECT_LT((faces[3].centroid - Vec3(1.0 / 3, 1.0 / 3, 0)).norm(), 1e-15);
  EXPECT_EQ(faces[0].vertices[2], Vec3(0, 0, 1));  // (x0, x1, x3)
  EXPECT_EQ(faces[2].vertices[0], Vec3(0, 1, 0));  // (x2, x0, x3)
}

TEST(Faces, EveryVertexOnThreeFaces) {
  std::array<int, 4> seen{};
  for (const auto& f : kFaceVertices) {
    for (int v : f) ++seen[v];
  }
  for (int c : seen) EXPECT_EQ(c, 3);
}

TEST(Faces, RegularTetrahedronHasEquilateralFaces) {
  for (const auto& f : faces_of(canonical_regular())) {
    const double a = (f.vertices[0] - f.vertices[1]).norm();
    const double b = (f.vertices[1] - f.vertices[2]).norm();
    const double c = (f.vertices[2] - f.vertices[0]).norm();
    EXPECT_NEAR(a, std::pow(2.0, 1.0 / 6.0), 1e-12);
    EXPECT_NEAR(a, b, 1e-12);
    EXPECT_NEAR(b, c, 1e-12);
  }
}

TEST(PseudoRotation, EquilateralFaceIsFixed) {
  const Face f = Face::of(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0));
  const auto img = pseudo_rotate_face(f);
  for (int j = 0; j < 3; ++j) EXPECT_LT((img[j] - f.vertices[j]).norm(), 1e-15);
}

TEST(PseudoRotation, ScaleneFaceMatchesFrozenImage) {
  const Face f = Face::of(Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(1, 1, 0));
  const auto img = pseudo_rotate_face(f);
  const auto ref = oracle::face_images({0, 0, 0}, {2, 0, 0}, {1, 1, 0});
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(img[j][i], oracle::frozen::kFaceImage[j][i], 1e-15);
      EXPECT_NEAR(img[j][i], ref[j][i], 1e-15);
    }
  }
  // image of vertex 0 sits at the centroid distance of vertex 2, i.e. 2/3
  EXPECT_NEAR((img[0] - f.centroid).norm(), 2.0 / 3.0, 1e-15);
}

TEST(PseudoRotation, PermutesCentroidDistances) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 50; ++trial) {
    const Face f = Face::of(Vec3(d(gen), d(gen), d(gen)), Vec3(d(gen), d(gen), d(gen)),
                            Vec3(d(gen), d(gen), d(gen)));
    const auto img = pseudo_rotate_face(f);
    std::array<double, 3> before{}, after{};
    for (int j = 0; j < 3; ++j) {
      before[j] = (f.vertices[j] - f.centroid).norm();
      after[j] = (img[j] - f.centroid).norm();
    }
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(after[j], before[(j + 2) % 3], 1e-10);
  }
}

TEST(PseudoRotation, VertexAtCentroidIsDegenerate) {
  const Face f = Face::of(Vec3(-1, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0));
  try {
    pseudo_rotate_face(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFace);
  }
}

TEST(RawTransform, IdentityMatchesFrozenValue) {
  const Mat3 raw = raw_transform(Tetrahedron(Mat3::Identity()));
  EXPECT_LT((raw - from_rows(oracle::frozen::kRawIdentity)).norm(), 1e-14);
  EXPECT_NEAR(raw.determinant(), oracle::frozen::kRawIdentityDet, 1e-14);
}

TEST(RawTransform, AgreesWithOracleOnRandomInputs) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tetrahedron t = random_tetrahedron(s);
    const Mat3 ref = to_mat(oracle::raw_theta(to_oracle(t.edges())));
    EXPECT_LT((raw_transform(t) - ref).norm(), 1e-12);
  }
}

TEST(RawTransform, CommutesWithHomothety) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Mat3 x = random_tetrahedron(s).edges();
    for (double lambda : {0.5, 2.0, 10.0}) {
      const double err = (raw_transform(Mat3(lambda * x)) - lambda * raw_transform(x)).norm();
      EXPECT_LE(err, 1e-9 * lambda * x.norm());
    }
  }
}

TEST(Transform, RegularIsFixedWithUnitScale) {
  const Tetrahedron x = canonical_regular();
  const TransformResult r = transform(x);
  EXPECT_LE((r.image.edges() - x.edges()).norm(), 1e-12);
  EXPECT_NEAR(r.scale, 1.0, 1e-12);
  EXPECT_FALSE(r.orientation_reversed);
}

TEST(Transform, IdentityMatchesFrozenValue) {
  const TransformResult r = transform(Tetrahedron(Mat3::Identity()));
  EXPECT_NEAR(r.scale, oracle::frozen::kIdentityScale, 1e-14);
  EXPECT_LT((r.image.edges() - from_rows(oracle::frozen::kThetaIdentity)).norm(), 1e-14);
  EXPECT_LT((r.image.edges() - r.scale * r.raw_image).norm(), 1e-15);
}

TEST(Transform, PreservesDeterminantAtAnyScale) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> logdet(std::log(0.1), std::log(10.0));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const double target = std::exp(logdet(gen));
    const Tetrahedron t(random_tetrahedron(s).edges() * std::cbrt(target));
    const TransformResult r = transform(t);
    EXPECT_LE(std::abs(r.image.det() - t.det()), 1e-9 * t.det());
  }
}

TEST(Transform, IsRotationEquivariant) {
  std::mt19937_64 gen(6);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tetrahedron t = random_tetrahedron(s + 1000);
    const Mat3 rho = random_rotation(gen);
    const Mat3 lhs = transform(t.rotated(rho)).image.edges();
    const Mat3 rhs = rho * transform(t).image.edges();
    EXPECT_LE((lhs - rhs).norm(), 1e-9);
  }
}

TEST(Transform, AgreesWithOracleMap) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tetrahedron t = random_tetrahedron(s + 5000);
    const Mat3 ref = to_mat(oracle::theta(to_oracle(t.edges())));
    EXPECT_LT((theta_map(t.edges()) - ref).norm(), 1e-12);
  }
}

TEST(Transform, SingularRawImageIsReported) {
  // A probe matrix, not a validated tetrahedron: rank one edges.
  Mat3 x = Mat3::Zero();
  x.col(0) = Vec3(1, 0, 0);
  x.col(1) = Vec3(2, 0, 0);
  x.col(2) = Vec3(3, 0, 0);
  EXPECT_THROW(theta_map(x), Error);
}
