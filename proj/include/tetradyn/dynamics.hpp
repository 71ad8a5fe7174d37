#pragma once

// Numerical dynamics of the normalized map on SL(3): orbits, finite
// difference Jacobians expressed in left-translated frames, spectra and
// singular-value cocycles split into rotation-orbit and transverse parts,
// Newton search for fixed points, and reproducible random starting points.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tetradyn/error.hpp"
#include "tetradyn/linalg.hpp"
#include "tetradyn/shape_space.hpp"
#include "tetradyn/tetrahedron.hpp"

namespace tetradyn {

inline constexpr double kDefaultFdStep = 1e-6;

// ---------------------------------------------------------------------------
// Orbits

struct OrbitTrace {
  std::vector<Tetrahedron> states;  // x(0), x(1), ...
  /// step_deltas[n] = ||x(n+1) - x(n)||_F, qualities[n] = quality of x(n).
  std::vector<double> step_deltas;
  std::vector<double> qualities;
  bool converged = false;
  std::optional<Tetrahedron> limit;
  std::optional<ErrorKind> error;
  std::string error_message;
  /// Steps whose raw image had negative determinant.
  int orientation_reversals = 0;
};

/// Iterates until a step moves less than tol or max_steps images have been
/// taken. Degenerate images stop the orbit and are recorded, not thrown.
inline OrbitTrace iterate_orbit(const Tetrahedron& start, double tol,
                                int max_steps) {
  if (!(tol > 0.0) || max_steps < 1) {
    throw Error(ErrorKind::InvalidInput,
                "iterate_orbit: tol must be > 0 and max_steps >= 1");
  }
  OrbitTrace trace;
  trace.states.push_back(start);
  for (int n = 0; n < max_steps; ++n) {
    const Tetrahedron& x = trace.states.back();
    std::optional<Tetrahedron> next;
    try {
      const TransformResult r = transform(x);
      next = r.image;
      trace.orientation_reversals += r.orientation_reversed;
    } catch (const Error& e) {
      trace.error = e.kind();
      trace.error_message = e.what();
      break;
    }
    const double delta = (next->edges() - x.edges()).norm();
    trace.step_deltas.push_back(delta);
    trace.qualities.push_back(quality(x));
    if (delta < tol) {
      trace.converged = true;
      trace.limit = *next;
      break;
    }
    if (n + 1 == max_steps) break;
    trace.states.push_back(*next);
  }
  return trace;
}

/// Geometric-mean step ratio over the tail of an orbit where deltas lie in
/// [lo, hi], i.e. after transients and before roundoff. NaN if fewer than
/// five such steps exist.
inline double estimate_contraction_ratio(std::span<const double> deltas,
                                         double lo = 1e-11, double hi = 1e-4) {
  std::optional<std::size_t> first;
  std::size_t last = 0;
  for (std::size_t n = 0; n < deltas.size(); ++n) {
    if (deltas[n] >= lo && deltas[n] <= hi) {
      if (!first) first = n;
      last = n;
    }
  }
  if (!first || last < *first + 4) return std::numeric_limits<double>::quiet_NaN();
  return std::pow(deltas[last] / deltas[*first],
                  1.0 / static_cast<double>(last - *first));
}

// ---------------------------------------------------------------------------
// Jacobians

struct JacobianMatrix {
  Tetrahedron base_point;
  Tetrahedron image_point;
  /// Column k: coordinates, in the frame at image_point, of the derivative
  /// along base_point * B_k.
  Mat8 matrix;
  /// The same derivatives as raw 9-vectors.
  FrameColumns ambient;
  /// Largest distance of a derivative column from the image tangent space.
  double fd_residual;
};

/// Central-difference Jacobian of an arbitrary map SL(3) -> SL(3) in the
/// left-translated frames. Used for the map itself and for its iterates.
template <typename Map>
JacobianMatrix jacobian_fd_map(Map&& map, const Tetrahedron& t,
                               double h = kDefaultFdStep) {
  if (!(h >= 1e-12)) {
    throw Error(ErrorKind::StepTooSmall, "jacobian_fd: step below 1e-12");
  }
  const Mat3& x = t.edges();
  const Mat3 y = map(x);
  const FrameColumns base = frame_columns(x);

  FrameColumns derivs;
  for (int k = 0; k < 8; ++k) {
    const Mat3 v = unflatten(base.col(k));
    derivs.col(k) = flatten((map(x + h * v) - map(x - h * v)) / (2.0 * h));
  }

  const FrameColumns image_frame = frame_columns(y);
  Eigen::ColPivHouseholderQR<FrameColumns> qr(image_frame);
  const Mat8 coords = qr.solve(derivs);
  const double residual =
      (image_frame * coords - derivs).colwise().norm().maxCoeff();
  return {t, Tetrahedron(y), coords, derivs, residual};
}

inline JacobianMatrix jacobian_fd(const Tetrahedron& t,
                                  double h = kDefaultFdStep) {
  return jacobian_fd_map([](const Mat3& m) { return theta_map(m); }, t, h);
}

/// The Jacobian between orthonormalized frames (QR of x * B at both ends).
/// Its singular values are those of the derivative as a map between tangent
/// spaces with the Frobenius metric, independent of the frame choice.
inline Mat8 orthonormal_jacobian(const JacobianMatrix& jac) {
  const OrthonormalFrame in = orthonormal_frame(jac.base_point.edges());
  const OrthonormalFrame out = orthonormal_frame(jac.image_point.edges());
  const Mat8 lhs = out.q.transpose() * jac.ambient;
  // lhs * R_in^{-1}
  return in.r.transpose()
      .triangularView<Eigen::Lower>()
      .solve(lhs.transpose())
      .transpose();
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectrumReport {
  EigenList eigenvalues;  // of the frame Jacobian
  /// Orbit share of each eigenvector, mapped into the tangent space at the point.
  std::array<double, 8> eigen_orbit_fractions{};
  Vec8 singular_values;        // orthonormal frames
  Vec8 frame_singular_values;  // left-translated x * B_k frames
  std::array<bool, 8> tangent_flags{};
  std::array<double, 8> orbit_fractions{};  // of right singular vectors
  std::array<Mat3, 8> right_singular_vectors;  // unit tangent vectors at x
  int tangent_count = 0;
  /// Largest modulus among eigenvalues with predominantly transverse
  /// eigenvectors.
  double contraction_constant = std::numeric_limits<double>::quiet_NaN();
  double max_transverse_singular_value = std::numeric_limits<double>::quiet_NaN();
  /// A singular vector's orbit share fell inside [0.4, 0.6].
  bool classification_ambiguous = false;
  double fd_residual = 0.0;
};

inline constexpr double kTangentThreshold = 0.5;
inline constexpr double kAmbiguityLow = 0.4;
inline constexpr double kAmbiguityHigh = 0.6;

inline SpectrumReport spectrum_at(const Tetrahedron& t,
                                  double h = kDefaultFdStep) {
  const JacobianMatrix jac = jacobian_fd(t, h);
  const TangentSplitting split = tangent_splitting(t);
  SpectrumReport rep;
  rep.fd_residual = jac.fd_residual;

  const EigenDecomposition eig = eigen_decompose(jac.matrix);
  rep.eigenvalues.values = eig.values;
  const Eigen::Matrix<Complex, 9, 8> frame = frame_columns(t.edges()).cast<Complex>();
  double c = -1.0;
  for (int k = 0; k < 8; ++k) {
    const Eigen::Matrix<Complex, 9, 1> w = frame * eig.vectors.col(k);
    rep.eigen_orbit_fractions[k] = split.orbit_fraction(w);
    if (rep.eigen_orbit_fractions[k] < kTangentThreshold) {
      c = std::max(c, std::abs(eig.values[k]));
    }
  }
  if (c >= 0.0) rep.contraction_constant = c;

  rep.frame_singular_values = singular_values(jac.matrix);

  const OrthonormalFrame in = orthonormal_frame(t.edges());
  const SvdResult f = svd(orthonormal_jacobian(jac));
  rep.singular_values = f.sigma;
  double transverse_max = -1.0;
  for (int k = 0; k < 8; ++k) {
    const Vec9 v = in.q * f.v.col(k);
    rep.right_singular_vectors[k] = unflatten(v);
    const double frac = split.orbit_fraction(v);
    rep.orbit_fractions[k] = frac;
    rep.tangent_flags[k] = frac >= kTangentThreshold;
    if (frac >= kAmbiguityLow && frac <= kAmbiguityHigh) {
      rep.classification_ambiguous = true;
    }
    if (rep.tangent_flags[k]) {
      ++rep.tangent_count;
    } else {
      transverse_max = std::max(transverse_max, f.sigma[k]);
    }
  }
  if (transverse_max >= 0.0) rep.max_transverse_singular_value = transverse_max;
  return rep;
}

// ---------------------------------------------------------------------------
// Singular-value cocycle

enum class SigmaTermination { Converged, MaxSteps, Underflow };

constexpr std::string_view to_string(SigmaTermination t) noexcept {
  switch (t) {
    case SigmaTermination::Converged: return "Converged";
    case SigmaTermination::MaxSteps: return "MaxSteps";
    case SigmaTermination::Underflow: return "Underflow";
  }
  return "Unknown";
}

struct SigmaTrace {
  /// per_step[n] = singular values of D(Theta^n)(x) in the x * B frames;
  /// per_step[0] is all ones.
  std::vector<Vec8> per_step;
  Vec8 terminal;
  /// Terminal product re-expressed between orthonormalized frames.
  Vec8 terminal_orthonormal;
  int steps_used = 0;
  SigmaTermination termination = SigmaTermination::MaxSteps;
  Tetrahedron final_point;
  Mat8 product;
  /// Orbit share at the final point of each left singular vector of the
  /// terminal product, and the resulting split.
  std::array<double, 8> orbit_fractions{};
  int tangent_count = 0;
  int count_above_one = 0;
  double transverse_max = std::numeric_limits<double>::quiet_NaN();
};

/// Multiplies per-step frame Jacobians along the orbit (chain rule for the
/// derivative of the n-th iterate) until consecutive singular-value vectors
/// differ by less than tol in the 2-norm.
inline SigmaTrace sigma_trace(const Tetrahedron& start, double tol = 1e-8,
                              int max_steps = 500, double h = kDefaultFdStep) {
  if (!(tol > 0.0) || max_steps < 1) {
    throw Error(ErrorKind::InvalidInput,
                "sigma_trace: tol must be > 0 and max_steps >= 1");
  }
  SigmaTrace out{{Vec8::Ones()}, Vec8::Ones(), Vec8::Ones(), 0,
                 SigmaTermination::MaxSteps, start, Mat8::Identity()};
  Tetrahedron x = start;
  for (int n = 1; n <= max_steps; ++n) {
    const JacobianMatrix jac = jacobian_fd(x, h);
    out.product = jac.matrix * out.product;
    x = jac.image_point;
    out.steps_used = n;
    out.final_point = x;
    if (!out.product.allFinite()) {
      out.termination = SigmaTermination::Underflow;
      break;
    }
    const Vec8 s = singular_values(out.product);
    const Vec8 prev = out.per_step.back();
    out.per_step.push_back(s);
    if (!(s[0] > std::numeric_limits<double>::min())) {
      out.termination = SigmaTermination::Underflow;
      break;
    }
    if (n >= 2 && (s - prev).norm() < tol) {
      out.termination = SigmaTermination::Converged;
      break;
    }
  }
  out.terminal = out.per_step.back();

  if (out.product.allFinite()) {
    const OrthonormalFrame in = orthonormal_frame(start.edges());
    const OrthonormalFrame fin = orthonormal_frame(out.final_point.edges());
    const Mat8 ortho = fin.r * out.product * in.r.inverse();
    out.terminal_orthonormal = singular_values(ortho);

    const TangentSplitting split = tangent_splitting(out.final_point);
    const FrameColumns frame = frame_columns(out.final_point.edges());
    const SvdResult f = svd(out.product);
    double transverse_max = -1.0;
    for (int k = 0; k < 8; ++k) {
      const double frac = split.orbit_fraction(Vec9(frame * f.u.col(k)));
      out.orbit_fractions[k] = frac;
      if (frac >= kTangentThreshold) {
        ++out.tangent_count;
      } else {
        transverse_max = std::max(transverse_max, f.sigma[k]);
      }
    }
    if (transverse_max >= 0.0) out.transverse_max = transverse_max;
  }
  for (int k = 0; k < 8; ++k) out.count_above_one += out.terminal[k] > 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Newton search

enum class NewtonStatus { Converged, MaxIterations, SingularStep, NumericError };

constexpr std::string_view to_string(NewtonStatus s) noexcept {
  switch (s) {
    case NewtonStatus::Converged: return "Converged";
    case NewtonStatus::MaxIterations: return "MaxIterations";
    case NewtonStatus::SingularStep: return "SingularStep";
    case NewtonStatus::NumericError: return "NumericError";
  }
  return "Unknown";
}

inline constexpr double kRegularQuality = 1.0 - 1e-6;

struct NewtonResult {
  std::vector<Tetrahedron> iterates;
  bool converged = false;
  std::optional<Tetrahedron> fixed_point;
  bool is_regular = false;
  NewtonStatus status = NewtonStatus::MaxIterations;
  int iterations = 0;
  double residual = 0.0;  // ||Theta(x) - x||_F at the last iterate
  std::string message;
};

/// Newton iteration for Theta(x) = x restricted to SL(3). Each step solves
/// (DTheta(x) - I) dx = x - Theta(x) over the tangent space at x by truncated
/// SVD least squares, then renormalizes to det 1. Steps are halved (at most
/// ten times) until the fixed-point residual decreases.
inline NewtonResult newton_search(const Tetrahedron& start, double tol = 1e-10,
                                  int max_iter = 100,
                                  double h = kDefaultFdStep) {
  if (!(tol > 0.0) || max_iter < 0) {
    throw Error(ErrorKind::InvalidInput,
                "newton_search: tol must be > 0 and max_iter >= 0");
  }
  NewtonResult out;
  out.iterates.push_back(start);
  Mat3 x = start.edges();
  try {
    for (int it = 0;; ++it) {
      const Mat3 fx = theta_map(x);
      const double r = (fx - x).norm();
      out.residual = r;
      out.iterations = it;
      if (r < tol) {
        out.status = NewtonStatus::Converged;
        out.converged = true;
        out.fixed_point = Tetrahedron(x);
        out.is_regular = mean_ratio_quality(x) >= kRegularQuality;
        return out;
      }
      if (it == max_iter) {
        out.status = NewtonStatus::MaxIterations;
        out.message = "iteration cap reached";
        return out;
      }

      const JacobianMatrix jac = jacobian_fd(Tetrahedron(x), h);
      const FrameColumns frame = frame_columns(x);
      const FrameColumns system = jac.ambient - frame;
      const Vec9 rhs = flatten(x - fx);
      const LeastSquaresResult ls = solve_least_squares(system, rhs, 1e-10);
      if (ls.truncated_residual > 1e-2 * rhs.norm()) {
        out.status = NewtonStatus::SingularStep;
        out.message = "residual along discarded directions " +
                      std::to_string(ls.truncated_residual) +
                      " exceeds 1e-2 of the right-hand side";
        return out;
      }
      const Mat3 step = unflatten(Vec9(frame * ls.solution));

      std::optional<Mat3> best;
      double best_r = std::numeric_limits<double>::infinity();
      double damping = 1.0;
      for (int halving = 0; halving <= 10; ++halving, damping *= 0.5) {
        Mat3 trial = x + damping * step;
        const double det = trial.determinant();
        if (!(det > 0.0)) continue;
        trial /= std::cbrt(det);
        double trial_r;
        try {
          trial_r = (theta_map(trial) - trial).norm();
        } catch (const Error&) {
          continue;
        }
        if (trial_r < best_r) {
          best_r = trial_r;
          best = trial;
        }
        if (trial_r < r) break;
      }
      if (!best) {
        out.status = NewtonStatus::NumericError;
        out.message = "every damped step left the domain";
        return out;
      }
      x = *best;
      out.iterates.emplace_back(x);
    }
  } catch (const Error& e) {
    out.status = NewtonStatus::NumericError;
    out.message = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random starting points

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Box-Muller over mt19937_64 with an explicit 53-bit conversion, so the
/// stream does not depend on the standard library's distribution code.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    constexpr double kUnit = 0x1.0p-53;
    const double u1 = static_cast<double>((gen_() >> 11) + 1) * kUnit;  // (0, 1]
    const double u2 = static_cast<double>(gen_() >> 11) * kUnit;        // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 gen_;
  std::optional<double> cached_;
};

}  // namespace detail

/// Seed for sample `index` of a batch; depends only on the pair.
inline std::uint64_t sample_seed(std::uint64_t master_seed, std::uint64_t index) {
  return detail::splitmix64(master_seed ^ detail::splitmix64(index));
}

inline constexpr const char* kRandomDistribution =
    "iid standard normal entries, columns 0/1 swapped if det < 0, "
    "rejected if |det| < 1e-3, scaled to det 1";

inline Tetrahedron random_tetrahedron(std::uint64_t seed) {
  detail::NormalStream normal(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m(i, j) = normal.next();
    }
    double det = m.determinant();
    if (det < 0.0) {
      m.col(0).swap(m.col(1));
      det = -det;
    }
    if (det < 1e-3) continue;
    return Tetrahedron(m / std::cbrt(det));
  }
  throw std::logic_error("random_tetrahedron: rejection cap exhausted");
}

}  // namespace tetradyn
