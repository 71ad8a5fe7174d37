#pragma once

// Randomized batch experiments. Sample i always starts from
// random_tetrahedron(sample_seed(master_seed, i)), so rows are identical no
// matter how many worker threads run or in which order samples finish.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tetradyn/dynamics.hpp"
#include "tetradyn/error.hpp"
#include "tetradyn/io.hpp"

namespace tetradyn::batch {

enum class OutputFormat { Csv, Json };

struct RunConfig {
  std::uint64_t master_seed = 1;
  int sample_count = 100;
  double orbit_tol = 1e-12;
  double sigma_tol = 1e-8;
  double newton_tol = 1e-10;
  double fd_step = kDefaultFdStep;
  /// Unset means the command default (500 for sigma scans, 100 for Newton).
  std::optional<int> max_steps;
  std::string output_path;
  OutputFormat format = OutputFormat::Csv;
  int threads = 1;

  void validate() const {
    if (!(orbit_tol > 0.0) || !(sigma_tol > 0.0) || !(newton_tol > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "tolerances must be > 0");
    }
    if (sample_count < 1) throw Error(ErrorKind::InvalidInput, "count must be >= 1");
    if (!(fd_step >= 1e-12)) throw Error(ErrorKind::StepTooSmall, "fd_step below 1e-12");
    if (max_steps && *max_steps < 0) {
      throw Error(ErrorKind::InvalidInput, "max_steps must be >= 0");
    }
    if (threads < 1) throw Error(ErrorKind::InvalidInput, "threads must be >= 1");
  }
};

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw Error(ErrorKind::ParseError, "format must be csv or json");
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw Error(ErrorKind::ParseError, "bad value for " + key + ": '" + value + "'");
  }
  return out;
}

}  // namespace detail

/// Flat key=value text; '#' starts a comment. Keys: seed, count, orbit_tol,
/// sigma_tol, newton_tol, fd_step, max_steps, output, format, threads.
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::istringstream lines{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError,
                  "config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
    const std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
    if (key == "seed") {
      base.master_seed = detail::parse_value<std::uint64_t>(key, value);
    } else if (key == "count") {
      base.sample_count = detail::parse_value<int>(key, value);
    } else if (key == "orbit_tol") {
      base.orbit_tol = detail::parse_value<double>(key, value);
    } else if (key == "sigma_tol") {
      base.sigma_tol = detail::parse_value<double>(key, value);
    } else if (key == "newton_tol") {
      base.newton_tol = detail::parse_value<double>(key, value);
    } else if (key == "fd_step") {
      base.fd_step = detail::parse_value<double>(key, value);
    } else if (key == "max_steps") {
      base.max_steps = detail::parse_value<int>(key, value);
    } else if (key == "output") {
      base.output_path = value;
    } else if (key == "format") {
      base.format = parse_format(value);
    } else if (key == "threads") {
      base.threads = detail::parse_value<int>(key, value);
    } else {
      throw Error(ErrorKind::ParseError, "unknown config key '" + key + "'");
    }
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Evaluates fn(i) for i in [0, count) on up to `threads` workers; results
/// are stored by index.
template <typename Row, typename Fn>
std::vector<Row> parallel_rows(int count, int threads, Fn fn) {
  std::vector<std::optional<Row>> slots(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) slots[i].emplace(fn(i));
  };
  const int n = std::clamp(threads, 1, std::max(1, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  std::vector<Row> rows;
  rows.reserve(slots.size());
  for (auto& s : slots) rows.push_back(std::move(*s));
  return rows;
}

struct Summary {
  int sample_count = 0;
  int converged_count = 0;
  int failure_count = 0;
  int regular_count = 0;
  double min_quality = std::numeric_limits<double>::quiet_NaN();
  double max_quality = std::numeric_limits<double>::quiet_NaN();
  double mean_quality = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> failures;  // sample indices
};

template <typename Row>
struct BatchReport {
  RunConfig config;
  std::vector<Row> rows;
  Summary summary;
};

// ---------------------------------------------------------------------------
// sigma-scan

struct SigmaRow {
  int index = 0;
  std::uint64_t seed = 0;
  std::string termination;  // Converged | MaxSteps | Underflow | Error
  int steps = 0;
  double initial_quality = std::numeric_limits<double>::quiet_NaN();
  double final_quality = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 8> sigma{};
  int count_above_one = 0;
  int tangent_count = 0;
  double transverse_max = std::numeric_limits<double>::quiet_NaN();
  std::string error;

  bool converged() const { return termination == "Converged"; }
  /// Three limit values above 1, five below 1e-4, orbit ends regular.
  bool limit_pattern() const {
    if (!converged()) return false;
    int big = 0, small = 0;
    for (double s : sigma) {
      big += s > 1.0;
      small += s < 1e-4;
    }
    return big == 3 && small == 5 && final_quality >= kRegularQuality;
  }
};

inline SigmaRow sigma_sample(const Tetrahedron& start, int index,
                             std::uint64_t seed, const RunConfig& cfg) {
  SigmaRow row;
  row.index = index;
  row.seed = seed;
  row.initial_quality = quality(start);
  try {
    const SigmaTrace tr =
        sigma_trace(start, cfg.sigma_tol, cfg.max_steps.value_or(500), cfg.fd_step);
    row.termination = std::string(to_string(tr.termination));
    row.steps = tr.steps_used;
    row.final_quality = quality(tr.final_point);
    for (int k = 0; k < 8; ++k) row.sigma[k] = tr.terminal[k];
    row.count_above_one = tr.count_above_one;
    row.tangent_count = tr.tangent_count;
    row.transverse_max = tr.transverse_max;
  } catch (const Error& e) {
    row.termination = "Error";
    row.error = e.what();
  }
  return row;
}

inline Summary summarize(const std::vector<SigmaRow>& rows) {
  Summary s;
  s.sample_count = static_cast<int>(rows.size());
  double sum = 0.0;
  int finite = 0;
  for (const auto& r : rows) {
    if (r.converged()) ++s.converged_count;
    if (r.final_quality >= kRegularQuality) ++s.regular_count;
    if (!r.limit_pattern()) s.failures.push_back(r.index);
    if (std::isfinite(r.final_quality)) {
      s.min_quality = finite ? std::min(s.min_quality, r.final_quality) : r.final_quality;
      s.max_quality = finite ? std::max(s.max_quality, r.final_quality) : r.final_quality;
      sum += r.final_quality;
      ++finite;
    }
  }
  s.failure_count = static_cast<int>(s.failures.size());
  if (finite) s.mean_quality = sum / finite;
  return s;
}

inline BatchReport<SigmaRow> run_sigma_scan(const RunConfig& cfg) {
  cfg.validate();
  auto rows = parallel_rows<SigmaRow>(cfg.sample_count, cfg.threads, [&](int i) {
    const std::uint64_t seed = sample_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
    return sigma_sample(random_tetrahedron(seed), i, seed, cfg);
  });
  Summary s = summarize(rows);
  return {cfg, std::move(rows), std::move(s)};
}

// ---------------------------------------------------------------------------
// newton-scan

struct NewtonRow {
  int index = 0;
  std::uint64_t seed = 0;
  std::string status;
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double initial_quality = std::numeric_limits<double>::quiet_NaN();
  double final_quality = std::numeric_limits<double>::quiet_NaN();
  bool is_regular = false;
  std::string error;

  bool converged() const { return status == "Converged"; }
};

inline NewtonRow newton_sample(const Tetrahedron& start, int index,
                               std::uint64_t seed, const RunConfig& cfg) {
  NewtonRow row;
  row.index = index;
  row.seed = seed;
  row.initial_quality = quality(start);
  try {
    const NewtonResult res =
        newton_search(start, cfg.newton_tol, cfg.max_steps.value_or(100), cfg.fd_step);
    row.status = std::string(to_string(res.status));
    row.iterations = res.iterations;
    row.residual = res.residual;
    row.final_quality = mean_ratio_quality(res.iterates.back().edges());
    row.is_regular = res.is_regular;
    row.error = res.message;
  } catch (const Error& e) {
    row.status = "NumericError";
    row.error = e.what();
  }
  return row;
}

inline Summary summarize(const std::vector<NewtonRow>& rows) {
  Summary s;
  s.sample_count = static_cast<int>(rows.size());
  double sum = 0.0;
  int finite = 0;
  for (const auto& r : rows) {
    if (r.converged()) ++s.converged_count;
    if (r.is_regular) ++s.regular_count;
    if (!(r.converged() && r.is_regular)) s.failures.push_back(r.index);
    if (std::isfinite(r.final_quality)) {
      s.min_quality = finite ? std::min(s.min_quality, r.final_quality) : r.final_quality;
      s.max_quality = finite ? std::max(s.max_quality, r.final_quality) : r.final_quality;
      sum += r.final_quality;
      ++finite;
    }
  }
  s.failure_count = static_cast<int>(s.failures.size());
  if (finite) s.mean_quality = sum / finite;
  return s;
}

inline BatchReport<NewtonRow> run_newton_scan(const RunConfig& cfg) {
  cfg.validate();
  auto rows = parallel_rows<NewtonRow>(cfg.sample_count, cfg.threads, [&](int i) {
    const std::uint64_t seed = sample_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
    return newton_sample(random_tetrahedron(seed), i, seed, cfg);
  });
  Summary s = summarize(rows);
  return {cfg, std::move(rows), std::move(s)};
}

// ---------------------------------------------------------------------------
// Writers

inline constexpr std::string_view kSigmaCsvHeader =
    "index,seed,termination,steps,initial_quality,final_quality,"
    "sigma1,sigma2,sigma3,sigma4,sigma5,sigma6,sigma7,sigma8,"
    "count_above_one,tangent_count,transverse_max,error";

inline constexpr std::string_view kNewtonCsvHeader =
    "index,seed,status,iterations,residual,initial_quality,final_quality,"
    "is_regular,error";

namespace detail {

/// Errors are free text; keep them on one CSV field.
inline std::string csv_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

/// NaN and infinities become JSON null.
inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json config_json(const RunConfig& c, int default_max_steps) {
  return {{"seed", c.master_seed},
          {"count", c.sample_count},
          {"orbit_tol", c.orbit_tol},
          {"sigma_tol", c.sigma_tol},
          {"newton_tol", c.newton_tol},
          {"fd_step", c.fd_step},
          {"max_steps", c.max_steps.value_or(default_max_steps)},
          {"distribution", kRandomDistribution}};
}

inline nlohmann::json summary_json(const Summary& s) {
  return {{"sample_count", s.sample_count},
          {"converged_count", s.converged_count},
          {"regular_count", s.regular_count},
          {"failure_count", s.failure_count},
          {"min_quality", json_number(s.min_quality)},
          {"max_quality", json_number(s.max_quality)},
          {"mean_quality", json_number(s.mean_quality)},
          {"failures", s.failures}};
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<SigmaRow>& rows) {
  using io::format_double;
  out << kSigmaCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.index << ',' << r.seed << ',' << r.termination << ',' << r.steps << ','
        << format_double(r.initial_quality) << ',' << format_double(r.final_quality);
    for (double s : r.sigma) out << ',' << format_double(s);
    out << ',' << r.count_above_one << ',' << r.tangent_count << ','
        << format_double(r.transverse_max) << ',' << detail::csv_text(r.error) << '\n';
  }
}

inline void write_csv(std::ostream& out, const std::vector<NewtonRow>& rows) {
  using io::format_double;
  out << kNewtonCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.index << ',' << r.seed << ',' << r.status << ',' << r.iterations << ','
        << format_double(r.residual) << ',' << format_double(r.initial_quality) << ','
        << format_double(r.final_quality) << ',' << (r.is_regular ? 1 : 0) << ','
        << detail::csv_text(r.error) << '\n';
  }
}

inline nlohmann::json to_json(const BatchReport<SigmaRow>& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    nlohmann::json sig = nlohmann::json::array();
    for (double s : r.sigma) sig.push_back(detail::json_number(s));
    rows.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"termination", r.termination},
                    {"steps", r.steps},
                    {"initial_quality", detail::json_number(r.initial_quality)},
                    {"final_quality", detail::json_number(r.final_quality)},
                    {"sigma", sig},
                    {"count_above_one", r.count_above_one},
                    {"tangent_count", r.tangent_count},
                    {"transverse_max", detail::json_number(r.transverse_max)},
                    {"error", r.error}});
  }
  return {{"command", "sigma-scan"},
          {"config", detail::config_json(rep.config, 500)},
          {"rows", rows},
          {"summary", detail::summary_json(rep.summary)}};
}

inline nlohmann::json to_json(const BatchReport<NewtonRow>& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"status", r.status},
                    {"iterations", r.iterations},
                    {"residual", detail::json_number(r.residual)},
                    {"initial_quality", detail::json_number(r.initial_quality)},
                    {"final_quality", detail::json_number(r.final_quality)},
                    {"is_regular", r.is_regular},
                    {"error", r.error}});
  }
  return {{"command", "newton-scan"},
          {"config", detail::config_json(rep.config, 100)},
          {"rows", rows},
          {"summary", detail::summary_json(rep.summary)}};
}

}  // namespace tetradyn::batch
