#pragma once

// Command-line front end. run_cli() takes its streams as arguments so the
// test suite can drive it in-process.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tetradyn/batch.hpp"
#include "tetradyn/dynamics.hpp"
#include "tetradyn/error.hpp"
#include "tetradyn/io.hpp"
#include "tetradyn/shape_space.hpp"
#include "tetradyn/tetrahedron.hpp"

namespace tetradyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr std::string_view kIterateHeader = "step,delta,quality,det";

/// Flag values as given on the command line; unset ones fall back to the
/// config file, then to RunConfig defaults.
struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::optional<double> tol;
  std::optional<double> fd_step;
  std::optional<int> max_steps;
  std::optional<std::string> output;
  std::optional<std::string> format;
  std::optional<std::string> point;
  std::optional<std::string> config;
  std::optional<int> threads;
};

enum class Command { Transform, Iterate, Spectrum, SigmaScan, NewtonScan };

inline batch::RunConfig resolve_config(const Flags& f, Command cmd) {
  batch::RunConfig c;
  if (f.config) c = batch::load_config(*f.config, c);
  if (f.seed) c.master_seed = *f.seed;
  if (f.count) c.sample_count = *f.count;
  if (f.fd_step) c.fd_step = *f.fd_step;
  if (f.max_steps) c.max_steps = *f.max_steps;
  if (f.output) c.output_path = *f.output;
  if (f.format) c.format = batch::parse_format(*f.format);
  if (f.threads) c.threads = *f.threads;
  if (f.tol) {
    switch (cmd) {
      case Command::Iterate: c.orbit_tol = *f.tol; break;
      case Command::SigmaScan: c.sigma_tol = *f.tol; break;
      case Command::NewtonScan: c.newton_tol = *f.tol; break;
      default: break;
    }
  }
  c.validate();
  return c;
}

namespace detail {

using io::format_double;

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

/// Writes to the configured path, or to `out` when none is set.
inline void emit(const batch::RunConfig& cfg, std::ostream& out,
                 const std::function<void(std::ostream&)>& body) {
  if (cfg.output_path.empty()) {
    body(out);
    out.flush();
    return;
  }
  std::ofstream file(cfg.output_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::ParseError, "cannot write " + cfg.output_path);
  body(file);
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline Tetrahedron require_point(const Flags& f) {
  if (!f.point) throw Error(ErrorKind::ParseError, "--point is required");
  return io::resolve_point(*f.point);
}

inline int cmd_transform(const Flags& f, std::ostream& out, std::ostream& err) {
  const batch::RunConfig cfg = resolve_config(f, Command::Transform);
  const Tetrahedron t = require_point(f);
  const TransformResult r = transform(t);
  if (r.orientation_reversed) {
    err << "warning: raw image reverses orientation for input "
        << io::to_text(t.edges()) << "\n";
  }
  const Mat3& y = r.image.edges();
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == batch::OutputFormat::Json) {
      o << dump({{"input", io::to_json(t)},
                 {"image", io::to_json(r.image)},
                 {"raw_image", {{"edges", io::edges_to_json(r.raw_image)}}},
                 {"scale", r.scale},
                 {"det_input", t.det()},
                 {"det_image", r.image.det()},
                 {"orientation_reversed", r.orientation_reversed}});
      return;
    }
    o << "e1x,e1y,e1z,e2x,e2y,e2z,e3x,e3y,e3z,scale,det_input,det_image,"
         "orientation_reversed\n";
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 3; ++i) o << format_double(y(i, c)) << ',';
    }
    o << format_double(r.scale) << ',' << format_double(t.det()) << ','
      << format_double(r.image.det()) << ',' << (r.orientation_reversed ? 1 : 0)
      << '\n';
  });
  return kExitOk;
}

inline int cmd_iterate(const Flags& f, std::ostream& out, std::ostream& err) {
  const batch::RunConfig cfg = resolve_config(f, Command::Iterate);
  const Tetrahedron start = require_point(f).normalized();
  const OrbitTrace tr = iterate_orbit(start, cfg.orbit_tol, cfg.max_steps.value_or(500));
  if (tr.orientation_reversals > 0) {
    err << "warning: " << tr.orientation_reversals
        << " step(s) had an orientation-reversing raw image; start "
        << io::to_text(start.edges()) << "\n";
  }
  const std::size_t rows = tr.step_deltas.size();
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == batch::OutputFormat::Json) {
      nlohmann::json jr = nlohmann::json::array();
      for (std::size_t n = 0; n < rows; ++n) {
        jr.push_back({{"step", n},
                      {"delta", json_number(tr.step_deltas[n])},
                      {"quality", json_number(tr.qualities[n])},
                      {"det", tr.states[n].det()}});
      }
      nlohmann::json j{{"start", io::to_json(start)},
                       {"tol", cfg.orbit_tol},
                       {"rows", jr},
                       {"converged", tr.converged},
                       {"orientation_reversals", tr.orientation_reversals}};
      j["limit"] = tr.limit ? io::to_json(*tr.limit) : nlohmann::json(nullptr);
      j["error"] = tr.error ? nlohmann::json(tr.error_message) : nlohmann::json(nullptr);
      o << dump(j);
      return;
    }
    o << kIterateHeader << '\n';
    for (std::size_t n = 0; n < rows; ++n) {
      o << n << ',' << format_double(tr.step_deltas[n]) << ','
        << format_double(tr.qualities[n]) << ',' << format_double(tr.states[n].det())
        << '\n';
    }
    if (tr.error) o << "# error: " << tr.error_message << '\n';
  });
  if (tr.error) {
    err << "error: " << tr.error_message << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

inline int cmd_spectrum(const Flags& f, std::ostream& out, std::ostream& err) {
  const batch::RunConfig cfg = resolve_config(f, Command::Spectrum);
  const Tetrahedron t = require_point(f).normalized();
  const SpectrumReport rep = spectrum_at(t, cfg.fd_step);
  if (rep.classification_ambiguous) {
    err << "warning: a singular vector's orbit share lies in [0.4, 0.6]\n";
  }
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == batch::OutputFormat::Json) {
      nlohmann::json eig = nlohmann::json::array();
      nlohmann::json sv = nlohmann::json::array();
      for (int k = 0; k < 8; ++k) {
        const Complex l = rep.eigenvalues.values[k];
        eig.push_back({{"re", l.real()},
                       {"im", l.imag()},
                       {"modulus", std::abs(l)},
                       {"orbit_fraction", rep.eigen_orbit_fractions[k]}});
        sv.push_back({{"value", rep.singular_values[k]},
                      {"frame_value", rep.frame_singular_values[k]},
                      {"orbit_fraction", rep.orbit_fractions[k]},
                      {"tangent", rep.tangent_flags[k]}});
      }
      o << dump({{"point", io::to_json(t)},
                 {"fd_step", cfg.fd_step},
                 {"eigenvalues", eig},
                 {"singular_values", sv},
                 {"tangent_count", rep.tangent_count},
                 {"contraction_constant", json_number(rep.contraction_constant)},
                 {"max_transverse_singular_value",
                  json_number(rep.max_transverse_singular_value)},
                 {"classification_ambiguous", rep.classification_ambiguous},
                 {"fd_residual", rep.fd_residual}});
      return;
    }
    o << "index,eig_re,eig_im,eig_modulus,eig_orbit_fraction,singular_value,"
         "frame_singular_value,orbit_fraction,tangent\n";
    for (int k = 0; k < 8; ++k) {
      const Complex l = rep.eigenvalues.values[k];
      o << k << ',' << format_double(l.real()) << ',' << format_double(l.imag()) << ','
        << format_double(std::abs(l)) << ','
        << format_double(rep.eigen_orbit_fractions[k]) << ','
        << format_double(rep.singular_values[k]) << ','
        << format_double(rep.frame_singular_values[k]) << ','
        << format_double(rep.orbit_fractions[k]) << ','
        << (rep.tangent_flags[k] ? 1 : 0) << '\n';
    }
    o << "# tangent_count=" << rep.tangent_count << '\n'
      << "# contraction_constant=" << format_double(rep.contraction_constant) << '\n'
      << "# max_transverse_singular_value="
      << format_double(rep.max_transverse_singular_value) << '\n'
      << "# classification_ambiguous=" << (rep.classification_ambiguous ? 1 : 0) << '\n'
      << "# fd_residual=" << format_double(rep.fd_residual) << '\n';
  });
  return kExitOk;
}

template <typename Row, typename SampleFn, typename RunFn>
int run_scan(const batch::RunConfig& cfg, const Flags& f, std::ostream& out,
             std::ostream& err, SampleFn sample, RunFn run) {
  batch::BatchReport<Row> rep;
  if (f.point) {
    const Tetrahedron start = io::resolve_point(*f.point).normalized();
    rep.config = cfg;
    rep.config.sample_count = 1;
    rep.rows.push_back(sample(start, 0, 0, cfg));
    rep.summary = batch::summarize(rep.rows);
  } else {
    rep = run(cfg);
  }
  for (const auto& r : rep.rows) {
    if (!r.error.empty()) {
      err << "sample " << r.index << " (seed " << r.seed << "): " << r.error << "\n";
    }
  }
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == batch::OutputFormat::Json) {
      o << dump(batch::to_json(rep));
    } else {
      batch::write_csv(o, rep.rows);
    }
  });
  return kExitOk;
}

}  // namespace detail

inline void add_common_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--seed", f.seed, "master seed for random samples");
  sub.add_option("--count", f.count, "number of random samples");
  sub.add_option("--tol", f.tol, "stopping tolerance");
  sub.add_option("--fd-step", f.fd_step, "finite-difference step");
  sub.add_option("--max-steps", f.max_steps, "step or iteration cap");
  sub.add_option("--output", f.output, "output file (default stdout)");
  sub.add_option("--format", f.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub.add_option("--point", f.point,
                 "identity | regular | file:<path> | inline:<9 numbers>");
  sub.add_option("--config", f.config, "key=value config file");
  sub.add_option("--threads", f.threads, "worker threads for scans");
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Tetrahedron transformation dynamics", "tetradyn"};
  app.require_subcommand(1);
  Flags flags;
  struct Sub {
    const char* name;
    const char* help;
    Command cmd;
  };
  const Sub subs[] = {
      {"transform", "apply the map once", Command::Transform},
      {"iterate", "iterate the map to a fixed point", Command::Iterate},
      {"spectrum", "eigenvalues and singular values of the Jacobian",
       Command::Spectrum},
      {"sigma-scan", "singular-value limits over random samples",
       Command::SigmaScan},
      {"newton-scan", "Newton fixed-point search over random samples",
       Command::NewtonScan},
  };
  std::vector<std::pair<CLI::App*, Command>> registered;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common_flags(*sub, flags);
    registered.emplace_back(sub, s.cmd);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  Command cmd = Command::Transform;
  for (const auto& [sub, c] : registered) {
    if (sub->parsed()) cmd = c;
  }

  try {
    switch (cmd) {
      case Command::Transform: return detail::cmd_transform(flags, out, err);
      case Command::Iterate: return detail::cmd_iterate(flags, out, err);
      case Command::Spectrum: return detail::cmd_spectrum(flags, out, err);
      case Command::SigmaScan: {
        const auto cfg = resolve_config(flags, cmd);
        return detail::run_scan<batch::SigmaRow>(cfg, flags, out, err,
                                                 batch::sigma_sample,
                                                 batch::run_sigma_scan);
      }
      case Command::NewtonScan: {
        const auto cfg = resolve_config(flags, cmd);
        return detail::run_scan<batch::NewtonRow>(cfg, flags, out, err,
                                                  batch::newton_sample,
                                                  batch::run_newton_scan);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ParseError:
      case ErrorKind::InvalidInput:
      case ErrorKind::StepTooSmall:
        return kExitUsage;
      default:
        return kExitNumeric;
    }
  }
  return kExitOk;
}

inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

}  // namespace tetradyn::cli
