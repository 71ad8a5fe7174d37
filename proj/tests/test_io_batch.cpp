#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tetradyn/batch.hpp"
#include "tetradyn/io.hpp"

using namespace tetradyn;

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
}

TEST(Io, ParsesNumbersWithMixedSeparators) {
  const auto v = io::parse_numbers(" 1, 2\t3\n+4 -5e-1 ");
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v[3], 4.0);
  EXPECT_EQ(v[4], -0.5);
  EXPECT_THROW(io::parse_numbers("1 2 x"), Error);
}

TEST(Io, TextInputIsColumnMajor) {
  const Tetrahedron t = io::parse_tetrahedron("1 0 0  0.5 2 0  0 0 3");
  EXPECT_EQ(t.edges()(0, 1), 0.5);
  EXPECT_EQ(t.edges()(1, 1), 2.0);
  EXPECT_EQ(t.edges().col(2), Vec3(0, 0, 3));
}

TEST(Io, JsonRoundTrip) {
  const Tetrahedron t = random_tetrahedron(8);
  const std::string text = io::to_json(t).dump();
  const Tetrahedron back = io::parse_tetrahedron(text);
  EXPECT_EQ(back.edges(), t.edges());
  EXPECT_EQ(io::parse_tetrahedron(io::to_text(t.edges())).edges(), t.edges());
}

TEST(Io, MalformedInputsAreParseErrors) {
  for (const char* bad : {"1 2 3 4 5 6 7 8", "{\"edges\": [[1,0,0],[0,1,0]]}",
                          "{\"edges\": [[1,0,0],[0,1,0],[0,0,\"a\"]]}", "{not json",
                          "1 0 0 0 1 0 0 0 0", "-1 0 0 0 1 0 0 0 1"}) {
    try {
      io::parse_tetrahedron(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ParseError) << bad;
    }
  }
}

TEST(Io, ResolvesNamedAndFilePoints) {
  EXPECT_EQ(io::resolve_point("identity").edges(), Mat3::Identity());
  EXPECT_EQ(io::resolve_point("regular").edges(), canonical_regular().edges());
  EXPECT_EQ(io::resolve_point("inline:2 0 0 0 1 0 0 0 1").det(), 2.0);

  const auto path = std::filesystem::temp_directory_path() / "tetradyn_point.json";
  {
    std::ofstream out(path);
    out << R"({"edges": [[1,0,0],[0,1,0],[0,0,1]]})";
  }
  EXPECT_EQ(io::resolve_point("file:" + path.string()).edges(), Mat3::Identity());
  std::filesystem::remove(path);
  EXPECT_THROW(io::resolve_point("file:/nonexistent/tetra.json"), Error);
  EXPECT_THROW(io::resolve_point("cube"), Error);
}

TEST(Config, ParsesKeysAndComments) {
  const auto c = batch::parse_config(
      "# scan settings\n"
      "seed = 42\n"
      "count=7\n"
      "sigma_tol = 1e-9  # tighter\n"
      "max_steps=250\n"
      "format=json\n"
      "threads=2\n");
  EXPECT_EQ(c.master_seed, 42u);
  EXPECT_EQ(c.sample_count, 7);
  EXPECT_EQ(c.sigma_tol, 1e-9);
  EXPECT_EQ(c.max_steps.value(), 250);
  EXPECT_EQ(c.format, batch::OutputFormat::Json);
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.newton_tol, 1e-10);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(batch::parse_config("colour=blue\n"), Error);
  EXPECT_THROW(batch::parse_config("count=many\n"), Error);
  EXPECT_THROW(batch::parse_config("just a line\n"), Error);
  EXPECT_THROW(batch::parse_config("format=xml\n"), Error);
}

TEST(Config, ValidationEnforcesInvariants) {
  batch::RunConfig c;
  c.sample_count = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.sigma_tol = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.fd_step = 1e-13;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  EXPECT_NO_THROW(c.validate());
}

TEST(Batch, ParallelRowsKeepIndexOrder) {
  const auto rows = batch::parallel_rows<int>(50, 4, [](int i) { return i * i; });
  ASSERT_EQ(rows.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(rows[i], i * i);
}

TEST(Batch, NewtonScanRowsAndSummary) {
  batch::RunConfig c;
  c.sample_count = 5;
  c.master_seed = 3;
  const auto rep = batch::run_newton_scan(c);
  ASSERT_EQ(rep.rows.size(), 5u);
  EXPECT_EQ(rep.summary.sample_count, 5);
  int converged = 0;
  for (const auto& r : rep.rows) converged += r.converged();
  EXPECT_EQ(rep.summary.converged_count, converged);
  EXPECT_EQ(rep.summary.failure_count, static_cast<int>(rep.summary.failures.size()));
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(rep.rows[i].index, i);
    EXPECT_EQ(rep.rows[i].seed, sample_seed(3, static_cast<std::uint64_t>(i)));
  }
}

TEST(Batch, NewtonIterationCapRecordedInRow) {
  batch::RunConfig c;
  c.sample_count = 3;
  c.max_steps = 1;
  const auto rep = batch::run_newton_scan(c);
  for (const auto& r : rep.rows) EXPECT_EQ(r.status, "MaxIterations");
  EXPECT_EQ(rep.summary.failure_count, 3);
}

TEST(Batch, SigmaScanIsIndependentOfThreadCount) {
  batch::RunConfig c;
  c.sample_count = 4;
  c.master_seed = 17;
  c.max_steps = 40;
  std::ostringstream one, many;
  batch::write_csv(one, batch::run_sigma_scan(c).rows);
  c.threads = 3;
  batch::write_csv(many, batch::run_sigma_scan(c).rows);
  EXPECT_EQ(one.str(), many.str());
}

TEST(Batch, CsvHeadersAndRowCount) {
  batch::RunConfig c;
  c.sample_count = 3;
  c.max_steps = 5;
  const auto rep = batch::run_sigma_scan(c);
  std::ostringstream out;
  batch::write_csv(out, rep.rows);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, batch::kSigmaCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 17);
  }
  EXPECT_EQ(rows, 3);
  for (const auto& r : rep.rows) EXPECT_EQ(r.termination, "MaxSteps");
}

TEST(Batch, JsonCarriesConfigAndSummary) {
  batch::RunConfig c;
  c.sample_count = 2;
  c.max_steps = 5;
  const auto j = batch::to_json(batch::run_sigma_scan(c));
  EXPECT_EQ(j["config"]["count"], 2);
  EXPECT_EQ(j["config"]["max_steps"], 5);
  EXPECT_EQ(j["config"]["distribution"], kRandomDistribution);
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["summary"]["sample_count"], 2);
  EXPECT_EQ(j["rows"][0]["sigma"].size(), 8u);
}

TEST(Batch, SampleErrorsAreIsolated) {
  // A failing sample yields a flagged row, not an exception.
  batch::RunConfig c;
  c.fd_step = 1e-13;  // below the finite-difference floor
  const batch::SigmaRow r = batch::sigma_sample(Tetrahedron(Mat3::Identity()), 0, 0, c);
  EXPECT_EQ(r.termination, "Error");
  EXPECT_FALSE(r.error.empty());
  EXPECT_FALSE(r.limit_pattern());
}
