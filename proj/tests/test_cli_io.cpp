#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdelay/cli_io.hpp"

using namespace rdelay;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rdelay_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "exp.cfg";
  std::ofstream(p) << text;
  return p;
}

const char* kLogisticBase = R"(model.name = logistic
model.kappa = 1
model.A = 0.5
model.B = 0.4
kernel.tau = 0.5
grid.L = pi
)";

int run(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::string* log = nullptr,
        std::string* err = nullptr, std::optional<std::uint64_t> seed = std::nullopt) {
  std::ostringstream l, e;
  const int code = run_command(cmd, cfg.string(), out.string(), seed, l, e);
  if (log) *log = l.str();
  if (err) *err = e.str();
  return code;
}

} // namespace

TEST(KeyValueConfig, ParsesCommentsAndPi) {
  const auto kv = KeyValueConfig::parse_string("# header\n a.b = 2pi  # trailing\n\nc = 0.5*pi\nd=1e-3\n");
  EXPECT_NEAR(*kv.num("a.b"), 2 * std::numbers::pi, 1e-15);
  EXPECT_NEAR(*kv.num("c"), 0.5 * std::numbers::pi, 1e-15);
  EXPECT_DOUBLE_EQ(*kv.num("d"), 1e-3);
  EXPECT_FALSE(kv.has("missing"));
}

TEST(KeyValueConfig, Diagnostics) {
  try {
    KeyValueConfig::parse_string("a = 1\nnot a pair\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(KeyValueConfig::parse_string("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse_string("a =\n"), ConfigError);
  const auto kv = KeyValueConfig::parse_string("x = abc\n");
  try {
    kv.num("x");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "x");
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(ExperimentConfig, UnknownKeysAndModelErrors) {
  EXPECT_THROW(parse_experiment(KeyValueConfig::parse_string("model.name = logistic\ngrid.m = 3\n")),
               ConfigError);
  EXPECT_THROW(parse_experiment(KeyValueConfig::parse_string("model.name = gompertz\n")), ConfigError);
  EXPECT_THROW(parse_experiment(KeyValueConfig::parse_string("model.name = logistic\nmodel.chi = 1\n")),
               ConfigError);
  EXPECT_THROW(parse_experiment(KeyValueConfig::parse_string("grid.n = 10\n")), ConfigError);
  try {
    parse_experiment(KeyValueConfig::parse_string("model.name = logistic\nhistory.amplitude = 0.1\n"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "history.type");
  }
}

TEST(ExperimentConfig, TauRange) {
  const auto e = parse_experiment(KeyValueConfig::parse_string(
      "model.name = logistic\ntau.start = 0.1\ntau.end = 5\ntau.step = 0.1\n"));
  ASSERT_EQ(e.tau_values.size(), 50u);
  EXPECT_NEAR(e.tau_values.back(), 5.0, 1e-12);
  EXPECT_THROW(parse_experiment(KeyValueConfig::parse_string(
                   "model.name = logistic\ntau.start = 1\ntau.end = 0.5\ntau.step = 0.1\n")),
               ConfigError);
}

TEST(Csv, HeaderAndRows) {
  const fs::path dir = scratch("csv");
  {
    CsvWriter w(dir / "a.csv", {"t [time]", "u [density]"});
    w.row(0.5, 1.0 / 3.0);
    EXPECT_THROW(w.row(1.0), Error);
  }
  const std::string s = slurp(dir / "a.csv");
  EXPECT_EQ(s.rfind("# t [time], u [density]\n", 0), 0u);
  EXPECT_NE(s.find("0.5,0.333333333333\n"), std::string::npos);
}

TEST(Svg, SelfContained) {
  SvgPlot p("title <x>", "x", "y");
  p.add({"line", {{0, 0}, {1, 1}, {2, 0.5}}, "#000000"});
  const std::string s = p.render();
  EXPECT_EQ(s.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0), 0u);
  EXPECT_EQ(s.find("href"), std::string::npos);
  EXPECT_EQ(s.find("<image"), std::string::npos);
  EXPECT_NE(s.find("title &lt;x&gt;"), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(Commands, BifTableRowsAndErrors) {
  const fs::path dir = scratch("bif");
  const auto cfg = write_config(dir, std::string(kLogisticBase) + "tau.values = 0.5, 1, 2\n");
  std::string log;
  ASSERT_EQ(run("bif-table", cfg, dir / "out", &log), kExitOk);
  const std::string csv = slurp(dir / "out" / "bif_table.csv");
  EXPECT_EQ(csv.rfind("# tau [time]", 0), 0u);
  EXPECT_NE(log.find("d_star="), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out" / "bif_table.svg"));

  const auto empty = write_config(dir, "model.name = logistic\n");
  std::string err;
  EXPECT_EQ(run("bif-table", empty, dir / "out2", nullptr, &err), kExitConfig);
  EXPECT_NE(err.find("tau"), std::string::npos);
}

TEST(Commands, NicholsonBifTableValue) {
  const fs::path dir = scratch("bifn");
  ASSERT_EQ(run("bif-table", fs::path(RDELAY_SOURCE_DIR) / "configs/paper/bif_nicholson.cfg", dir), kExitOk);
  std::ifstream in(dir / "bif_table.csv");
  std::string line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tau, lam, mu, dstar;
    std::getline(ss, tau, ',');
    std::getline(ss, lam, ',');
    std::getline(ss, mu, ',');
    std::getline(ss, dstar, ',');
    if (std::abs(std::stod(tau) - 0.5) < 1e-9) {
      EXPECT_NEAR(std::stod(dstar), 0.1362, 5e-5);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Commands, SimulateMissingHistoryNamesField) {
  const fs::path dir = scratch("sim_missing");
  const auto cfg = write_config(dir, std::string(kLogisticBase) + "d = 0.5\n");
  std::string err;
  EXPECT_EQ(run("simulate", cfg, dir, nullptr, &err), kExitConfig);
  EXPECT_NE(err.find("history"), std::string::npos);
}

TEST(Commands, SimulateVerdictLine) {
  const fs::path dir = scratch("sim");
  const auto cfg = write_config(dir, std::string(kLogisticBase) +
                                         "grid.n = 32\nd = 1.05\nhistory.type = sine\n"
                                         "history.amplitude = 0.1\nsim.t_end = 200\n");
  std::string log;
  ASSERT_EQ(run("simulate", cfg, dir / "out", &log), kExitOk);
  EXPECT_EQ(log, "verdict=converged-to-zero\n");
  EXPECT_TRUE(fs::exists(dir / "out" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  const std::string svg = slurp(dir / "out" / "simulate_heatmap.svg");
  EXPECT_EQ(svg.find("href"), std::string::npos);
}

TEST(Commands, CommandMismatchIsConfigError) {
  const fs::path dir = scratch("mismatch");
  const auto cfg = write_config(dir, std::string(kLogisticBase) + "command = branch\n");
  EXPECT_EQ(run("simulate", cfg, dir), kExitConfig);
}

TEST(Commands, VerifyExitCodes) {
  const fs::path dir = scratch("verify");
  const std::string base = std::string(kLogisticBase) +
                           "d = 0.5\nhistory.type = sine\nhistory.amplitude = 0.1\n"
                           "sim.t_end = 2\nverify.ladder = 16:0.02, 16:0.01\n";
  std::string log;
  EXPECT_EQ(run("verify-equivalence", write_config(dir, base + "verify.bound = 1\n"), dir / "a", &log),
            kExitOk);
  EXPECT_NE(log.find("decreasing=yes"), std::string::npos);
  EXPECT_EQ(run("verify-equivalence", write_config(dir, base + "verify.bound = 1e-12\n"), dir / "b"),
            kExitBound);
  const std::string zero = std::string(kLogisticBase) +
                           "d = 0.5\nhistory.type = constant\nhistory.amplitude = 0\n"
                           "sim.t_end = 1\nverify.ladder = 16:0.02\nverify.bound = 0\n";
  EXPECT_EQ(run("verify-equivalence", write_config(dir, zero), dir / "c"), kExitOk);
}

TEST(Commands, NumericalFailureExitCode) {
  const fs::path dir = scratch("numfail");
  // A tau with a + b k <= 0 is impossible for these models; force a failure
  // through a branch range above d*.
  const auto cfg = write_config(dir, std::string(kLogisticBase) +
                                         "grid.n = 20\nd.start = 1.5\nd.end = 0.5\n");
  std::string err;
  EXPECT_EQ(run("branch", cfg, dir, nullptr, &err), kExitConfig);
  const auto blow = write_config(dir, std::string(kLogisticBase) +
                                          "grid.n = 16\nd = 0.5\nhistory.type = constant\n"
                                          "history.amplitude = 1e7\nsim.t_end = 1\n");
  EXPECT_EQ(run("simulate", blow, dir, nullptr, &err), kExitNumerical);
  EXPECT_NE(err.find("blow-up"), std::string::npos);
}

TEST(Commands, ProbeAndBranchAreDeterministic) {
  const fs::path dir = scratch("det");
  const auto probe = write_config(dir, std::string(kLogisticBase) +
                                           "grid.n = 30\nd.values = 0.3, 0.7\nprobe.starts = 6\n");
  ASSERT_EQ(run("uniqueness-probe", probe, dir / "p1", nullptr, nullptr, 7), kExitOk);
  ASSERT_EQ(run("uniqueness-probe", probe, dir / "p2", nullptr, nullptr, 7), kExitOk);
  EXPECT_EQ(slurp(dir / "p1" / "probe.csv"), slurp(dir / "p2" / "probe.csv"));
  EXPECT_NE(slurp(dir / "p1" / "probe.csv").find(",unique,"), std::string::npos);

  const auto branch = write_config(dir, std::string(kLogisticBase) +
                                            "grid.n = 30\nd.start = 0.95\nd.end = 0.2\nd.steps = 8\n");
  ASSERT_EQ(run("branch", branch, dir / "b1"), kExitOk);
  ASSERT_EQ(run("branch", branch, dir / "b2"), kExitOk);
  EXPECT_EQ(slurp(dir / "b1" / "branch.csv"), slurp(dir / "b2" / "branch.csv"));
  EXPECT_EQ(slurp(dir / "b1" / "branch.svg"), slurp(dir / "b2" / "branch.svg"));
}

TEST(Executable, ExitCodesFromProcess) {
  const fs::path dir = scratch("exe");
  const auto cfg = write_config(dir, std::string(kLogisticBase) + "tau.values = 0.5\n");
  const std::string exe = RDTOOL_PATH;
  auto sh = [](const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(sh(exe + " bif-table --config " + cfg.string() + " --out " + (dir / "o").string() +
               " > /dev/null"),
            0);
  EXPECT_EQ(sh(exe + " bif-table > /dev/null 2>&1"), 2);
  EXPECT_EQ(sh(exe + " nonsense --config " + cfg.string() + " > /dev/null 2>&1"), 2);
  EXPECT_EQ(sh(exe + " simulate --config " + (dir / "missing.cfg").string() + " > /dev/null 2>&1"), 2);
}
