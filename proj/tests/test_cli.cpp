#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adalang/cli.hpp"
#include "adalang/errors.hpp"

#ifndef ADALANG_CONFIG_DIR
#error "ADALANG_CONFIG_DIR must point at the preset directory"
#endif

using namespace adalang;
using namespace adalang::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("adalang_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "adalang");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

const char* kSmall = R"([experiment]
type = sample
schemes = EM_IP

[potential]
id = harmonic
k = 1

[monitor]
id = constant
value = 1

[sampler]
h = 0.1
t_final = 1
n_traj = 1
seed = 3
)";

}  // namespace

TEST_CASE("presets parse and round-trip") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(ADALANG_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    ++n;
    INFO(e.path());
    const auto cfg = load_config(e.path().string());
    const auto text = serialize_config(cfg);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  CHECK(n >= 5);
}

TEST_CASE("unknown keys and sections are rejected with their names") {
  auto message = [](const std::string& text) {
    try {
      (void)parse_config(text);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(std::string(kSmall) + "bogus = 1\n").find("sampler.bogus") != std::string::npos);
  CHECK(message(std::string(kSmall) + "[extra]\nx = 1\n").find("extra") != std::string::npos);
  CHECK(message("[potential]\nid = harmonic\na = 2\n").find("potential.a") != std::string::npos);
  CHECK(message("[sampler]\nh = -1\n").find("sampler.h") != std::string::npos);
  CHECK(message("[experiment]\nschemes = RK4\n").find("experiment.schemes") != std::string::npos);
  CHECK(message("[sampler]\nn_traj = many\n").find("sampler.n_traj") != std::string::npos);
}

TEST_CASE("sample writes a deterministic report") {
  const auto dir = scratch("sample");
  const auto cfg = write(dir / "c.ini", kSmall);
  REQUIRE(run({"sample", "--config", cfg.string(), "--out", (dir / "a").string()}) == kOk);
  REQUIRE(run({"sample", "--config", cfg.string(), "--out", (dir / "b").string()}) == kOk);
  const auto report = lines(dir / "a" / "report.csv");
  REQUIRE(report.size() == 2);
  CHECK(report[0].find("wall_steps") != std::string::npos);
  CHECK(report[1].find(",10,") != std::string::npos);
  CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));
  CHECK(fs::exists(dir / "a" / "histogram.csv"));
  CHECK(lines(dir / "a" / "histogram.csv")[0] == "bin_left,bin_right,count,ref_density");
}

TEST_CASE("output directory precedence") {
  const auto dir = scratch("outdir");
  const auto cfg = write(dir / "c.ini", std::string(kSmall) + "\n[run]\nbins = 50\n");
  ::setenv("ADALANG_OUT_DIR", (dir / "env").string().c_str(), 1);
  REQUIRE(run({"sample", "--config", cfg.string()}) == kOk);
  CHECK(fs::exists(dir / "env" / "report.csv"));
  REQUIRE(run({"sample", "--config", cfg.string(), "--out", (dir / "flag").string()}) == kOk);
  CHECK(fs::exists(dir / "flag" / "report.csv"));
  ::unsetenv("ADALANG_OUT_DIR");
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  CHECK(run({"sample", "--config", (dir / "missing.ini").string()}) == kValidation);
  CHECK(run({"sample"}) == kValidation);
  CHECK(run({"nonsense"}) == kValidation);
  const auto bad = write(dir / "bad.ini", std::string(kSmall) + "bogus = 1\n");
  CHECK(run({"sample", "--config", bad.string(), "--out", dir.string()}) == kValidation);

  // One h value cannot give a slope.
  const auto one = write(dir / "one.ini", R"([experiment]
type = sweep
schemes = EM
h_list = 0.1

[potential]
id = harmonic

[monitor]
id = constant
value = 1

[sampler]
beta_inv = 1
t_final = 1
n_traj = 100

[run]
support_lo = -20
support_hi = 20
)");
  CHECK(run({"sweep", "--config", one.string(), "--out", (dir / "sweep").string()}) == kNoFit);
  CHECK(fs::exists(dir / "sweep" / "convergence.csv"));
  CHECK(lines(dir / "sweep" / "slopes.csv").size() > 1);

  // Quadrature support that cuts off mass.
  auto text = slurp(one);
  text.replace(text.find("h_list = 0.1"), 12, "h_list = 0.2, 0.1");
  text.replace(text.find("support_lo = -20"), 16, "support_lo = -1");
  const auto narrow = write(dir / "narrow.ini", text);
  CHECK(run({"sweep", "--config", narrow.string(), "--out", (dir / "narrow").string()}) == kNumerical);
}

TEST_CASE("bayes-gen") {
  const auto dir = scratch("bayes");
  REQUIRE(run({"bayes-gen", "--n", "10", "--mu-true", "1.7", "--seed", "12", "--out", (dir / "a").string()}) == kOk);
  REQUIRE(run({"bayes-gen", "--n", "10", "--mu-true", "1.7", "--seed", "12", "--out", (dir / "b").string()}) == kOk);
  const auto rows = lines(dir / "a" / "data.csv");
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == "y");
  double mean = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) mean += std::stod(rows[i]);
  mean /= 10.0;
  CHECK(std::abs(mean - 1.7) < 3.0 / std::sqrt(10.0));
  CHECK(slurp(dir / "a" / "data.csv") == slurp(dir / "b" / "data.csv"));

  REQUIRE(run({"bayes-gen", "--n", "1", "--mu-true", "0", "--out", (dir / "c").string()}) == kOk);
  const auto single = lines(dir / "c" / "data.csv");
  REQUIRE(single.size() == 2);
  CHECK(std::isfinite(std::stod(single[1])));

  CHECK(run({"bayes-gen", "--n", "0", "--out", (dir / "d").string()}) == kValidation);
}

TEST_CASE("audit command") {
  const auto dir = scratch("audit");
  const auto cfg = write(dir / "c.ini", R"([experiment]
type = audit

[potential]
id = modified_harmonic
a = 10

[monitor]
id = omega
m = 0.001
M = 2

[sampler]
beta_inv = 0.1

[run]
audit_lo = -2
audit_hi = 3
n_grid = 101
spacing = 0.002
)");
  const int code = run({"audit", "--config", cfg.string(), "--out", dir.string()});
  CHECK((code == kOk || code == kCriterion));
  const auto rows = lines(dir / "audit.csv");
  REQUIRE(rows.size() > 5);
  CHECK(rows[0] == "criterion,estimate,bound,pass");
  CHECK(fs::exists(dir / "adjoint.csv"));
}
