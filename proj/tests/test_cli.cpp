#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmflow/runner.hpp"

using namespace mmflow;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"(
# single-phase smoke configuration
grid.dim = 1
grid.nx = 4
phases.count = 1
jko.tau = 0.1
jko.horizon = 0.2
jko.exact_oracle = 1
)";

RunConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config_stream(in, "<test>");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parse_config: minimal single-phase config is valid") {
  const RunConfig cfg = parse_text(kMinimalConfig);
  CHECK(cfg.grid.nx == 4);
  CHECK(cfg.phase_count == 1);
  CHECK(cfg.tau == doctest::Approx(0.1));
  CHECK(cfg.exact_oracle);
}

TEST_CASE("parse_config: missing tau is an error") {
  const std::string text = "grid.nx = 4\nphases.count = 1\njko.horizon = 1.0\n";
  CHECK_THROWS_WITH_AS(parse_text(text), doctest::Contains("jko.tau"), std::runtime_error);
}

TEST_CASE("parse_config: unknown keys rejected") {
  const std::string text = std::string(kMinimalConfig) + "misc.unknown = 1\n";
  CHECK_THROWS_WITH_AS(parse_text(text), doctest::Contains("unknown key"), std::runtime_error);
}

TEST_CASE("parse_config: duplicate keys rejected") {
  const std::string text = std::string(kMinimalConfig) + "grid.nx = 5\n";
  CHECK_THROWS_AS(parse_text(text), std::runtime_error);
}

TEST_CASE("init csv: fraction sums off by 1e-3 are refused with the discrepancy listed") {
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_init";
  fs::create_directories(dir);
  const std::string init = (dir / "init.csv").string();
  {
    std::ofstream out(init);
    for (int c = 0; c < 4; ++c) {
      out << c << "," << 0.5 << "," << 0.501 << "\n";  // sums to 1.001
    }
  }
  RunConfig cfg = parse_text(kMinimalConfig);
  cfg.phase_count = 2;
  cfg.init_preset = "csv";
  cfg.init_csv = init;
  CHECK_THROWS_WITH_AS(build_setup(cfg), doctest::Contains("renormalization limit"),
                       std::runtime_error);
}

TEST_CASE("run_config: single-phase run writes schema-stable files and passes checks") {
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_run";
  fs::remove_all(dir);
  RunConfig cfg = parse_text(kMinimalConfig);
  cfg.output_dir = (dir / "out").string();
  const int status = run_config(cfg);
  CHECK(status == 0);
  CHECK(fs::exists(dir / "out" / "state_0.csv"));
  CHECK(fs::exists(dir / "out" / "state_1.csv"));
  CHECK(fs::exists(dir / "out" / "state_2.csv"));
  CHECK(fs::exists(dir / "out" / "diagnostics.csv"));
  CHECK(fs::exists(dir / "out" / "summary.csv"));

  const std::string state = read_file((dir / "out" / "state_1.csv").string());
  CHECK(state.rfind("# schema=1", 0) == 0);
  CHECK(state.find("cell,x,s_0,p_0") != std::string::npos);

  // Determinism: re-running byte-reproduces the outputs.
  const std::string before = read_file((dir / "out" / "state_2.csv").string());
  const std::string diag_before = read_file((dir / "out" / "diagnostics.csv").string());
  RunConfig cfg2 = cfg;
  CHECK(run_config(cfg2) == 0);
  CHECK(read_file((dir / "out" / "state_2.csv").string()) == before);
  CHECK(read_file((dir / "out" / "diagnostics.csv").string()) == diag_before);
}

TEST_CASE("run_config: zero horizon writes only the initial state") {
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_run0";
  fs::remove_all(dir);
  RunConfig cfg = parse_text(kMinimalConfig);
  cfg.horizon = 0.0;
  cfg.output_dir = (dir / "out").string();
  CHECK(run_config(cfg) == 0);
  CHECK(fs::exists(dir / "out" / "state_0.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "state_1.csv"));
}

TEST_CASE("run_config: two-phase gravity preset populates diagnostics") {
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_gravity";
  fs::remove_all(dir);
  std::string text = R"(
grid.dim = 1
grid.nx = 8
phases.count = 2
medium.preset = gravity_column
medium.rho = 1.0,2.5
medium.mu = 1.0,1.0
capillary.a = 0.5
init.preset = heavy_top
init.heavy_phase = 1
init.top_fraction = 0.8
jko.tau = 0.05
jko.horizon = 0.15
jko.exact_oracle = 1
)";
  RunConfig cfg = parse_text(text);
  cfg.output_dir = (dir / "out").string();
  CHECK(run_config(cfg) == 0);
  const std::string diag = read_file((dir / "out" / "diagnostics.csv").string());
  CHECK(diag.find("h_omega_1") != std::string::npos);
  // three steps -> three diagnostic rows after the two header lines
  int lines = 0;
  for (char ch : diag) lines += ch == '\n';
  CHECK(lines == 2 + 3);

  const std::string summary = read_file((dir / "out" / "summary.csv").string());
  CHECK(summary.find("energy_decay") != std::string::npos);
  CHECK(summary.find("mass_conservation") != std::string::npos);
}

TEST_CASE("bathtub csv round trip") {
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_bathtub";
  fs::create_directories(dir);
  const std::string path = (dir / "instance.csv").string();
  {
    std::ofstream out(path);
    out << "# masses=1,1\n";
    out << "cell,omega,F_0,F_1\n";
    out << "0,1,0,1\n";
    out << "1,1,0,3\n";
  }
  const BathtubInstance inst = io::read_bathtub_csv(path);
  CHECK(inst.cell_count() == 2);
  CHECK(inst.phase_count() == 2);
  CHECK(inst.F(1, 1) == doctest::Approx(3.0));
  const BathtubSolution sol = solve_bathtub(inst);
  CHECK(sol.converged);
  CHECK(sol.primal_value == doctest::Approx(1.0).epsilon(1e-9));
  const std::string out_path = (dir / "solution.csv").string();
  io::write_bathtub_solution_csv(out_path, sol);
  const std::string text = read_file(out_path);
  CHECK(text.find("# primal=1") != std::string::npos);
}

TEST_CASE("state csv round trip preserves masses and pressures") {
  auto grid = build_grid({.dim = 1, .nx = 4});
  PhaseField s;
  s.cell_volume = grid.cell_volume;
  s.mass.resize(2, 4);
  s.mass << 0.1, 0.2, 0.3, 0.4, 0.05, 0.1, 0.15, 0.2;
  Eigen::MatrixXd p(2, 4), pi(1, 4);
  p.setRandom();
  pi.setRandom();
  const fs::path dir = fs::temp_directory_path() / "mmflow_test_state";
  fs::create_directories(dir);
  const std::string path = (dir / "state.csv").string();
  io::write_state_csv(path, grid, s, p, pi);
  const io::StateFile st = io::read_state_csv(path, grid, 2);
  CHECK((st.s.mass - s.mass).cwiseAbs().maxCoeff() == 0.0);
  CHECK((st.p - p).cwiseAbs().maxCoeff() == 0.0);
  CHECK((st.pi - pi).cwiseAbs().maxCoeff() == 0.0);
}
