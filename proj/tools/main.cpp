#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "relustab/cli/analysis.hpp"
#include "relustab/moments/moment_lmi.hpp"

using namespace relustab;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

void emit(const std::string& path, const Json& j) { write_text(path, dump_json(j) + "\n"); }

int run_simulate(const ReluSystem& sys, const std::vector<double>& x0v, double t_end, double h,
                 const std::string& out, const std::vector<double>& grid, const std::string& grid_out) {
  if (static_cast<int>(x0v.size()) != sys.n()) throw InputError("--x0 needs " + std::to_string(sys.n()) + " values");
  if (!grid.empty()) {
    if (grid.size() != 5) throw InputError("--field-grid takes xmin xmax ymin ymax steps");
    write_text(grid_out, field_grid_csv(sys, grid[0], grid[1], grid[2], grid[3], static_cast<int>(grid[4])));
  }
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x0v.data(), x0v.size());
  Trajectory traj;
  int code = 0;
  try {
    traj = simulate(sys, x0, t_end, h);
  } catch (const SimulationOverflow& e) {
    traj = e.trajectory;
    code = kExitSolverFailure;
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  write_text(out, trajectory_csv(traj));
  const double final_norm = traj.states.back().norm();
  const bool divergent = traj.divergent || (x0.norm() > 0 && final_norm > x0.norm());
  std::cerr << "final_norm " << final_norm << "\ndivergent " << (divergent ? "true" : "false") << "\n";
  if (code) std::cerr << "integration overflow at t = " << traj.times.back() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify stability or instability of ReLU feedback systems"};
  app.require_subcommand(1);

  std::string system_file, output, format = "json";
  AnalyzeOptions opts;
  bool no_oracle = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("system", system_file, "system JSON file")->required();
    sub->add_option("--output,-o", output, "output path (default stdout)");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json"}));
  };

  CLI::App* analyze = app.add_subcommand("analyze", "primal, dual/hierarchy and oracle cross-check");
  common(analyze);
  analyze->add_option("--max-order", opts.max_order, "highest hierarchy order")->check(CLI::PositiveNumber);
  analyze->add_option("--eps", opts.eps, "primal margin")->check(CLI::PositiveNumber);
  analyze->add_option("--rank-tol", opts.rank_tol, "relative rank tolerance")->check(CLI::PositiveNumber);
  analyze->add_flag("--no-oracle", no_oracle, "skip the enumeration oracle");
  analyze->add_option("--seed", opts.seed, "seed echoed into the report");
  analyze->add_option("--m-cap", opts.m_cap, "oracle enumeration cap on m");

  std::vector<double> x0, grid;
  double t_end = 5.0, h = 1e-3;
  std::string grid_out = "field.csv";
  CLI::App* sim = app.add_subcommand("simulate", "RK4 trajectory as CSV");
  common(sim);
  sim->add_option("--x0", x0, "initial state")->required();
  sim->add_option("--t-end", t_end, "final time");
  sim->add_option("--dt", h, "RK4 step size");
  sim->add_option("--field-grid", grid, "xmin xmax ymin ymax steps")->expected(5);
  sim->add_option("--field-output", grid_out, "vector field CSV path");

  int m_cap = kDefaultMCap;
  CLI::App* oracle = app.add_subcommand("oracle", "enumerate activation patterns");
  common(oracle);
  oracle->add_option("--m-cap", m_cap, "enumeration cap on m");

  int moment_order = 2;
  double moment_rank_tol = 1e-5;
  CLI::App* moment = app.add_subcommand("moment", "moment relaxation with objective λ");
  common(moment);
  moment->add_option("--max-order", moment_order, "highest relaxation order")->check(CLI::PositiveNumber);
  moment->add_option("--rank-tol", moment_rank_tol, "relative rank tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInputError;
  }

  std::optional<ReluSystem> loaded;
  try {
    loaded = load_system(system_file);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  }

  const ReluSystem& sys = *loaded;
  try {
    if (*analyze) {
      opts.run_oracle = !no_oracle;
      const AnalysisReport r = run_analyze(sys, opts);
      emit(output, report_to_json(r));
      std::cerr << "verdict " << to_string(r.verdict) << "\n";
      for (const auto& a : r.anomalies) std::cerr << "anomaly: " << a << "\n";
      return r.exit_code;
    }
    if (*sim) return run_simulate(sys, x0, t_end, h, output, grid, grid_out);
    if (*oracle) {
      const OracleResult res = enumerate_rays(sys, kOracleTol, m_cap);
      emit(output, oracle_report_json(res));
      return oracle_exit_code(res);
    }
    if (*moment) {
      emit(output, moment_to_json(run_moments(sys, moment_order, moment_rank_tol)));
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const EnumerationCapExceeded& e) {
    std::cerr << e.what() << "\n";
    return kExitCapExceeded;
  } catch (const BasisTooLarge& e) {
    std::cerr << e.what() << "\n";
    return kExitCapExceeded;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return kExitInputError;
}
