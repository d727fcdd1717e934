// Command-line front end for the experiment harness.
//
// Exit codes: 0 success, 1 usage or config error, 2 oracle-check failure,
// 3 numeric failure at run time.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bbs/dataset_io.hpp"
#include "bbs/experiments.hpp"

namespace fs = std::filesystem;
using namespace bbs;
using namespace bbs::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitOracle = 2;
constexpr int kExitNumeric = 3;

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t threads = 0;
};

ExperimentConfig load(const GlobalFlags& g) {
  if (g.config_path.empty()) throw Error(ErrorCode::ConfigError, "--config is required for this command");
  ExperimentConfig c = load_config(g.config_path);
  if (g.seed) c.seed = SeedSpec{*g.seed};
  if (!g.out_dir.empty()) c.outputs.directory = g.out_dir;
  return c;
}

void maybe_render(const ExperimentConfig& c) {
  if (c.outputs.wants("svg")) render_svg(c.outputs.directory);
}

int cmd_simulate(const GlobalFlags& g) {
  const ExperimentConfig c = load(g);
  const RunResult r = run_simulate(c, g.threads);
  const fs::path dir = c.outputs.directory;
  write_run(r, dir, "simulate");
  // The first replicate's broken dataset, in the plain-text dataset format.
  RandomStream rng = c.seed.stream(0, Cell{0, c.theta_star.front(), c.M_list.front(), c.N_list.front()}.key());
  const AnyModel model = make_model(c.model, c.theta_star.front());
  const Dataset data = std::visit(
      [&](const auto& m) {
        const Dataset paired = generate_dataset(m, c.M_list.front(), c.N_list.front(), rng);
        return break_batches(paired, rng);
      },
      model);
  std::ofstream f(dir / "simulate_dataset.txt", std::ios::binary);
  write_dataset(f, data);
  maybe_render(c);
  const auto& s = r.cells.front();
  std::cout << "M=" << s.M << " N=" << s.N << " mean=" << format_double(s.stats.mean)
            << " sd=" << format_double(s.stats.sd) << '\n';
  return kExitOk;
}

int cmd_loss_curve(const GlobalFlags& g) {
  const ExperimentConfig c = load(g);
  const RunResult r = run_loss_curves(c, g.threads);
  write_run(r, c.outputs.directory, "loss_curve_estimates");
  maybe_render(c);
  std::cout << "wrote " << r.curves.size() << " curve points\n";
  return kExitOk;
}

int cmd_cv(const GlobalFlags& g) {
  const ExperimentConfig c = load(g);
  const RunResult r = run_cv_sweep(c, g.threads);
  write_run(r, c.outputs.directory, "cv");
  maybe_render(c);
  for (const auto& s : r.cells) {
    std::cout << "theta*=" << format_double(s.theta_star) << " M=" << s.M << " N=" << s.N
              << " cv=" << format_double(*s.stats.cv) << '\n';
  }
  return kExitOk;
}

int cmd_limit(const GlobalFlags& g) {
  const ExperimentConfig c = load(g);
  const LimitTable t = run_limit_convergence(c);
  write_limit_table(t, c.outputs.directory);
  for (const auto& s : t.slopes) std::cout << "theta=" << format_double(s.theta) << " slope=" << s.slope << '\n';
  return kExitOk;
}

int cmd_oracle(const GlobalFlags& g) {
  OracleOptions o;
  fs::path dir = "out";
  if (!g.config_path.empty()) {
    const ExperimentConfig c = load(g);
    o.seed = c.seed;
    dir = c.outputs.directory;
  } else {
    if (g.seed) o.seed = SeedSpec{*g.seed};
    if (!g.out_dir.empty()) dir = g.out_dir;
  }
  o.threads = g.threads;
  const OracleReport r = run_oracle_checks(o);
  write_oracle_report(r, dir);
  for (const auto& c : r.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " max_deviation=" << format_double(c.max_deviation)
              << " tolerance=" << format_double(c.tolerance) << '\n';
  }
  return r.all_passed() ? kExitOk : kExitOracle;
}

int cmd_render(const GlobalFlags& g) {
  fs::path dir = g.out_dir;
  if (dir.empty()) dir = g.config_path.empty() ? fs::path("out") : fs::path(load(g).outputs.directory);
  for (const auto& p : render_svg(dir)) std::cout << p.string() << '\n';
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::ParseError:
    case ErrorCode::MissingInput:
    case ErrorCode::InvalidDomain:
    case ErrorCode::ParamOutOfDomain:
    case ErrorCode::InvalidSize:
      return kExitUsage;
    default:
      return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broken-sample pseudo-likelihood experiments"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config_path, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Master seed, overrides the config");
  app.add_option("--out-dir", g.out_dir, "Output directory, overrides the config");
  app.add_option("--threads", g.threads, "Worker threads (0 = one per hardware thread)");

  auto* simulate = app.add_subcommand("simulate", "Estimate on one (M, N) cell");
  auto* loss_curve = app.add_subcommand("loss-curve", "Pseudo-loss curves and limit-loss overlay");
  auto* cv = app.add_subcommand("cv", "Coefficient-of-variation sweep");
  auto* limit = app.add_subcommand("limit-convergence", "Expected-loss convergence on a discrete model");
  auto* oracle = app.add_subcommand("oracle-check", "Cross-check exact and reference computations");
  auto* render = app.add_subcommand("render", "Draw SVG figures from the CSV outputs");
  // Global flags are also accepted after the subcommand name.
  for (auto* sub : {simulate, loss_curve, cv, limit, oracle, render}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(g);
    if (*loss_curve) return cmd_loss_curve(g);
    if (*cv) return cmd_cv(g);
    if (*limit) return cmd_limit(g);
    if (*oracle) return cmd_oracle(g);
    if (*render) return cmd_render(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
