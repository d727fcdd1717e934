#pragma once

// Monte-Carlo experiment runners. Every replicate owns the random stream
// derived from (seed, replicate, cell); replicates run on a worker pool and
// results are collected by index, so output does not depend on --threads.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "bbs/experiments/config.hpp"
#include "bbs/experiments/csv.hpp"
#include "bbs/experiments/parallel.hpp"
#include "bbs/experiments/stats.hpp"
#include "bbs/loss.hpp"
#include "bbs/numerics.hpp"
#include "bbs/optimize.hpp"
#include "bbs/sampling.hpp"

namespace bbs::experiments {

struct ReplicateRow {
  double theta_star = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t replicate = 0;
  double theta_hat = 0.0;
  double loss_at_hat = 0.0;
  std::size_t evals = 0;
  bool converged = false;
  double wall_time = 0.0;  // seconds; written to a separate timing file
};

struct CellSummary {
  double theta_star = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t replicates = 0;
  Summary stats;
};

struct CurvePoint {
  double theta_star = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  std::size_t replicate = 0;
  double theta = 0.0;
  double loss = 0.0;
};

struct LimitCurvePoint {
  double theta_star = 0.0;
  double theta = 0.0;
  double limit_loss = 0.0;
};

struct RunResult {
  std::vector<ReplicateRow> rows;
  std::vector<CellSummary> cells;
  std::vector<CurvePoint> curves;
  std::vector<LimitCurvePoint> limit_curves;
};

struct Cell {
  std::size_t star_index = 0;
  double theta_star = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;

  /// Stream key: depends on the cell's values, not on its position in the
  /// sweep, so adding a cell leaves the others' streams alone.
  std::uint64_t key() const {
    return mix64(mix64(mix64(std::bit_cast<std::uint64_t>(theta_star)) ^ static_cast<std::uint64_t>(M)) ^
                 static_cast<std::uint64_t>(N));
  }
};

inline std::vector<Cell> enumerate_cells(const ExperimentConfig& c) {
  std::vector<Cell> out;
  for (std::size_t s = 0; s < c.theta_star.size(); ++s) {
    for (std::size_t m : c.M_list) {
      for (std::size_t n : c.N_list) out.push_back(Cell{s, c.theta_star[s], m, n});
    }
  }
  return out;
}

namespace detail {

struct ReplicateOutput {
  ReplicateRow row;
  std::vector<double> curve;
};

template <class Model>
ReplicateOutput run_replicate(const Model& model, const Cell& cell, std::size_t rep, const SeedSpec& seed,
                              const MinimizeOptions& opts, const std::vector<double>* curve_grid) {
  const auto t0 = std::chrono::steady_clock::now();
  RandomStream rng = seed.stream(rep, cell.key());
  const Dataset paired = generate_dataset(model, cell.M, cell.N, rng);
  const Dataset data = break_batches(paired, rng);
  auto objective = [&](double t) { return pseudo_loss(model, ParamPoint{t}, data).value; };

  ReplicateOutput out;
  if (curve_grid != nullptr) {
    out.curve.reserve(curve_grid->size());
    for (double t : *curve_grid) out.curve.push_back(objective(t));
  }
  const MinimizeResult r = minimize_scalar(objective, model.domain(), opts);
  out.row = ReplicateRow{cell.theta_star, cell.M, cell.N, rep, r.arg[0], r.value, r.evals, r.converged, 0.0};
  out.row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline RunResult run_cells(const ExperimentConfig& config, const std::vector<Cell>& cells, std::size_t threads,
                           bool with_curves) {
  std::vector<AnyModel> models;
  for (double t : config.theta_star) models.push_back(make_model(config.model, t));
  for (const auto& m : models) {
    if (model_domain(m).dim() != 1) throw Error(ErrorCode::ConfigError, "experiments need a scalar parameter");
  }
  const std::vector<double>* grid = nullptr;
  if (with_curves) {
    if (!config.theta_grid) throw Error(ErrorCode::ConfigError, "loss curves need theta_grid");
    grid = &config.theta_grid->points;
  }

  const std::size_t reps = config.replicates;
  std::vector<ReplicateOutput> outputs(cells.size() * reps);
  parallel_for(outputs.size(), threads, [&](std::size_t task) {
    const Cell& cell = cells[task / reps];
    const std::size_t rep = task % reps;
    outputs[task] = std::visit(
        [&](const auto& model) { return run_replicate(model, cell, rep, config.seed, config.optimizer, grid); },
        models[cell.star_index]);
  });

  RunResult result;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<double> estimates;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& o = outputs[c * reps + r];
      result.rows.push_back(o.row);
      estimates.push_back(o.row.theta_hat);
      for (std::size_t g = 0; g < o.curve.size(); ++g) {
        result.curves.push_back(CurvePoint{cells[c].theta_star, cells[c].M, cells[c].N, r, (*grid)[g], o.curve[g]});
      }
    }
    result.cells.push_back(
        CellSummary{cells[c].theta_star, cells[c].M, cells[c].N, reps, summarize(estimates, cells[c].theta_star)});
  }
  if (with_curves) {
    for (std::size_t s = 0; s < models.size(); ++s) {
      for (double t : *grid) {
        const double v = std::visit([&](const auto& m) { return limit_loss(m, ParamPoint{t}); }, models[s]);
        result.limit_curves.push_back(LimitCurvePoint{config.theta_star[s], t, v});
      }
    }
  }
  return result;
}

}  // namespace detail

/// One (M, N) cell: the first entries of theta_star, M_list and N_list.
inline RunResult run_simulate(const ExperimentConfig& config, std::size_t threads) {
  const Cell cell{0, config.theta_star.front(), config.M_list.front(), config.N_list.front()};
  return detail::run_cells(config, {cell}, threads, false);
}

/// Pseudo-loss curves on theta_grid for every replicate of every cell, the
/// estimate from each replicate, and the limit-loss curve on the same grid.
inline RunResult run_loss_curves(const ExperimentConfig& config, std::size_t threads) {
  return detail::run_cells(config, enumerate_cells(config), threads, true);
}

/// Replicate estimates and their coefficient of variation for every
/// (theta*, M, N) cell.
inline RunResult run_cv_sweep(const ExperimentConfig& config, std::size_t threads) {
  RunResult r = detail::run_cells(config, enumerate_cells(config), threads, false);
  for (const auto& c : r.cells) {
    if (!c.stats.cv) {
      throw Error(ErrorCode::DegenerateCV, "mean estimate is zero for M=" + std::to_string(c.M) +
                                               ", N=" + std::to_string(c.N));
    }
  }
  return r;
}

// ---- limit convergence ----------------------------------------------------

struct LimitRow {
  double theta = 0.0;
  std::size_t M = 0;
  double expected_loss = 0.0;
  double limit_loss = 0.0;
  double abs_error = 0.0;
};

struct LimitSlope {
  double theta = 0.0;
  double slope = 0.0;
};

struct LimitTable {
  std::vector<LimitRow> rows;
  std::vector<LimitSlope> slopes;
};

inline const std::vector<std::size_t> kDefaultLimitM{2, 4, 8, 16, 32, 64, 128, 256};
inline const std::vector<double> kDefaultLimitTheta{-1.0, -0.4, 0.2, 0.8, 1.2};

/// |E f_M(theta) - limit(theta)| for each theta and M, with the least-squares
/// slope of log error against log M per theta.
inline LimitTable limit_convergence(const DiscreteTabularModel& model, const std::vector<double>& thetas,
                                    const std::vector<std::size_t>& ms) {
  LimitTable t;
  for (double th : thetas) {
    const ParamPoint p{th};
    const double lim = limit_loss(model, p);
    std::vector<double> lx, ly;
    for (std::size_t m : ms) {
      const double e = expected_loss_exact(model, p, m);
      const double err = std::abs(e - lim);
      t.rows.push_back(LimitRow{th, m, e, lim, err});
      if (err > 0.0) {
        lx.push_back(std::log(static_cast<double>(m)));
        ly.push_back(std::log(err));
      }
    }
    t.slopes.push_back(LimitSlope{th, lx.size() >= 2 ? numerics::ols_slope(lx, ly) : std::nan("")});
  }
  return t;
}

inline LimitTable run_limit_convergence(const ExperimentConfig& config) {
  if (config.model.kind != "discrete") throw Error(ErrorCode::ConfigError, "limit convergence needs a discrete model");
  const AnyModel m = make_model(config.model, config.theta_star.front());
  const auto thetas = config.theta_grid ? config.theta_grid->points : kDefaultLimitTheta;
  return limit_convergence(std::get<DiscreteTabularModel>(m), thetas, config.M_list);
}

// ---- CSV output -----------------------------------------------------------

inline void write_rows_csv(const std::vector<ReplicateRow>& rows, const std::filesystem::path& path) {
  CsvWriter w({"theta_star", "M", "N", "replicate", "theta_hat", "loss_at_hat", "evals", "converged"});
  for (const auto& r : rows) {
    w.field(r.theta_star).field(std::uint64_t{r.M}).field(std::uint64_t{r.N}).field(std::uint64_t{r.replicate});
    w.field(r.theta_hat).field(r.loss_at_hat).field(std::uint64_t{r.evals}).field(r.converged);
    w.end_row();
  }
  w.save(path);
}

/// Wall times differ run to run, so they live outside the CSV outputs.
inline void write_timing(const std::vector<ReplicateRow>& rows, const std::filesystem::path& path) {
  CsvWriter w({"theta_star", "M", "N", "replicate", "wall_time"});
  for (const auto& r : rows) {
    w.field(r.theta_star).field(std::uint64_t{r.M}).field(std::uint64_t{r.N}).field(std::uint64_t{r.replicate});
    w.field(r.wall_time);
    w.end_row();
  }
  w.save(path);
}

inline void write_summary_csv(const std::vector<CellSummary>& cells, const std::filesystem::path& path) {
  CsvWriter w({"theta_star", "M", "N", "replicates", "mean", "sd", "cv", "median_abs_err", "iqr"});
  for (const auto& c : cells) {
    w.field(c.theta_star).field(std::uint64_t{c.M}).field(std::uint64_t{c.N}).field(std::uint64_t{c.replicates});
    w.field(c.stats.mean).field(c.stats.sd);
    if (c.stats.cv) {
      w.field(*c.stats.cv);
    } else {
      w.empty_field();
    }
    w.field(c.stats.median_abs_err).field(c.stats.iqr);
    w.end_row();
  }
  w.save(path);
}

inline void write_curves_csv(const RunResult& r, const std::filesystem::path& dir) {
  CsvWriter w({"theta_star", "M", "N", "replicate", "theta", "loss"});
  for (const auto& p : r.curves) {
    w.field(p.theta_star).field(std::uint64_t{p.M}).field(std::uint64_t{p.N}).field(std::uint64_t{p.replicate});
    w.field(p.theta).field(p.loss);
    w.end_row();
  }
  w.save(dir / "loss_curves.csv");
  CsvWriter l({"theta_star", "theta", "limit_loss"});
  for (const auto& p : r.limit_curves) {
    l.field(p.theta_star).field(p.theta).field(p.limit_loss);
    l.end_row();
  }
  l.save(dir / "limit_curve.csv");
}

/// Writes <base>.csv, <base>_summary.csv and <base>_timing.txt.
inline void write_run(const RunResult& r, const std::filesystem::path& dir, const std::string& base) {
  write_rows_csv(r.rows, dir / (base + ".csv"));
  write_summary_csv(r.cells, dir / (base + "_summary.csv"));
  write_timing(r.rows, dir / (base + "_timing.txt"));
  if (!r.curves.empty()) write_curves_csv(r, dir);
}

inline void write_limit_table(const LimitTable& t, const std::filesystem::path& dir) {
  CsvWriter w({"theta", "M", "expected_loss", "limit_loss", "abs_error"});
  for (const auto& r : t.rows) {
    w.field(r.theta).field(std::uint64_t{r.M}).field(r.expected_loss).field(r.limit_loss).field(r.abs_error);
    w.end_row();
  }
  w.save(dir / "limit_convergence.csv");
  CsvWriter s({"theta", "slope"});
  for (const auto& r : t.slopes) {
    s.field(r.theta).field(r.slope);
    s.end_row();
  }
  s.save(dir / "limit_slopes.csv");
}

}  // namespace bbs::experiments
