#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crvpinn/adam.hpp"
#include "crvpinn/loss.hpp"

namespace crvpinn {

enum class LossMode { Pinn, Crvpinn };

inline const char* to_string(LossMode m) { return m == LossMode::Pinn ? "pinn" : "crvpinn"; }

struct TrainConfig {
  LossMode mode = LossMode::Crvpinn;
  int nx = 32, ny = 32, nt = 32;
  double T = 1.0;
  std::string scenario = "snowmobile";
  std::vector<int> layer_sizes{3, 64, 64, 64, 1};
  std::uint64_t seed = 0;
  long iterations = 50000;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long log_every = 100;
  double cg_tol = 1e-10;
  std::vector<int> snapshot_indices;  // empty: 12 evenly spaced time indices
  std::string output_dir = "run_out";
  bool overwrite = false;

  void validate() const {
    if (nx < 1 || ny < 1 || nt < 1) throw std::invalid_argument("config: grid sizes must be >= 1");
    if (!(T > 0.0)) throw std::invalid_argument("config: T must be positive");
    if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
    if (log_every < 1) throw std::invalid_argument("config: log_every must be >= 1");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("config: cg_tol must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw std::invalid_argument("config: betas must lie in [0,1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be positive");
    if (layer_sizes.size() < 2 || layer_sizes.front() != 3 || layer_sizes.back() != 1) {
      throw std::invalid_argument("config: layer_sizes must run from 3 inputs to 1 output");
    }
    for (int s : layer_sizes) {
      if (s < 1) throw std::invalid_argument("config: layer sizes must be positive");
    }
    for (int k : snapshot_indices) {
      if (k < 0 || k > nt) throw std::invalid_argument("config: snapshot index out of range");
    }
  }

  Grid grid() const { return Grid(nx, ny, nt, T); }

  std::vector<int> effective_snapshot_indices() const {
    if (!snapshot_indices.empty()) return snapshot_indices;
    std::vector<int> out;
    for (int m = 0; m < 12; ++m) {
      const int k = static_cast<int>(std::lround(static_cast<double>(m) * nt / 11.0));
      if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
  }
};

struct HistoryRecord {
  long iteration = 0;
  double loss = 0.0;
  double sqrt_loss = 0.0;
  std::optional<double> h1_error;
  double wall_time_s = 0.0;
};

struct TrainResult {
  Mlp<double> mlp;
  std::vector<HistoryRecord> history;
  Grid grid;
  Problem problem;          // the scenario as configured
  Problem trained_problem;  // what the network actually solves (shifted for crvpinn)
  bool shifted = false;
};

/// Discrete H1 seminorm of u minus the exact field sampled on the grid.
inline double h1_error(const GridField<double>& u, const SpaceTimeFn& exact, const Grid& grid) {
  GridField<double> diff(grid);
  Eigen::Index p = 0;
  for (int i = 0; i <= grid.nx; ++i)
    for (int j = 0; j <= grid.ny; ++j)
      for (int k = 0; k <= grid.nt; ++k, ++p) {
        diff.values[p] = u.values[p] - exact(grid.x(i), grid.y(j), grid.t(k));
      }
  return norm_grad_h(diff);
}

using RecordCallback = std::function<void(const HistoryRecord&)>;

/// Runs Adam on the selected loss. Deterministic for a fixed config: the
/// network init, the collocation points and the solver schedule depend
/// only on (seed, config).
inline TrainResult train(const TrainConfig& config, const RecordCallback& on_record = {}) {
  config.validate();
  const Grid grid = config.grid();
  const Problem base = problem_by_name(config.scenario);

  TrainResult result;
  result.grid = grid;
  result.problem = base;
  result.shifted = config.mode == LossMode::Crvpinn;
  result.trained_problem = result.shifted ? make_shifted(base, grid.T).shifted : base;
  const Problem& problem = result.trained_problem;

  Mlp<double> mlp = init_mlp(config.layer_sizes, config.seed);
  Vector<double> theta = flatten_params(mlp);
  AdamState<double> adam(theta.size());

  const Matrix<double> points = lattice_points<double>(grid);

  // Loss-mode specific state.
  ResidualSystem system;
  GramOperator<double> gram{grid};
  GridField<double> riesz(grid);
  CollocationSets sets;
  if (config.mode == LossMode::Crvpinn) {
    system = make_residual_system(grid, problem);
  } else {
    sets = lattice_collocation(grid);
  }

  const bool track_error = problem.exact.has_value();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  auto eval_loss = [&](double& loss_out) {
    if (config.mode == LossMode::Crvpinn) {
      const CrvpinnLoss l = crvpinn_loss(system, gram, mlp, points, config.cg_tol, &riesz);
      loss_out = l.value;
      return crvpinn_loss_grad(mlp, points, l);
    }
    const PinnLoss l = pinn_loss(problem, mlp, sets);
    loss_out = l.value;
    return pinn_loss_grad(mlp, sets, l);
  };

  auto record = [&](long iteration, double loss) {
    HistoryRecord rec;
    rec.iteration = iteration;
    rec.loss = loss;
    rec.sqrt_loss = std::sqrt(std::max(loss, 0.0));
    if (track_error) {
      const GridField<double> u(grid, forward(mlp, points));
      rec.h1_error = h1_error(u, problem.exact->value, grid);
    }
    rec.wall_time_s = elapsed();
    result.history.push_back(rec);
    if (on_record) on_record(rec);
  };

  auto check_finite = [](double loss, long iteration) {
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "train: loss became non-finite at iteration " << iteration;
      throw SolverError(msg.str());
    }
  };

  double loss = 0.0;
  {
    // Initial-state record; evaluating through the same path keeps the
    // warm-start schedule deterministic.
    ParamGrads<double> unused = eval_loss(loss);
    (void)unused;
    check_finite(loss, 0);
    record(0, loss);
  }

  for (long it = 1; it <= config.iterations; ++it) {
    ParamGrads<double> grads;
    try {
      grads = eval_loss(loss);
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << e.what() << " (training iteration " << it << ")";
      throw SolverError(msg.str());
    }
    check_finite(loss, it);
    const Vector<double> g = flatten_grads(grads);
    adam_step(theta, g, adam, config.learning_rate, config.beta1, config.beta2, config.eps);
    unflatten_params(mlp, theta);
    if (it % config.log_every == 0 || it == config.iterations) {
      double loss_now = 0.0;
      try {
        eval_loss(loss_now);
      } catch (const SolverError& e) {
        std::ostringstream msg;
        msg << e.what() << " (training iteration " << it << ")";
        throw SolverError(msg.str());
      }
      check_finite(loss_now, it);
      record(it, loss_now);
    }
  }

  result.mlp = std::move(mlp);
  return result;
}

/// Empirical loss/error equivalence report: Pearson correlation between
/// sqrt(loss) and the discrete H1 error, and the extremes of their ratio,
/// over the records past the first 10% of the run.
struct RobustnessReport {
  double pearson = 0.0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  int usable = 0;
};

inline RobustnessReport robustness_monitor(const std::vector<HistoryRecord>& history) {
  if (history.empty()) throw std::invalid_argument("robustness_monitor: empty history");
  const long last = history.back().iteration;
  const double warmup = 0.1 * static_cast<double>(last);

  std::vector<double> s, e;
  for (const auto& rec : history) {
    if (!rec.h1_error) continue;
    if (static_cast<double>(rec.iteration) <= warmup) continue;
    s.push_back(rec.sqrt_loss);
    e.push_back(*rec.h1_error);
  }
  if (s.size() < 3) {
    throw std::invalid_argument("robustness_monitor: need at least 3 post-warmup records with error data");
  }

  const int n = static_cast<int>(s.size());
  double ms = 0.0, me = 0.0;
  for (int i = 0; i < n; ++i) {
    ms += s[i];
    me += e[i];
  }
  ms /= n;
  me /= n;
  double cov = 0.0, vs = 0.0, ve = 0.0;
  for (int i = 0; i < n; ++i) {
    cov += (s[i] - ms) * (e[i] - me);
    vs += (s[i] - ms) * (s[i] - ms);
    ve += (e[i] - me) * (e[i] - me);
  }

  RobustnessReport rep;
  rep.usable = n;
  // A flat series carries no association; report zero rather than 0/0.
  // Flatness is judged relative to the mean so that roundoff in the mean
  // of a literally constant series does not masquerade as variance.
  const double sn = std::sqrt(static_cast<double>(n));
  const bool flat_s = std::sqrt(vs) <= 1e-12 * std::abs(ms) * sn;
  const bool flat_e = std::sqrt(ve) <= 1e-12 * std::abs(me) * sn;
  rep.pearson = (!flat_s && !flat_e && vs > 0.0 && ve > 0.0) ? cov / std::sqrt(vs * ve) : 0.0;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ratio = e[i] / s[i];
    rep.ratio_min = std::min(rep.ratio_min, ratio);
    rep.ratio_max = std::max(rep.ratio_max, ratio);
  }
  return rep;
}

}  // namespace crvpinn
