#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "crvpinn/checks.hpp"
#include "crvpinn/io.hpp"

namespace {

using namespace crvpinn;

void print_record(const HistoryRecord& rec) {
  std::printf("iter %8ld  loss %.6e  sqrt %.6e", rec.iteration, rec.loss, rec.sqrt_loss);
  if (rec.h1_error) std::printf("  h1_error %.6e", *rec.h1_error);
  std::printf("  [%.1fs]\n", rec.wall_time_s);
  std::fflush(stdout);
}

int run_train(const std::string& config_path, bool overwrite) {
  TrainConfig config = load_config(config_path);
  if (overwrite) config.overwrite = true;
  const auto dir = prepare_run_dir(config);
  write_metadata(config, dir);
  std::printf("training %s / %s on a %dx%dx%d lattice, %ld iterations -> %s\n",
              to_string(config.mode), config.scenario.c_str(), config.nx + 1, config.ny + 1,
              config.nt + 1, config.iterations, dir.string().c_str());

  const TrainResult result = train(config, print_record);

  export_history(result.history, dir / "history.csv");
  save_checkpoint(result.mlp, dir / "checkpoint.txt");
  const Problem* shift_of = result.shifted ? &result.problem : nullptr;
  export_snapshots(result.mlp, result.grid, config.effective_snapshot_indices(), dir, shift_of);

  // Initial-plane magnitude relative to the overall field scale; the
  // initial condition is enforced softly, so this is worth a glance.
  const GridField<double> u = solution_field(result.mlp, result.grid, shift_of);
  double max_initial = 0.0;
  for (int i = 0; i <= result.grid.nx; ++i)
    for (int j = 0; j <= result.grid.ny; ++j)
      max_initial = std::max(max_initial, std::abs(u(i, j, 0)));
  std::printf("field scale: max|u| %.3e overall, %.3e on the initial plane\n",
              u.values.cwiseAbs().maxCoeff(), max_initial);

  write_metadata(config, dir, result.history.back().wall_time_s);

  std::printf("final loss %.6e after %ld iterations (%.1fs)\n", result.history.back().loss,
              config.iterations, result.history.back().wall_time_s);
  return 0;
}

int run_verify() {
  const auto results = checks::verify_suite();
  bool all_pass = true;
  std::printf("%-24s %-6s %s\n", "check", "status", "detail");
  for (const auto& r : results) {
    std::printf("%-24s %-6s %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int run_gram_dump(const std::string& config_path) {
  const TrainConfig config = load_config(config_path);
  const Grid grid = config.grid();
  const Matrix<double> dense = dense_gram(build_gram(grid));
  std::printf("# gram matrix, %ld x %ld, grid %dx%dx%d points, scale 1/(hx*hy*ht) = %.12g\n",
              static_cast<long>(dense.rows()), static_cast<long>(dense.cols()), grid.nx + 1,
              grid.ny + 1, grid.nt + 1, 1.0 / grid.cell_measure());
  for (Eigen::Index r = 0; r < dense.rows(); ++r) {
    for (Eigen::Index c = 0; c < dense.cols(); ++c) {
      std::printf(c + 1 < dense.cols() ? "%.12g " : "%.12g\n", dense(r, c));
    }
  }
  return 0;
}

int run_export(const std::string& checkpoint_path, const std::string& config_path,
               bool overwrite) {
  TrainConfig config = load_config(config_path);
  if (overwrite) config.overwrite = true;
  const Mlp<double> mlp = load_checkpoint(checkpoint_path);
  const Grid grid = config.grid();
  const Problem problem = problem_by_name(config.scenario);
  const bool shifted = config.mode == LossMode::Crvpinn;
  const auto dir = prepare_run_dir(config);
  const auto written = export_snapshots(mlp, grid, config.effective_snapshot_indices(), dir,
                                        shifted ? &problem : nullptr);
  std::printf("wrote %zu snapshots to %s\n", written.size(), dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time collocation solver for advection-diffusion transport\n"
               "with a Gram-preconditioned residual loss"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path;
  bool overwrite = false;

  auto* cmd_train = app.add_subcommand("train", "train a network and write run artifacts");
  cmd_train->add_option("config", config_path, "JSON config file")->required();
  cmd_train->add_flag("--overwrite", overwrite, "write into an existing output directory");

  auto* cmd_verify =
      app.add_subcommand("verify", "run the operator/solver invariant suite");

  auto* cmd_gram = app.add_subcommand("gram-dump", "print the dense Gram matrix of a small grid");
  cmd_gram->add_option("config", config_path, "JSON config file")->required();

  auto* cmd_export = app.add_subcommand("export", "write field snapshots from a checkpoint");
  cmd_export->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  cmd_export->add_option("config", config_path, "JSON config file")->required();
  cmd_export->add_flag("--overwrite", overwrite, "write into an existing output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_train->parsed()) return run_train(config_path, overwrite);
    if (cmd_verify->parsed()) return run_verify();
    if (cmd_gram->parsed()) return run_gram_dump(config_path);
    if (cmd_export->parsed()) return run_export(checkpoint_path, config_path, overwrite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
