#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crvpinn/train.hpp"

namespace crvpinn {

inline constexpr const char* kVersion = "0.1.0";

/// Parses the JSON run configuration. Missing keys take the documented
/// defaults; unknown keys and out-of-range values are errors.
TrainConfig load_config(const std::filesystem::path& path);
TrainConfig parse_config(const std::string& json_text);
std::string config_to_json(const TrainConfig& config);

/// Writes `iteration,loss,sqrt_loss,h1_error,wall_time_s` with numbers in
/// full double precision; h1_error is left empty when absent.
void export_history(const std::vector<HistoryRecord>& records, const std::filesystem::path& path);
std::vector<HistoryRecord> parse_history(const std::filesystem::path& path);

/// One x,y,u table per requested time index (and a legacy-VTK
/// structured-points twin for external viewers). In shifted mode the
/// exported field is the full solution, network plus shift. Returns the
/// written CSV paths.
std::vector<std::filesystem::path> export_snapshots(const Mlp<double>& mlp, const Grid& grid,
                                                    const std::vector<int>& time_indices,
                                                    const std::filesystem::path& dir,
                                                    const Problem* shift_of = nullptr,
                                                    bool write_vtk = true);

/// Text checkpoint: one header line with layer sizes and seed, then the
/// flat parameter vector (layer by layer, weights row-major, then bias).
void save_checkpoint(const Mlp<double>& mlp, const std::filesystem::path& path);
Mlp<double> load_checkpoint(const std::filesystem::path& path);

/// Prepares a run directory. An existing directory is refused unless the
/// overwrite flag is set; the metadata record is written before any other
/// artifact.
std::filesystem::path prepare_run_dir(const TrainConfig& config);
void write_metadata(const TrainConfig& config, const std::filesystem::path& dir,
                    double wall_time_s = -1.0);

/// The full solution field on the lattice: network output, plus the
/// initial-condition shift when the network was trained on the shifted
/// problem.
GridField<double> solution_field(const Mlp<double>& mlp, const Grid& grid,
                                 const Problem* shift_of = nullptr);

}  // namespace crvpinn
