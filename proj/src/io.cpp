#include "crvpinn/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crvpinn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

}  // namespace

TrainConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  require(j.is_object(), "config: top level must be a JSON object");

  static const std::vector<std::string> known = {
      "mode",       "nx",         "ny",    "nt",        "T",
      "scenario",   "layer_sizes", "seed",  "iterations", "learning_rate",
      "beta1",      "beta2",      "eps",   "log_every", "cg_tol",
      "snapshot_indices", "output_dir", "overwrite"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
  }

  TrainConfig c;
  try {
    if (j.contains("mode")) {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode == "pinn") {
        c.mode = LossMode::Pinn;
      } else if (mode == "crvpinn") {
        c.mode = LossMode::Crvpinn;
      } else {
        throw std::invalid_argument("config: mode must be 'pinn' or 'crvpinn'");
      }
    }
    if (j.contains("nx")) c.nx = j.at("nx").get<int>();
    if (j.contains("ny")) c.ny = j.at("ny").get<int>();
    if (j.contains("nt")) c.nt = j.at("nt").get<int>();
    if (j.contains("T")) c.T = j.at("T").get<double>();
    if (j.contains("scenario")) c.scenario = j.at("scenario").get<std::string>();
    if (j.contains("layer_sizes")) c.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<long>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
    if (j.contains("log_every")) c.log_every = j.at("log_every").get<long>();
    if (j.contains("cg_tol")) c.cg_tol = j.at("cg_tol").get<double>();
    if (j.contains("snapshot_indices")) {
      c.snapshot_indices = j.at("snapshot_indices").get<std::vector<int>>();
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("overwrite")) c.overwrite = j.at("overwrite").get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value type: ") + e.what());
  }

  problem_by_name(c.scenario);  // rejects unknown scenarios
  c.validate();
  return c;
}

TrainConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const TrainConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["nx"] = c.nx;
  j["ny"] = c.ny;
  j["nt"] = c.nt;
  j["T"] = c.T;
  j["scenario"] = c.scenario;
  j["layer_sizes"] = c.layer_sizes;
  j["seed"] = c.seed;
  j["iterations"] = c.iterations;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["log_every"] = c.log_every;
  j["cg_tol"] = c.cg_tol;
  j["snapshot_indices"] = c.effective_snapshot_indices();
  j["output_dir"] = c.output_dir;
  j["overwrite"] = c.overwrite;
  return j.dump(2);
}

void export_history(const std::vector<HistoryRecord>& records, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "iteration,loss,sqrt_loss,h1_error,wall_time_s\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << format_full(r.loss) << ',' << format_full(r.sqrt_loss) << ',';
    if (r.h1_error) out << format_full(*r.h1_error);
    out << ',' << format_full(r.wall_time_s) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing history: " + path.string());
}

std::vector<HistoryRecord> parse_history(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open history: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("history file is empty: " + path.string());
  if (line != "iteration,loss,sqrt_loss,h1_error,wall_time_s") {
    throw std::runtime_error("unexpected history header in " + path.string());
  }
  std::vector<HistoryRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos = 0; pos <= line.size(); ++pos) {
      if (pos == line.size() || line[pos] == ',') {
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
      }
    }
    if (cells.size() != 5) throw std::runtime_error("bad history row: " + line);
    HistoryRecord r;
    r.iteration = std::stol(cells[0]);
    r.loss = std::stod(cells[1]);
    r.sqrt_loss = std::stod(cells[2]);
    if (!cells[3].empty()) r.h1_error = std::stod(cells[3]);
    r.wall_time_s = std::stod(cells[4]);
    records.push_back(r);
  }
  return records;
}

GridField<double> solution_field(const Mlp<double>& mlp, const Grid& grid,
                                 const Problem* shift_of) {
  GridField<double> u(grid, forward(mlp, lattice_points<double>(grid)));
  if (shift_of) {
    Eigen::Index p = 0;
    for (int i = 0; i <= grid.nx; ++i)
      for (int j = 0; j <= grid.ny; ++j)
        for (int k = 0; k <= grid.nt; ++k, ++p) {
          u.values[p] += shift_value(*shift_of, grid.x(i), grid.y(j), grid.t(k), grid.T);
        }
  }
  return u;
}

namespace {

void write_snapshot_vtk(const GridField<double>& u, int k, const fs::path& path) {
  const Grid& g = u.grid;
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "field snapshot at t=" << format_full(g.t(k)) << "\n";
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.nx + 1 << ' ' << g.ny + 1 << " 1\n";
  out << "ORIGIN 0 0 0\n";
  out << "SPACING " << g.hx << ' ' << g.hy << " 1\n";
  out << "POINT_DATA " << (g.nx + 1) * (g.ny + 1) << "\n";
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  // VTK structured points run x fastest.
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) out << format_full(u(i, j, k)) << '\n';
}

}  // namespace

std::vector<fs::path> export_snapshots(const Mlp<double>& mlp, const Grid& grid,
                                       const std::vector<int>& time_indices, const fs::path& dir,
                                       const Problem* shift_of, bool write_vtk) {
  for (int k : time_indices) {
    if (k < 0 || k > grid.nt) {
      throw std::out_of_range("export_snapshots: time index " + std::to_string(k) +
                              " outside [0," + std::to_string(grid.nt) + "]");
    }
  }
  fs::create_directories(dir);
  const GridField<double> u = solution_field(mlp, grid, shift_of);

  std::vector<int> unique = time_indices;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::vector<fs::path> written;
  for (int k : unique) {
    char name[48];
    std::snprintf(name, sizeof(name), "snapshot_k%04d.csv", k);
    const fs::path csv = dir / name;
    std::ofstream out = open_out(csv);
    out << "x,y,u\n";
    for (int i = 0; i <= grid.nx; ++i)
      for (int j = 0; j <= grid.ny; ++j) {
        out << format_full(grid.x(i)) << ',' << format_full(grid.y(j)) << ','
            << format_full(u(i, j, k)) << '\n';
      }
    written.push_back(csv);
    if (write_vtk) {
      std::snprintf(name, sizeof(name), "snapshot_k%04d.vtk", k);
      write_snapshot_vtk(u, k, dir / name);
    }
  }
  return written;
}

void save_checkpoint(const Mlp<double>& mlp, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "layers";
  for (int s : mlp.layer_sizes) out << ' ' << s;
  out << " seed " << mlp.seed << '\n';
  const Vector<double> flat = flatten_params(mlp);
  for (Eigen::Index p = 0; p < flat.size(); ++p) out << format_full(flat[p]) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Mlp<double> load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("checkpoint is empty: " + path.string());
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  if (tag != "layers") throw std::runtime_error("bad checkpoint header: " + header);
  std::vector<int> sizes;
  std::string tok;
  std::uint64_t seed = 0;
  while (hs >> tok) {
    if (tok == "seed") {
      hs >> seed;
      break;
    }
    sizes.push_back(std::stoi(tok));
  }
  Mlp<double> mlp = init_mlp(sizes, seed);
  Vector<double> flat(param_count(sizes));
  for (Eigen::Index p = 0; p < flat.size(); ++p) {
    double v;
    if (!(in >> v)) throw std::runtime_error("checkpoint truncated: " + path.string());
    flat[p] = v;
  }
  unflatten_params(mlp, flat);
  return mlp;
}

std::filesystem::path prepare_run_dir(const TrainConfig& config) {
  const fs::path dir(config.output_dir);
  if (fs::exists(dir)) {
    if (!config.overwrite) {
      throw std::runtime_error("output directory exists: " + dir.string() +
                               " (set \"overwrite\": true or pass --overwrite)");
    }
  } else {
    fs::create_directories(dir);
  }
  return dir;
}

void write_metadata(const TrainConfig& config, const fs::path& dir, double wall_time_s) {
  json j;
  j["config"] = json::parse(config_to_json(config));
  j["version"] = kVersion;
  if (wall_time_s >= 0.0) j["wall_time_s"] = wall_time_s;
  std::ofstream out = open_out(dir / "metadata.json");
  out << j.dump(2) << '\n';
}

}  // namespace crvpinn
