#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qst {

enum class Experiment { DisorderSweep, StrongScan, DipolarEd, Perturbative, Bosonic, MirrorVerify };

std::string experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& s);  // InputError on unknown names

// All experiments share one config document; each reads the keys it needs.
// Energies in units of kappa, times in 1/kappa unless a unit is in the name.
struct ExperimentConfig {
  Experiment experiment = Experiment::DisorderSweep;

  // physical units: kappa is read as a plain rate, t[1/kappa] = t[s] * kappa_ref_khz * 1e3
  double kappa_ref_khz = 50.0;
  double d_nm = 10.0;

  std::uint64_t seed = 1;
  int realizations = 200;
  int threads = 1;

  // disorder sweep
  std::vector<int> n_list{11};
  std::vector<double> sigma_kappa{0.0, 0.1, 0.2, 0.3, 0.5};  // fractions of kappa
  std::vector<double> t1_ms{10.0, 200.0, 5000.0};
  double min_spacing_fraction = 0.2;
  double pr_bin_width = 2.0;

  // strong scan
  std::vector<int> strong_n{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  double g_min = 0.3, g_max = 1.2, g_step = 0.005;
  double t_step = 0.02;

  // dipolar ED
  std::vector<int> total_spins{6, 8, 10, 12};
  std::vector<std::string> models{"nn", "dipolar", "nnn"};
  int ed_g_points = 26;
  int ed_t_points = 80;
  double ed_g_lo = 0.3, ed_g_hi = 1.3;
  int ed_full_grid_max = 10;  // larger sizes search near the previous size's optimum

  // perturbative
  int pert_n = 51;
  std::vector<double> g_list{0.002, 0.003, 0.005, 0.007, 0.01, 0.015, 0.02, 0.03, 0.05,
                             0.07,  0.1,   0.14,  0.2,   0.3};

  // bosonic
  int bos_n = 9;
  double bos_g = 0.01;
  std::vector<double> kt_over_omega{1.0, 10.0, 100.0};
  double bos_n0 = 1.0;

  // mirror verification
  std::vector<int> mirror_n{1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  int dense_max = 10;
  int swap_length = 16;
  std::string lattice;  // text grid; empty = generated
  int lattice_rows = 8, lattice_cols = 8;
  double hole_fraction = 0.1;

  bool operator==(const ExperimentConfig&) const = default;
};

// JSON text <-> config. Unknown keys and type mismatches raise InputError.
ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);  // FNV-1a over the canonical serialization

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::pair<std::string, std::string>> meta;

  void add(std::vector<Cell> row);
  int column(const std::string& c) const;
  double num(std::size_t r, const std::string& c) const;
  std::string text(std::size_t r, const std::string& c) const;
};

struct RunResult {
  std::vector<ResultTable> tables;
  std::map<std::string, double> summary;
  double wall_seconds = 0.0;
};

RunResult run_disorder_sweep(const ExperimentConfig& c);
RunResult run_strong_coupling_scan(const ExperimentConfig& c);
RunResult run_dipolar_ed(const ExperimentConfig& c);
RunResult run_perturbative_check(const ExperimentConfig& c);
RunResult run_bosonic_demo(const ExperimentConfig& c);
RunResult run_mirror_verify(const ExperimentConfig& c);
RunResult run_experiment(const ExperimentConfig& c);

std::string to_csv(const ResultTable& t);
// Writes <name>.csv per table and summary.json; returns the files written.
std::vector<std::filesystem::path> write_outputs(const RunResult& r, const ExperimentConfig& c,
                                                 const std::filesystem::path& dir);

// Least-squares fit of log y = a + b log x.
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
};
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

// Strong-coupling optimum of the phase-corrected encoded fidelity for one N.
struct StrongPoint {
  int n = 0;
  double g = 0.0;
  double t = 0.0;
  double f_enc = 0.0;
  bool converged = true;
};
StrongPoint optimize_strong(int n, const ExperimentConfig& c);

// Dipolar-family encoded fidelity optimum at one size.
struct EdPoint {
  std::string model;
  int total_spins = 0;
  double g = 0.0, t = 0.0;
  double fidelity = 0.0;  // phase corrected
  double analytic = std::numeric_limits<double>::quiet_NaN();  // NN only
  double seconds = 0.0;
};
// With `near`, scans g +- 0.1 and t in [near.t, near.t + 2 * added chain spins] instead of the full grid.
EdPoint optimize_encoded_ed(const std::string& model, int total_spins, const ExperimentConfig& c,
                            const EdPoint* near = nullptr);

// Generated routing lattice: one register per row at the centre column, holes elsewhere.
std::string generate_lattice(int rows, int cols, double hole_fraction, std::uint64_t seed);

}  // namespace qst
