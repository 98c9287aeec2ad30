// qst_cli <experiment> [--config file.json] [--seed N] [--out dir] [--realizations N] [--threads N]
//
// Exit codes: 0 success, 2 config error, 3 resource error, 1 anything else.
// Lattice files for mirror-verify: one line per row, 'R' register, '.' impurity, '#' hole.

#include "qst/errors.hpp"
#include "qst/experiments.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw qst::InputError("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenmode-mediated state transfer experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, lattice_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations, threads;
  app.add_option("--config", config_path, "JSON config (see schema/config.schema.json)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory (default out/<experiment>)");
  app.add_option("--realizations", realizations, "disorder realizations per cell")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--lattice", lattice_path, "lattice text file for mirror-verify")->check(CLI::ExistingFile);

  for (auto e : {qst::Experiment::DisorderSweep, qst::Experiment::StrongScan, qst::Experiment::DipolarEd,
                 qst::Experiment::Perturbative, qst::Experiment::Bosonic, qst::Experiment::MirrorVerify})
    app.add_subcommand(qst::experiment_name(e));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto name = app.get_subcommands().front()->get_name();
    qst::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = qst::parse_config(slurp(config_path));
    cfg.experiment = qst::experiment_from_name(name);
    if (seed) cfg.seed = *seed;
    if (realizations) cfg.realizations = *realizations;
    if (threads) cfg.threads = *threads;
    if (!lattice_path.empty()) cfg.lattice = slurp(lattice_path);
    qst::validate(cfg);

    const auto result = qst::run_experiment(cfg);
    const auto dir = out_dir.empty() ? std::filesystem::path("out") / name : std::filesystem::path(out_dir);
    const auto files = qst::write_outputs(result, cfg, dir);
    std::cout << name << " finished in " << result.wall_seconds << " s (config " << qst::config_hash(cfg) << ")\n";
    for (const auto& [k, v] : result.summary) std::cout << "  " << k << " = " << v << "\n";
    for (const auto& f : files) std::cout << "  wrote " << f.string() << "\n";
    return 0;
  } catch (const qst::InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qst::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
