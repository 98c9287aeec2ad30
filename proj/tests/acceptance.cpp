// One PASS/FAIL line per acceptance criterion, then a summary line.
// Exit status is nonzero only when a check throws; failing criteria are reported, not hidden.

#include "oracles.hpp"

#include "qst/chain_models.hpp"
#include "qst/experiments.hpp"
#include "qst/mirror_clifford.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

using namespace qst;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(5);
  s << v;
  return s.str();
}

// 1. closed forms against exact many-body channels
Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> gd(0.05, 1.2), pu(0.0, 1.0);
  double worst[4] = {0, 0, 0, 0};
  int draws = 0;
  for (int n = 1; n + 2 <= 8; ++n) {
    std::uniform_real_distribution<double> td(0.3, 3.0 * n + 6.0);
    for (int k = 0; k < 20; ++k, ++draws) {
      ChainSpec s;
      s.n = n;
      s.g_left = gd(rng);
      s.g_right = gd(rng);
      const RMat K = build_single_particle_matrix(s);
      const double t = td(rng);
      const CMat M = propagator(K, t).M;
      std::vector<double> p(n + 2);
      for (auto& x : p) x = pu(rng);
      worst[0] = std::max(worst[0], std::abs(oracle::exact_double_swap(K, t) - f_double_swap(M)));
      worst[1] = std::max(worst[1], std::abs(oracle::exact_single_swap(K, t, p) - f_single_swap(M, oracle::parity(p))));
      worst[3] = std::max(worst[3], std::abs(oracle::exact_remote_z(K, t) - f_remote_z(M)));
      if (n + 4 <= 8) {
        const auto r = oracle::exact_encoded(K, t, DecodeTarget::PairB);
        worst[2] = std::max({worst[2], std::abs(r.fidelity - f_encoded(M, EncodedVariant::Weak)),
                             std::abs(r.phase_corrected - f_encoded(M, EncodedVariant::Strong))});
      }
    }
  }
  const double w = std::max({worst[0], worst[1], worst[2], worst[3]});
  return {w < 1e-10, std::to_string(draws) + " draws; max |diff| DS " + num(worst[0]) + ", SS " + num(worst[1]) +
                         ", enc " + num(worst[2]) + ", Z " + num(worst[3])};
}

// 2. engineered couplings: perfect transfer at pi, identity at 2 pi
Outcome engineered_transfer() {
  double dev_pi = 0, dev_id = 0;
  for (int n : {4, 9, 20, 51}) {
    ChainSpec s;
    s.n = n;
    s.pattern = Engineered{};
    s.field = s.register_field = s.register_field_right = 1.5 * (n + 1);
    dev_pi = std::max(dev_pi, std::abs(std::abs(propagator(build_single_particle_matrix(s), std::numbers::pi).M(0, n + 1)) - 1.0));
    s.field = s.register_field = s.register_field_right = 0.5 * (n + 1);
    const CMat M = propagator(build_single_particle_matrix(s), 2 * std::numbers::pi).M;
    dev_id = std::max(dev_id, (M - CMat::Identity(n + 2, n + 2)).cwiseAbs().maxCoeff());
  }
  return {dev_pi < 1e-10 && dev_id < 1e-10,
          "N in {4,9,20,51}: max ||M_0,N+1| - 1| " + num(dev_pi) + ", max |M(2pi) - I| " + num(dev_id)};
}

// 3. strong-coupling scaling of the optimal end coupling
Outcome strong_scaling() {
  ExperimentConfig c;
  const auto r = run_strong_coupling_scan(c);
  const double b = r.summary.at("g_exponent"), f = r.summary.at("min_f_enc");
  const auto& t = r.tables.front();
  std::string low;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.num(i, "f_enc") <= 0.9) low += " N=" + t.text(i, "n") + ":" + num(t.num(i, "f_enc"));
  const bool exp_ok = std::abs(b + 1.0 / 6.0) <= 0.05;
  return {exp_ok && f > 0.9, "g_M ~ N^" + num(b) + " (r2 " + num(r.summary.at("g_fit_r2")) + ", " +
                                 (exp_ok ? "in" : "outside") + " -1/6 +- 0.05); min F_enc " + num(f) +
                                 (low.empty() ? "" : "; at or below 0.9:" + low)};
}

// 4. dipolar-family exact diagonalization
Outcome dipolar_ed() {
  ExperimentConfig c;
  const auto r = run_dipolar_ed(c);
  const double dip = r.summary.at("infidelity_dipolar_10"), nnn = r.summary.at("infidelity_nnn_10");
  const double diff = r.summary.at("nn_max_analytic_diff");
  return {std::abs(dip - 0.1) <= 0.05 && std::abs(nnn - 0.02) <= 0.02 && diff <= 1e-10,
          "10 spins: dipolar 1-F " + num(dip) + ", nnn 1-F " + num(nnn) + "; NN vs analytic " + num(diff) +
              "; " + num(r.wall_seconds) + " s with 12-spin points"};
}

// 5. perturbative estimates at N = 51
Outcome perturbative() {
  ExperimentConfig c;
  const auto r = run_perturbative_check(c);
  const double et = r.summary.at("max_transfer_rel_err_small_g"), em = r.summary.at("max_m00_rel_err_small_g");
  const double gb = r.summary.at("breakdown_g");
  const auto& t = r.tables.front();
  double past = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.num(i, "g") >= gb) past = std::max({past, t.num(i, "transfer_rel_err"), t.num(i, "m00_rel_err")});
  return {et <= 0.1 && em <= 0.1 && past > 0.5, "g <= 0.01: rel err transfer " + num(et) + ", 1-M00 " + num(em) +
                                                    "; past g = " + num(gb) + " rel err up to " + num(past)};
}

ExperimentConfig disorder_config() {
  ExperimentConfig c;
  c.n_list = {51};
  c.sigma_kappa = {0.0, 0.1, 0.3, 0.5};
  c.t1_ms = {5000.0};
  c.realizations = 200;
  return c;
}

// 6. disorder threshold
Outcome disorder_threshold(const RunResult& r) {
  const auto& g = r.tables.front();
  for (std::size_t i = 0; i < g.rows.size(); ++i)
    if (g.num(i, "sigma_kappa") == 0.5) {
      const double f = g.num(i, "mean_fidelity");
      return {f < 2.0 / 3.0, "N=51, sigma 0.5 kappa, T1 5 s, " + g.text(i, "realizations") +
                                 " realizations: mean best F " + num(f) + " +- " + num(g.num(i, "stderr")) +
                                 " (coupling std " + num(g.num(i, "coupling_std")) + " kappa)"};
    }
  return {false, "sigma 0.5 row missing"};
}

// 7. Majorana zero mode blocks register exchange
Outcome majorana_control() {
  ChainSpec s;
  s.kind = ModelKind::TFIM;
  s.n = 8;
  s.field = 0.3;
  s.g_left = s.g_right = 0.02;
  const auto zero = bdg_effective_swap_check(s, 0);
  s.field = 2.0;
  const auto para = bdg_effective_swap_check(s, 0);
  return {zero.exchange_amplitude < 1e-3, "N=8, B=0.3 kappa, g=0.02: mode energy " + num(zero.energy) +
                                              ", exchange " + num(zero.exchange_amplitude) +
                                              " (B=2 kappa control: " + num(para.exchange_amplitude) + ")"};
}

// 8. mirror, propagated swap and routing
Outcome mirror_architecture() {
  int bad = 0;
  double dense = 0;
  for (int n = 1; n <= 64; ++n) {
    std::vector<int> sites(n);
    for (int i = 0; i < n; ++i) sites[i] = i;
    const auto p = mirror_program(n);
    if (!check_mirror(p, sites).ok) ++bad;
    if (n <= 10) dense = std::max(dense, dense_unitary_check(p).max_deviation);
  }
  int bad_swap = 0;
  for (int k = 1; k < 16; ++k) {
    std::vector<int> target(16);
    for (int i = 0; i < 16; ++i) target[i] = i;
    std::swap(target[k - 1], target[k]);
    if (!check_site_map(clifford_apply(propagated_swap(k, 16)), target).ok) ++bad_swap;
  }
  ExperimentConfig c;
  c.mirror_n = {1};
  const auto r = run_mirror_verify(c);
  const auto& t = r.tables.front();
  bool routed = false;
  std::string route_detail = "no route row";
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.text(i, "construct") == "route") routed = t.text(i, "status") == "pass", route_detail = t.text(i, "detail");
  return {bad == 0 && dense < 1e-10 && bad_swap == 0 && routed,
          "mirror n<=64 failures " + std::to_string(bad) + ", dense n<=10 max dev " + num(dense) +
              ", swap failures on 16 sites " + std::to_string(bad_swap) + ", 8x8 route: " + route_detail};
}

// 9. bosonic swap and rescaled excess noise
Outcome bosonic() {
  ExperimentConfig c;
  const auto r = run_bosonic_demo(c);
  const double a = r.summary.at("swap_amplitude_re"), aa = r.summary.at("swap_amplitude_abs");
  const double lo = r.summary.at("rescaled_window_ratio_min"), hi = r.summary.at("rescaled_window_ratio_max");
  return {aa >= 0.999 && a < 0 && hi / lo <= 2.0,
          "amplitude a0 -> a_N+1 " + num(a) + "; rescaled excess noise spread " + num(hi / lo) +
              " (beat-averaged; at tau alone " +
              num(r.summary.at("rescaled_excess_ratio_max") / r.summary.at("rescaled_excess_ratio_min")) + ")"};
}

// 10. participation ratio
Outcome participation(const RunResult& r) {
  double dev = 0;
  for (int n : {11, 20, 51}) {
    ChainSpec s;
    s.n = n;
    const auto m = eigenmodes(chain_couplings(s));
    for (int k = 0; k < n; ++k) {
      if (2 * (k + 1) % (n + 1) == 0) continue;  // centre mode of odd chains is not generic
      dev = std::max(dev, std::abs(participation_ratio(m.vectors.col(k)) - 2.0 * (n + 1) / 3.0));
    }
  }
  const auto& p = r.tables[3];
  const auto& h = r.tables[2];
  bool falling = true;
  double prev = 1e300;
  std::string trend;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const double v = p.num(i, "mean_pr");
    falling = falling && v < prev;
    prev = v;
    trend += (i ? " -> " : "") + num(v);
  }
  // share of modes with N_PR < N/4 at the weakest and strongest disorder
  std::map<double, double> low;
  for (std::size_t i = 0; i < h.rows.size(); ++i)
    if (h.num(i, "bin_hi") <= 51.0 / 4) low[h.num(i, "sigma_kappa")] += h.num(i, "mean_count") / 51.0;
  const bool shifted = low[0.5] > 0.5 && low[0.5] > low[0.0];
  return {dev < 1e-8 && falling && shifted,
          "uniform max |N_PR - 2(N+1)/3| " + num(dev) + "; N=51 mean N_PR " + trend +
              "; share with N_PR < N/4: " + num(low[0.0]) + " -> " + num(low[0.5])};
}

}  // namespace

int main(int argc, char** argv) {
  // lines also go to a report file (ctest hides the output of passing tests)
  std::FILE* log = std::fopen(argc > 1 ? argv[1] : "acceptance_report.txt", "w");
  auto emit = [&](const std::string& line) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (log) std::fprintf(log, "%s\n", line.c_str()), std::fflush(log);
  };
  int passed = 0, total = 0;
  auto report = [&](int id, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = f();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++total;
    passed += o.pass;
    char t[32];
    std::snprintf(t, sizeof t, " [%.1f s]", s);
    emit("CRITERION " + std::to_string(id) + ": " + (o.pass ? "PASS  " : "FAIL  ") + o.detail + t);
  };
  try {
    report(1, oracle_equivalence);
    report(2, engineered_transfer);
    report(3, strong_scaling);
    report(4, dipolar_ed);
    report(5, perturbative);
    RunResult sweep;  // shared by criteria 6 and 10
    report(6, [&] {
      sweep = run_disorder_sweep(disorder_config());
      return disorder_threshold(sweep);
    });
    report(7, majorana_control);
    report(8, mirror_architecture);
    report(9, bosonic);
    report(10, [&] { return participation(sweep); });
  } catch (const std::exception& e) {
    emit(std::string("ERROR: ") + e.what());
    return 1;
  }
  emit("SUMMARY: " + std::to_string(passed) + "/" + std::to_string(total) + " criteria pass");
  if (log) std::fclose(log);
  return 0;
}
