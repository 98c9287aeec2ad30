#include "doctest.h"

#include "oracles.hpp"

#include <limits>

using namespace qst;

TEST_CASE("closed forms match exact channels on random chains with fields") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> td(0.3, 8.0), pu(0.0, 1.0);
  for (int n = 1; n <= 4; ++n)
    for (int k = 0; k < 4; ++k) {
      const RMat K = oracle::random_chain(n, rng);
      const double t = td(rng);
      const CMat M = propagator(K, t).M;
      std::vector<double> p(n + 2);
      for (auto& x : p) x = pu(rng);
      CAPTURE(n);
      CAPTURE(t);
      CHECK(oracle::exact_double_swap(K, t) == doctest::Approx(f_double_swap(M)).epsilon(1e-10));
      CHECK(oracle::exact_single_swap(K, t, p) ==
            doctest::Approx(f_single_swap(M, oracle::parity(p))).epsilon(1e-10));
      CHECK(oracle::exact_remote_z(K, t) == doctest::Approx(f_remote_z(M)).epsilon(1e-10));
      for (auto d : {DecodeTarget::PairB, DecodeTarget::PairA}) {
        const auto r = oracle::exact_encoded(K, t, d);
        CHECK(r.fidelity == doctest::Approx(f_encoded(M, EncodedVariant::Weak, d)).epsilon(1e-10));
        CHECK(r.phase_corrected == doctest::Approx(f_encoded(M, EncodedVariant::Strong, d)).epsilon(1e-10));
      }
    }
}

TEST_CASE("batched evaluator agrees with the circuit path") {
  std::mt19937_64 rng(5);
  const RMat K = oracle::random_chain(3, rng);
  const EncodedEvaluator ev(3, K);
  const auto a = ev.at(2.7);
  const auto b = oracle::exact_encoded(K, 2.7, DecodeTarget::PairB);
  CHECK(a.fidelity == doctest::Approx(b.fidelity).epsilon(1e-12));
  CHECK((a.transfer - b.transfer).norm() < 1e-12);
}

TEST_CASE("fast encoded elements use the doubled-time relay") {
  const RMat K = [] {
    ChainSpec s;
    s.n = 6;
    s.g_left = s.g_right = 0.6;
    return build_single_particle_matrix(s);
  }();
  const SpectralPropagator P(K);
  const auto a = encoded_elements(P, 3.3), b = encoded_elements(P.at(3.3).M);
  CHECK(std::abs(a.relay - b.relay) < 1e-12);
  CHECK(std::abs(a.m0n - b.m0n) < 1e-12);
}

TEST_CASE("limiting propagators") {
  CMat I = CMat::Identity(4, 4);
  CHECK(f_double_swap(I) == doctest::Approx(1.0));
  CHECK(f_single_swap(I, 1.0) == doctest::Approx(0.5));
  CMat S = CMat::Zero(4, 4);
  S(0, 3) = S(3, 0) = S(1, 2) = S(2, 1) = 1;
  CHECK(f_single_swap(S, 1.0) == doctest::Approx(1.0));
  CHECK(f_single_swap(S, -1.0) == doctest::Approx(1.0 / 3));
  CHECK(f_encoded(S, EncodedVariant::Weak) == doctest::Approx(1.0));
  CHECK(f_remote_z(I) == doctest::Approx(1.0 / 3));  // identity channel against a Z target
}

TEST_CASE("error budget and optimal coupling") {
  ChainSpec s;
  s.n = 11;
  const auto m = eigenmodes(chain_couplings(s));
  const double inf = std::numeric_limits<double>::infinity();
  const auto c = optimal_coupling(m, 5, 11, 1e5);
  const auto b = error_budget(m, c, 11, 1e5);
  CHECK(b.total == doctest::Approx(b.off_resonant + b.decoherence));
  CHECK(b.per_mode[5] == 0.0);
  CHECK(error_budget(m, c, 11, inf).decoherence == 0.0);
  // the optimum beats nearby couplings
  for (double f : {0.7, 1.4}) {
    auto c2 = matched_choice(m, 5, c.g_left * f);
    CHECK(error_budget(m, c2, 11, 1e5).total >= b.total - 1e-12);
  }
  const auto best = best_mode_fidelity(m, 11, 1e5);
  CHECK(best.fidelity == doctest::Approx(1.0 - best.budget.total));
  CHECK(best.fidelity <= 1.0);
}

TEST_CASE("perturbative estimates agree at weak coupling") {
  const int n = 51;
  const double g = 0.005;
  const auto e = perturbative_infidelity(n, g);
  CHECK(e.in_regime);
  ChainSpec s;
  s.n = n;
  s.g_left = s.g_right = g;
  const SpectralPropagator P(build_single_particle_matrix(s));
  const double exact = 1.0 - std::norm(P.element(0, n + 1, e.t));
  CHECK(std::abs(e.transfer_infidelity - exact) / exact < 0.1);
  const double m00 = 1.0 - P.element(0, 0, e.t_double).real();
  CHECK(std::abs(e.one_minus_m00 - m00) / m00 < 0.1);
  CHECK_FALSE(perturbative_infidelity(n, 0.3).in_regime);
}
