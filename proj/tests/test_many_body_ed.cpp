#include "doctest.h"

#include "oracles.hpp"
#include "qst/errors.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

using namespace qst;

TEST_CASE("sectors and the one-excitation block") {
  std::mt19937_64 rng(3);
  const RMat K = oracle::random_chain(3, rng);
  const auto H = build_many_body(K, 5);
  const int binom[] = {1, 5, 10, 10, 5, 1};
  for (int w = 0; w <= 5; ++w) CHECK(H.dim(w) == binom[w]);
  // basis of weight one is 1, 2, 4, ... so the block is K itself
  CHECK((H.sectors[1].block - K).norm() < 1e-14);
}

TEST_CASE("many-body spectrum is a sum of single-particle energies") {
  std::mt19937_64 rng(11);
  const RMat K = oracle::random_chain(4, rng);
  const int n = 6;
  const RVec e = eigenmodes(K).energies;
  std::vector<double> sums;
  for (int mask = 0; mask < (1 << n); ++mask) {
    double s = 0;
    for (int k = 0; k < n; ++k)
      if (mask >> k & 1) s += e(k);
    sums.push_back(s);
  }
  std::sort(sums.begin(), sums.end());
  const RVec mb = many_body_spectrum(diagonalize(build_many_body(K, n)));
  REQUIRE(mb.size() == 64);
  for (int i = 0; i < 64; ++i) CHECK(mb(i) == doctest::Approx(sums[i]).epsilon(1e-10));
}

TEST_CASE("exact unitary restricted to one excitation is the propagator") {
  std::mt19937_64 rng(8);
  const RMat K = oracle::random_chain(2, rng);
  const auto U = exact_unitary(build_many_body(K, 4), 1.7);
  CHECK((U.blocks[1] - propagator(K, 1.7).M).norm() < 1e-12);
  for (const auto& b : U.blocks) CHECK((b * b.adjoint() - CMat::Identity(b.rows(), b.cols())).norm() < 1e-12);
}

TEST_CASE("circuit steps") {
  Circuit c{2, {CnotStep{0, 1, true}}};
  CMat psi = CMat::Identity(4, 4);
  apply_circuit(c, psi);
  // control down (bit 0 clear) flips the target
  CHECK(std::abs(psi(2, 0) - 1.0) < 1e-15);
  CHECK(std::abs(psi(1, 1) - 1.0) < 1e-15);
  Circuit p{1, {PauliStep{0, 'y'}}};
  CMat v = CMat::Identity(2, 2);
  apply_circuit(p, v);
  CHECK(std::abs(v(1, 0) - cplx(0, -1)) < 1e-15);
  CHECK(std::abs(v(0, 1) - cplx(0, 1)) < 1e-15);
}

TEST_CASE("ensembles and transfer-matrix fidelities") {
  const auto r = product_ensemble(3, 1, {0.2, 0.9, 0.5});
  CHECK(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) == doctest::Approx(1.0));
  for (auto x : r.configs) CHECK((x & 2u) == 0);
  const PauliTransfer I = 2 * PauliTransfer::Identity();
  CHECK(fidelity_from_transfer(I, Eigen::Matrix2cd::Identity()) == doctest::Approx(1.0));
  Eigen::Matrix2cd Z;
  Z << 1, 0, 0, -1;
  CHECK(fidelity_from_transfer(I, Z) == doctest::Approx(1.0 / 3));
  // a z rotation is undone by the phase correction
  PauliTransfer R = PauliTransfer::Zero();
  R(0, 0) = R(1, 1) = 2 * std::cos(0.4);
  R(1, 0) = 2 * std::sin(0.4);
  R(0, 1) = -R(1, 0);
  R(2, 2) = 2;
  CHECK(phase_corrected_fidelity(R) == doctest::Approx(1.0));
}

TEST_CASE("size caps") {
  CHECK_THROWS_AS(build_many_body(RMat::Zero(6, 6), 6, 5), ResourceError);
  CHECK(many_body_memory_bytes(14) > many_body_memory_bytes(10));
}

TEST_CASE("perfect two-site chain transfers the encoded qubit") {
  ChainSpec s;
  s.n = 2;
  s.pattern = Engineered{};
  const RMat K = build_single_particle_matrix(s);
  const auto r = oracle::exact_encoded(K, std::numbers::pi, DecodeTarget::PairB);
  CHECK(r.phase_corrected == doctest::Approx(1.0).epsilon(1e-10));
}
