#pragma once
// Exact many-body channels for the closed-form fidelities (shared by unit and acceptance tests).

#include "qst/fidelity_analytic.hpp"
#include "qst/many_body_ed.hpp"
#include "qst/philox.hpp"

#include <memory>
#include <random>

namespace qst::oracle {

// Random nearest-neighbour XX chain with registers and site fields; (N+2)x(N+2).
inline RMat random_chain(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> bond(0.4, 1.4), reg(0.2, 1.0), field(-0.5, 0.5);
  const int m = n + 2;
  RMat K = RMat::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) {
    const bool edge = i == 0 || i + 1 == m - 1;
    K(i, i + 1) = K(i + 1, i) = edge ? reg(rng) : bond(rng);
  }
  for (int i = 0; i < m; ++i) K(i, i) = field(rng);
  return K;
}

inline EvolveStep evolve(const RMat& K, double t, std::vector<int> qubits) {
  const auto H = build_many_body(couplings_from_single_particle(K), static_cast<int>(K.rows()));
  return EvolveStep{std::move(qubits), std::make_shared<const SectorUnitaries>(exact_unitary(H, t)), "U"};
}

inline std::vector<int> iota(int n) {
  std::vector<int> q(n);
  for (int i = 0; i < n; ++i) q[i] = i;
  return q;
}

// Input and output on register 0; chain and far register maximally mixed.
inline double exact_double_swap(const RMat& K, double t) {
  const int n = static_cast<int>(K.rows());
  Circuit c{n, {evolve(K, t, iota(n))}};
  ChannelSetup s;
  s.input = s.output = 0;
  s.rest = product_ensemble(n, 0, std::vector<double>(n, 0.5));
  return channel_fidelity(c, s).fidelity;
}

// Input on N+1, output on 0; sites 0..N in a product diagonal state with the given up-probabilities.
inline double exact_single_swap(const RMat& K, double t, const std::vector<double>& p_up) {
  const int n = static_cast<int>(K.rows());
  Circuit c{n, {evolve(K, t, iota(n))}};
  ChannelSetup s;
  s.input = n - 1;
  s.output = 0;
  s.rest = product_ensemble(n, n - 1, p_up);
  return channel_fidelity(c, s).fidelity;
}

// Parity of sites 0..N: prod <-sigma^z> = prod (1 - 2 p_up).
inline double parity(const std::vector<double>& p_up) {
  double p = 1;
  for (std::size_t i = 0; i + 1 < p_up.size(); ++i) p *= 1 - 2 * p_up[i];
  return p;
}

// U sigma^z_{N+1} U on register 0, target sigma^z, rest maximally mixed.
inline double exact_remote_z(const RMat& K, double t) {
  const int n = static_cast<int>(K.rows());
  const auto U = evolve(K, t, iota(n));
  Circuit c{n, {U, PauliStep{n - 1, 'z'}, U}};
  ChannelSetup s;
  s.input = s.output = 0;
  s.rest = product_ensemble(n, 0, std::vector<double>(n, 0.5));
  s.target << 1, 0, 0, -1;
  return channel_fidelity(c, s).fidelity;
}

// Generic circuit path (no batched evaluator) for the paired protocol.
inline ExactChannelResult exact_encoded(const RMat& K, double t, DecodeTarget d) {
  ProtocolSpec p;
  p.n_chain = static_cast<int>(K.rows()) - 2;
  p.leg_a = {K, t};
  p.leg_b = {K, t};
  p.decode = d;
  return channel_fidelity(encoded_protocol_unitary(p), encoded_channel_setup(p.n_chain, d));
}

}  // namespace qst::oracle
