#include "qst/quadratic_dynamics.hpp"

#include "qst/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace qst {

EigenmodeSet eigenmodes(const RMat& h) {
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InputError("matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<RMat> es(h);
  if (es.info() != Eigen::Success) throw DomainError("eigensolver failed");
  EigenmodeSet out{es.eigenvalues(), es.eigenvectors()};
  for (int k = 0; k < out.size(); ++k) {
    Eigen::Index imax = 0;
    out.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, k) < 0) out.vectors.col(k) *= -1.0;
  }
  return out;
}

Propagator propagator(const RMat& K, double t) {
  if (t < 0) throw InputError("evolution time must be non-negative");
  return SpectralPropagator(K).at(t);
}

SpectralPropagator::SpectralPropagator(const RMat& K) : modes_(eigenmodes(K)) {}

Propagator SpectralPropagator::at(double t) const {
  const auto& V = modes_.vectors;
  CVec ph(modes_.size());
  for (int k = 0; k < modes_.size(); ++k) ph(k) = std::polar(1.0, -modes_.energies(k) * t);
  const CMat Vc = V.cast<cplx>();
  return {Vc * ph.asDiagonal() * Vc.transpose(), t};
}

cplx SpectralPropagator::element(int i, int j, double t) const {
  cplx s = 0;
  for (int k = 0; k < modes_.size(); ++k)
    s += modes_.vectors(i, k) * modes_.vectors(j, k) * std::polar(1.0, -modes_.energies(k) * t);
  return s;
}

bool is_transfer_candidate(const EigenmodeSet& modes, int z) {
  if (z < 0 || z >= modes.size()) return false;
  if (std::abs(modes.left(z)) < kEndAmplitudeFloor || std::abs(modes.right(z)) < kEndAmplitudeFloor)
    return false;
  const double e = modes.energies(z);
  if (z > 0 && e - modes.energies(z - 1) < kDegenerateGap) return false;
  if (z + 1 < modes.size() && modes.energies(z + 1) - e < kDegenerateGap) return false;
  return true;
}

ResonantModeChoice matched_choice(const EigenmodeSet& modes, int z, double g_max) {
  if (z < 0 || z >= modes.size()) throw InputError("mode index out of range");
  const double aL = std::abs(modes.left(z)), aR = std::abs(modes.right(z));
  if (aL < kEndAmplitudeFloor || aR < kEndAmplitudeFloor)
    throw DomainError("mode " + std::to_string(z) + " has a vanishing end amplitude");
  ResonantModeChoice c;
  c.z = z;
  c.t_z = g_max * std::min(aL, aR);
  c.g_left = c.t_z / aL;
  c.g_right = c.t_z / aR;
  c.tau = std::numbers::pi / (std::numbers::sqrt2 * c.t_z);
  return c;
}

ResonantModeChoice select_resonant_mode(const EigenmodeSet& modes, double g_max,
                                        const ModeStrategy& strategy) {
  if (const auto* f = std::get_if<FixedMode>(&strategy)) {
    if (!is_transfer_candidate(modes, f->z))
      throw DomainError("mode " + std::to_string(f->z) +
                        " cannot transfer (vanishing end amplitude or degenerate)");
    return matched_choice(modes, f->z, g_max);
  }
  const auto& cost = std::get<MinimizeCost>(strategy).cost;
  std::optional<ResonantModeChoice> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int z = 0; z < modes.size(); ++z) {
    if (!is_transfer_candidate(modes, z)) continue;
    auto c = matched_choice(modes, z, g_max);
    const double v = cost(c);
    const bool tie = best && v == best_cost &&
                     std::abs(modes.energies(z)) < std::abs(modes.energies(best->z));
    if (v < best_cost || tie) {
      best_cost = v;
      best = c;
    }
  }
  if (!best) throw DomainError("no transferring mode");
  return *best;
}

BdGDiagonalization bdg_diagonalize(const RMat& A) {
  const auto n2 = A.rows();
  if (n2 % 2 != 0 || A.cols() != n2) throw InputError("BdG matrix must be square of even size");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InputError("BdG matrix not symmetric");
  const auto m = n2 / 2;
  Eigen::SelfAdjointEigenSolver<RMat> es(A);
  const RVec& w = es.eigenvalues();
  const RMat& X = es.eigenvectors();
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(w(i) + w(n2 - 1 - i)) > 1e-8)
      throw InputError("BdG spectrum is not symmetric about zero");

  // tau_x swaps the particle and hole halves.
  auto tau_x = [m](const RVec& v) {
    RVec r(v.size());
    r << v.tail(m), v.head(m);
    return r;
  };

  const double zero_tol = 1e-9 * std::max(1.0, w.cwiseAbs().maxCoeff());
  std::vector<RVec> rows;
  std::vector<double> energies;
  std::vector<Eigen::Index> null_idx;
  for (Eigen::Index i = 0; i < n2; ++i) {
    if (std::abs(w(i)) <= zero_tol) null_idx.push_back(i);
  }
  if (!null_idx.empty()) {
    RMat P(n2, static_cast<Eigen::Index>(null_idx.size()));
    for (std::size_t c = 0; c < null_idx.size(); ++c) P.col(c) = X.col(null_idx[c]);
    RMat T(P.rows(), P.cols());
    for (Eigen::Index c = 0; c < P.cols(); ++c) T.col(c) = tau_x(P.col(c));
    Eigen::SelfAdjointEigenSolver<RMat> ts(P.transpose() * T);
    std::vector<RVec> plus, minus;
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      RVec v = P * ts.eigenvectors().col(c);
      (ts.eigenvalues()(c) > 0 ? plus : minus).push_back(v);
    }
    if (plus.size() != minus.size()) throw DomainError("unpaired zero modes in BdG spectrum");
    for (std::size_t k = 0; k < plus.size(); ++k) {
      rows.push_back((plus[k] + minus[k]) / std::numbers::sqrt2);
      energies.push_back(0.0);
    }
  }
  for (Eigen::Index i = 0; i < n2; ++i)
    if (w(i) > zero_tol) {
      rows.push_back(X.col(i));
      energies.push_back(w(i));
    }
  if (static_cast<Eigen::Index>(rows.size()) != m) throw DomainError("BdG pairing failed");

  BdGDiagonalization out{RMat(n2, n2), RVec(n2)};
  for (Eigen::Index k = 0; k < m; ++k) {
    out.O.row(2 * k) = rows[k].transpose();
    out.O.row(2 * k + 1) = tau_x(rows[k]).transpose();
    out.lambda(2 * k) = energies[k];
    out.lambda(2 * k + 1) = -energies[k];
  }
  return out;
}

SwapCheck bdg_effective_swap_check(const ChainSpec& spec, int z) {
  if (spec.kind != ModelKind::TFIM) throw InputError("swap check requires a TFIM spec");
  const int n = spec.n;
  const auto chain = bdg_diagonalize(build_bdg_matrix(spec, false));
  if (z < 0 || z >= chain.modes()) throw InputError("mode index out of range");

  ChainSpec tuned = spec;
  tuned.register_field = tuned.register_field_right = chain.energy(z);
  const RMat A = build_bdg_matrix(tuned, true);
  const int m = n + 2;

  // Orthogonal change of basis: registers untouched, chain rotated into d-modes.
  // New ordering: (c_0, c_{N+1}, c_0^dag, c_{N+1}^dag, chain quasi-particles).
  RMat W = RMat::Zero(2 * m, 2 * m);
  W(0, 0) = 1;
  W(1, m - 1) = 1;
  W(2, m) = 1;
  W(3, 2 * m - 1) = 1;
  for (int r = 0; r < 2 * n; ++r) {
    for (int j = 0; j < n; ++j) {
      W(4 + r, 1 + j) = chain.O(r, j);
      W(4 + r, m + 1 + j) = chain.O(r, n + j);
    }
  }
  const RMat Ar = W * A * W.transpose();
  const int dz = 4 + 2 * z;

  SwapCheck out;
  out.z = z;
  out.energy = chain.energy(z);
  out.g_eff = 2.0 * std::abs(Ar(0, dz));
  if (out.g_eff == 0.0) {
    out.tau = std::numeric_limits<double>::infinity();
    out.exchange = Eigen::Matrix2cd::Identity();
    return out;
  }
  out.tau = std::numbers::pi / (std::numbers::sqrt2 * out.g_eff);

  // Heisenberg evolution phi(t) = exp(-2iAt) phi(0).
  Eigen::SelfAdjointEigenSolver<RMat> es(Ar);
  CVec ph(2 * m);
  for (int k = 0; k < 2 * m; ++k) ph(k) = std::polar(1.0, -2.0 * es.eigenvalues()(k) * out.tau);
  const CMat V = es.eigenvectors().cast<cplx>();
  const CMat G = V * ph.asDiagonal() * V.transpose();
  out.exchange << G(0, 0), G(0, 1), G(1, 0), G(1, 1);
  out.exchange_amplitude = std::abs(G(1, 0));
  const double kept = std::norm(G(0, 0)) + std::norm(G(1, 0)) + std::norm(G(dz, 0));
  out.leakage = std::max(0.0, 1.0 - kept);
  return out;
}

BosonicResult bosonic_swap_and_thermal_error(const CMat& M, double n0,
                                             std::span<const double> occupations) {
  const auto last = M.rows() - 1;
  if (static_cast<Eigen::Index>(occupations.size()) != last)
    throw InputError("occupation profile must cover sites 1..N+1");
  BosonicResult r;
  r.eps = std::max(0.0, 1.0 - std::norm(M(last, 0)));
  double leaked = 0;
  for (Eigen::Index j = 1; j <= last; ++j) leaked += std::norm(M(last, j)) * occupations[j - 1];
  r.n_out = std::norm(M(last, 0)) * n0 + leaked;
  r.n_leak = r.eps > 0 ? leaked / r.eps : 0.0;
  return r;
}

double participation_ratio(const RVec& psi) {
  const double s = psi.array().square().square().sum();
  if (!(s > 0)) throw InputError("zero vector has no participation ratio");
  return 1.0 / s;
}

}  // namespace qst
