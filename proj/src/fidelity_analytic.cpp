#include "qst/fidelity_analytic.hpp"

#include "qst/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace qst {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double f_double_swap(const CMat& M) {
  const cplx m = M(0, 0);
  return 0.5 + (2.0 * m.real() + std::norm(m)) / 6.0;
}

double f_single_swap(const CMat& M, double chain_parity) {
  if (chain_parity < -1.0 || chain_parity > 1.0) throw InputError("parity must lie in [-1, 1]");
  const cplx a = M(0, M.cols() - 1);
  return 0.5 + (2.0 * a.real() * chain_parity + std::norm(a)) / 6.0;
}

EncodedElements encoded_elements(const CMat& M) {
  const auto n1 = M.rows() - 1;
  EncodedElements e{M(0, 0), M(0, n1), M(n1, n1), 0.0};
  for (Eigen::Index i = 1; i < n1; ++i) e.relay += M(n1, i) * M(i, 0);
  return e;
}

EncodedElements encoded_elements(const SpectralPropagator& P, double t) {
  const int n1 = P.modes().size() - 1;
  EncodedElements e{P.element(0, 0, t), P.element(0, n1, t), P.element(n1, n1, t), 0.0};
  const cplx m2 = P.element(n1, 0, 2.0 * t);
  e.relay = m2 - e.m0n * e.m00 - e.mnn * e.m0n;
  return e;
}

double f_encoded(const EncodedElements& e, EncodedVariant variant, DecodeTarget target) {
  const cplx x = e.m0n * e.m0n - e.m00 * e.mnn;
  const double a2 = std::norm(e.m0n);
  const double phase_term = variant == EncodedVariant::Weak ? x.real() : std::abs(x);
  const double relay = target == DecodeTarget::PairB ? std::norm(e.relay) : 0.0;
  return 0.5 + (2.0 * a2 * phase_term + a2 + relay) / 6.0;
}

double f_encoded(const CMat& M, EncodedVariant variant, DecodeTarget target) {
  return f_encoded(encoded_elements(M), variant, target);
}

double f_remote_z(const CMat& M) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError("remote-z fidelity requires a complex-symmetric propagator");
  const auto n1 = M.rows() - 1;
  // <0|M S M|0> with S = diag(1, ..., 1, -1)
  const cplx w = (M.row(0) * M.col(0))(0) - 2.0 * M(0, n1) * M(n1, 0);
  return 0.5 + (std::norm(w) - 2.0 * w.real()) / 6.0;
}

ErrorBudget error_budget(const EigenmodeSet& modes, const ResonantModeChoice& choice, int n,
                         double t1) {
  if (!(t1 > 0)) throw InputError("T1 must be positive");
  const int z = choice.z;
  ErrorBudget b;
  b.per_mode.assign(modes.size(), 0.0);
  for (int k = 0; k < modes.size(); ++k) {
    if (k == z) continue;
    const double gap = modes.energies(k) - modes.energies(z);
    if (std::abs(gap) < kDegenerateGap) throw DomainError("degenerate spectrum: gap to mode z vanishes");
    const double l = choice.g_left * modes.left(k), r = choice.g_right * modes.right(k);
    b.per_mode[k] = (l * l + r * r) / (gap * gap);
    b.off_resonant += b.per_mode[k];
  }
  b.decoherence = std::isinf(t1) ? 0.0 : n * choice.tau / t1;
  b.total = b.off_resonant + b.decoherence;
  return b;
}

ResonantModeChoice optimal_coupling(const EigenmodeSet& modes, int z, int n, double t1) {
  if (!(t1 > 0) || std::isinf(t1)) throw InputError("optimal coupling needs a finite T1");
  const double aL = std::abs(modes.left(z)), aR = std::abs(modes.right(z));
  if (aL < kEndAmplitudeFloor || aR < kEndAmplitudeFloor)
    throw DomainError("mode has a vanishing end amplitude");
  const double ratio = (aL * aL) / (aR * aR);
  double S = 0.0;
  for (int k = 0; k < modes.size(); ++k) {
    if (k == z) continue;
    const double gap = modes.energies(k) - modes.energies(z);
    if (std::abs(gap) < kDegenerateGap) throw DomainError("degenerate spectrum: gap to mode z vanishes");
    S += (modes.left(k) * modes.left(k) + ratio * modes.right(k) * modes.right(k)) / (gap * gap);
  }
  const double c = n * std::numbers::pi / (std::numbers::sqrt2 * t1 * aL);
  // eps(gL) = gL^2 S + c / gL  is stationary at gL^3 = c / (2S)
  const double gl = S > 0 ? std::cbrt(c / (2.0 * S)) : std::numeric_limits<double>::infinity();
  ResonantModeChoice out;
  out.z = z;
  out.g_left = gl;
  out.t_z = gl * aL;
  out.g_right = out.t_z / aR;
  out.tau = std::numbers::pi / (std::numbers::sqrt2 * out.t_z);
  return out;
}

BestMode best_mode_fidelity(const EigenmodeSet& modes, int n, double t1) {
  std::optional<BestMode> best;
  for (int z = 0; z < modes.size(); ++z) {
    if (!is_transfer_candidate(modes, z)) continue;
    BestMode m;
    m.choice = optimal_coupling(modes, z, n, t1);
    m.budget = error_budget(modes, m.choice, n, t1);
    m.fidelity = clamp01(1.0 - m.budget.total);
    const bool better = !best || m.budget.total < best->budget.total ||
                        (m.budget.total == best->budget.total &&
                         std::abs(modes.energies(z)) < std::abs(modes.energies(best->choice.z)));
    if (better) best = m;
  }
  if (!best) throw DomainError("no transferring mode");
  return *best;
}

namespace {

PerturbativeEstimate perturbative_setup(int n, double g) {
  if (n < 1) throw InputError("chain length must be >= 1");
  if (!(g > 0)) throw InputError("coupling must be positive");
  PerturbativeEstimate p;
  p.n = n;
  p.g = g;
  p.in_regime = g < 1.0 / std::sqrt(double(n));
  const double q = std::numbers::pi / (n + 1);
  for (int k = 1; k <= n; ++k) {
    p.gap.push_back(2.0 * std::cos(q * k));
    p.omega.push_back(2.0 * g / std::sqrt(double(n + 1)) * std::sin(q * k));
  }
  return p;
}

double parity_sign(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

}  // namespace

PerturbativeEstimate perturbative_infidelity(int n, double g) {
  auto p = perturbative_setup(n, g);
  auto D = [&](int k) { return p.gap[k - 1]; };
  auto W = [&](int k) { return p.omega[k - 1]; };
  if (n % 2 == 1) {
    p.z = (n + 1) / 2;
    p.t = std::sqrt(double(n + 1)) * std::numbers::pi / (2.0 * g);
    for (int k = 1; k < p.z; ++k) {
      const double r = W(k) / D(k);
      p.transfer_infidelity += 2.0 * r * r * (1.0 + parity_sign(k + p.z) * std::cos(D(k) * p.t));
    }
    p.t_double = 2.0 * p.t;
    for (int k = 1; k < p.z; ++k) {
      const double r = W(k) / D(k);
      p.one_minus_m00 += r * r * (1.0 - std::cos(D(k) * p.t_double));
    }
    return p;
  }
  p.z = n / 2;
  p.t = std::numbers::pi / W(p.z);
  for (int k = 1; k <= n; ++k) {
    if (k == p.z) continue;
    const double dt = D(k) - D(p.z);
    p.delta += 0.5 * (1.0 - 3.0 * parity_sign(p.z + k)) * W(k) * W(k) / dt;
    const double r = W(k) / dt;
    p.transfer_infidelity += r * r * (1.0 + parity_sign(k + p.z) * std::cos(dt * p.t));
  }
  p.register_field = D(p.z) + p.delta;
  p.t_double = 2.0 * p.t;
  p.one_minus_m00 = std::numeric_limits<double>::quiet_NaN();
  return p;
}

PerturbativeEstimate perturbative_m00(int n, double g) {
  if (n % 2 == 0) throw InputError("the M_00 estimate covers odd N only");
  return perturbative_infidelity(n, g);
}

}  // namespace qst
