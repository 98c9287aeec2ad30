#pragma once

#include "qst/quadratic_dynamics.hpp"

#include <vector>

namespace qst {

// Average channel fidelities of the transfer protocols, from single-particle
// propagator elements M = exp(-iKt). Index 0 and N+1 are the registers.

double f_double_swap(const CMat& M);
double f_single_swap(const CMat& M, double chain_parity);

// Weak: Re[M_{0,N+1}^2 - M_00 M_{N+1,N+1}]; Strong: |...| (phase gate applied).
enum class EncodedVariant { Weak, Strong };
// Decoding into (N+1)_b keeps the |sum_i M_{N+1,i} M_{i,0}|^2 term, into (N+1)_a drops it.
enum class DecodeTarget { PairB, PairA };

struct EncodedElements {
  cplx m00, m0n, mnn;
  cplx relay;  // sum_{i=1..N} M_{N+1,i} M_{i,0}
};

EncodedElements encoded_elements(const CMat& M);
// O(N) evaluation at time t, using (M(2t))_{N+1,0} for the relay sum.
EncodedElements encoded_elements(const SpectralPropagator& P, double t);

double f_encoded(const EncodedElements& e, EncodedVariant variant,
                 DecodeTarget target = DecodeTarget::PairB);
double f_encoded(const CMat& M, EncodedVariant variant, DecodeTarget target = DecodeTarget::PairB);

// Remote sigma^z channel U sigma^z_{N+1} U; requires complex-symmetric M.
double f_remote_z(const CMat& M);

struct FidelityReport {
  double f_ds = 0, f_ss = 0, f_enc = 0, f_z = 0;
  cplx m00, m0n, mnn;
};

struct ErrorBudget {
  double off_resonant = 0.0;
  double decoherence = 0.0;
  double total = 0.0;
  std::vector<double> per_mode;  // off-resonant contribution of each k (0 at k = z)
};

// T1 in units of 1/kappa; +inf disables decoherence.
ErrorBudget error_budget(const EigenmodeSet& modes, const ResonantModeChoice& choice, int n,
                         double t1);
ResonantModeChoice optimal_coupling(const EigenmodeSet& modes, int z, int n, double t1);

struct BestMode {
  ResonantModeChoice choice;
  ErrorBudget budget;
  double fidelity = 0.0;  // clamp(1 - eps, 0, 1)
};

// Max over transferring modes of 1 - eps at the optimal coupling; ties go to smaller |e_z|.
BestMode best_mode_fidelity(const EigenmodeSet& modes, int n, double t1);

struct PerturbativeEstimate {
  int n = 0;
  int z = 0;  // 1-based chain mode index
  double g = 0.0;
  double t = 0.0;               // transfer time
  double transfer_infidelity = 0.0;  // 1 - |M_{0,N+1}|^2
  double one_minus_m00 = 0.0;   // at t_double = 2t (odd N only)
  double t_double = 0.0;
  double delta = 0.0;           // even-N register detuning beyond Delta_z
  double register_field = 0.0;  // Delta_z + delta for even N, 0 for odd N
  bool in_regime = true;        // g < kappa / sqrt(N)
  std::vector<double> gap, omega;  // Delta_k, Omega_k for k = 1..N
};

PerturbativeEstimate perturbative_infidelity(int n, double g);
PerturbativeEstimate perturbative_m00(int n, double g);

}  // namespace qst
