#pragma once

#include "qst/chain_models.hpp"

#include <complex>
#include <functional>
#include <span>
#include <variant>

namespace qst {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct EigenmodeSet {
  RVec energies;  // ascending
  RMat vectors;   // column k is mode k over the sites

  int size() const { return static_cast<int>(energies.size()); }
  double left(int k) const { return vectors(0, k); }
  double right(int k) const { return vectors(vectors.rows() - 1, k); }
};

// Hermitian eigensolve with the largest-magnitude entry of each mode made positive.
EigenmodeSet eigenmodes(const RMat& h);

struct Propagator {
  CMat M;
  double t = 0.0;
};

Propagator propagator(const RMat& K, double t);

// One eigendecomposition of K, evaluated at many times.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const RMat& K);

  Propagator at(double t) const;
  cplx element(int i, int j, double t) const;
  const EigenmodeSet& modes() const { return modes_; }

 private:
  EigenmodeSet modes_;
};

struct ResonantModeChoice {
  int z = 0;
  double g_left = 0.0;
  double g_right = 0.0;
  double t_z = 0.0;
  double tau = 0.0;
};

struct FixedMode {
  int z = 0;
};
struct MinimizeCost {
  std::function<double(const ResonantModeChoice&)> cost;
};
using ModeStrategy = std::variant<FixedMode, MinimizeCost>;

inline constexpr double kEndAmplitudeFloor = 1e-12;
inline constexpr double kDegenerateGap = 1e-10;

// Matched couplings for mode z: the weaker end runs at g_max, tau = pi/(sqrt2 t_z).
ResonantModeChoice matched_choice(const EigenmodeSet& modes, int z, double g_max);
bool is_transfer_candidate(const EigenmodeSet& modes, int z);
ResonantModeChoice select_resonant_mode(const EigenmodeSet& modes, double g_max,
                                        const ModeStrategy& strategy);

struct BdGDiagonalization {
  RMat O;       // rows (2k, 2k+1) = (d_k, d_k^dag) in the (c, c^dag) basis
  RVec lambda;  // (e_0, -e_0, e_1, -e_1, ...), e_k >= 0 ascending
  int modes() const { return static_cast<int>(lambda.size() / 2); }
  double energy(int k) const { return lambda(2 * k); }
};

BdGDiagonalization bdg_diagonalize(const RMat& A);

struct SwapCheck {
  int z = 0;
  double energy = 0.0;
  double g_eff = 0.0;  // coupling of each register to d_z
  double tau = 0.0;
  Eigen::Matrix2cd exchange;  // rows/cols (c_0, c_{N+1}): amplitude of col in row at tau
  double exchange_amplitude = 0.0;  // |c_0 -> c_{N+1}|
  double leakage = 0.0;             // weight of c_0 outside {c_0, c_{N+1}, d_z}
};

// Tunes both register fields to e_z and evolves the full BdG dynamics for
// tau = pi/(sqrt2 g_eff). Chain mode z indexes the ascending positive energies.
SwapCheck bdg_effective_swap_check(const ChainSpec& spec, int z);

struct BosonicResult {
  double eps = 0.0;
  double n_out = 0.0;
  double n_leak = 0.0;  // M-weighted occupation of the leaked modes
};

// occupations covers sites 1..N+1 (chain plus the receiving oscillator).
BosonicResult bosonic_swap_and_thermal_error(const CMat& M, double n0,
                                             std::span<const double> occupations);

double participation_ratio(const RVec& psi);

}  // namespace qst
