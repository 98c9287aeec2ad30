#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

namespace qst {

using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

enum class ModelKind { XX, TFIM, Bosonic };
enum class RangeRule { NearestNeighbor, FullDipolar, NNNCancelled };

struct Uniform {
  double kappa = 1.0;
};
// J_i = sqrt((i+1)(N+1-i))/2 on all N+1 bonds, register bonds included.
struct Engineered {};
// Chain bonds J_1..J_{N-1}.
struct Explicit {
  std::vector<double> bonds;
};
// Site coordinates in nm; couplings are (d_ref/r)^3 in units of kappa.
// Either N entries (chain only) or N+2 entries (register, chain, register);
// with N+2 the register gaps rescale gL and gR by (d_ref/gap)^3 unless
// freeze_registers is set.
struct FromPositions {
  std::vector<double> positions;
  RangeRule rule = RangeRule::NearestNeighbor;
  bool freeze_registers = false;
};

using CouplingPattern = std::variant<Uniform, Engineered, Explicit, FromPositions>;

struct ChainSpec {
  ModelKind kind = ModelKind::XX;
  int n = 1;
  CouplingPattern pattern = Uniform{};
  double g_left = 0.0;
  double g_right = 0.0;
  // Register diagonal: B' for TFIM, omega' (rotating frame) for bosons,
  // detuning for XX. The right register may differ (even-N tuning).
  double register_field = 0.0;
  double register_field_right = 0.0;
  // Uniform chain diagonal: h for XX, B for TFIM, omega for bosons.
  double field = 0.0;
  double kappa_ref_khz = 50.0;
  double d_ref_nm = 10.0;

  void validate() const;
};

// Symmetric (n_sites x n_sites) coupling map J_ij, zero diagonal.
using CouplingMap = RMat;

struct DisorderSpec {
  double d = 10.0;
  double sigma_d = 0.0;
  double min_spacing_fraction = 0.2;
  std::uint64_t master_seed = 0;
};

struct PositionsRealization {
  std::vector<double> x;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::vector<double> gaps() const;
};

PositionsRealization sample_positions(const DisorderSpec& spec, int n_sites, std::uint64_t stream);

CouplingMap couplings_from_positions(const std::vector<double>& x, RangeRule rule, double kappa_ref,
                                     double d_ref);

std::vector<double> engineered_couplings(int n);

// Chain-only coupling map (N x N) implied by the pattern, in units of kappa.
CouplingMap chain_couplings(const ChainSpec& spec);

// (N+2)x(N+2) single-particle hopping matrix; index 0 and N+1 are the registers.
RMat build_single_particle_matrix(const ChainSpec& spec);

// Real symmetric BdG matrix A with H = phi^T-dagger A phi,
// phi = (c_1..c_m, c_1^dag..c_m^dag). Nearest-neighbour bonds only.
// With registers, m = N+2 and the register sits at index 0 and N+1.
RMat build_bdg_matrix(const ChainSpec& spec, bool with_registers = false);

// Effective register couplings after position rescaling.
std::pair<double, double> effective_register_couplings(const ChainSpec& spec);

}  // namespace qst
