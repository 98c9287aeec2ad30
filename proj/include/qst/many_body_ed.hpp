#pragma once

#include "qst/fidelity_analytic.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace qst {

// Spin-1/2 XX model H = sum_{i<j} J_ij (s+_i s-_j + h.c.) + sum_i J_ii n_i.
// Bit value 1 = spin up = excitation. Blocks are indexed by Hamming weight.

inline constexpr int kDefaultQubitCap = 14;

struct Sector {
  std::vector<std::uint32_t> basis;  // ascending bitmasks of fixed weight
  RMat block;
};

struct SectorHamiltonian {
  int n = 0;
  std::vector<Sector> sectors;          // index = Hamming weight
  std::vector<std::uint32_t> position;  // bitmask -> index within its sector

  std::size_t dim(int w) const { return sectors[w].basis.size(); }
};

// Memory estimate (bytes) for blocks, eigenvectors and unitaries of an n-qubit model.
double many_body_memory_bytes(int n);

SectorHamiltonian build_many_body(const CouplingMap& J, int n, int cap = kDefaultQubitCap);

struct SectorSpectrum {
  int n = 0;
  std::vector<RVec> energies;
  std::vector<RMat> vectors;
};

SectorSpectrum diagonalize(const SectorHamiltonian& H);

struct SectorUnitaries {
  int n = 0;
  std::vector<CMat> blocks;
};

SectorUnitaries exact_unitary(const SectorSpectrum& S, double t);
SectorUnitaries exact_unitary(const SectorHamiltonian& H, double t);

// All many-body eigenvalues, ascending.
RVec many_body_spectrum(const SectorSpectrum& S);

// ---- circuits over n qubits -------------------------------------------------

struct EvolveStep {
  std::vector<int> qubits;  // local bit k of the block acts on global qubit qubits[k]
  std::shared_ptr<const SectorUnitaries> unitary;
  std::string label;
};
// Flips target when the control is down (bit 0) if on_down, else when up.
struct CnotStep {
  int control = 0;
  int target = 0;
  bool on_down = true;
};
struct PauliStep {
  int qubit = 0;
  char pauli = 'z';  // 'x', 'y' or 'z'
};
using Step = std::variant<EvolveStep, CnotStep, PauliStep>;

struct Circuit {
  int n = 0;
  std::vector<Step> steps;
};

// Columns of psi are state vectors over 2^n amplitudes.
void apply_circuit(const Circuit& c, CMat& psi);

// Weighted computational-basis configurations of every qubit but the input
// (input bit must be 0 in each mask).
struct RestEnsemble {
  std::vector<std::uint32_t> configs;
  std::vector<double> weights;
};

// Product diagonal state; p_up[q] is ignored for the input qubit.
RestEnsemble product_ensemble(int n, int input, const std::vector<double>& p_up);

struct ChannelSetup {
  int input = 0;
  int output = 0;
  RestEnsemble rest;
  Eigen::Matrix2cd target = Eigen::Matrix2cd::Identity();  // ideal gate V
};

// T(a, b) = Tr[sigma_a E(sigma_b)], a, b in (x, y, z), rest traced with its weights.
using PauliTransfer = Eigen::Matrix3d;

struct ExactChannelResult {
  double fidelity = 0.0;          // against the target gate
  double phase_corrected = 0.0;   // best z-rotation applied to the output
  std::array<double, 3> traces{};  // Tr[sigma_i E(sigma_i)]
  PauliTransfer transfer = PauliTransfer::Zero();
  std::string model;
  double wall_seconds = 0.0;
};

ExactChannelResult channel_fidelity(const Circuit& c, const ChannelSetup& setup);

// Average fidelity against V from the Pauli transfer matrix.
double fidelity_from_transfer(const PauliTransfer& T, const Eigen::Matrix2cd& V);
double phase_corrected_fidelity(const PauliTransfer& T);

// Single-particle matrix K -> many-body couplings (same numbers, spin language).
inline CouplingMap couplings_from_single_particle(const RMat& K) { return K; }

// ---- paired (encoded) protocol ----------------------------------------------

// Qubits: 0_a = 0, 0_b = 1, chain 2..N+1, (N+1)_b = N+2, (N+1)_a = N+3.
// Each leg evolves a register, the whole chain and the far register of its
// pair under J (size (N+2)x(N+2), local order register, chain, register).
struct TransferLeg {
  CouplingMap J;
  double t = 0.0;
};

struct ProtocolSpec {
  int n_chain = 1;
  TransferLeg leg_a, leg_b;
  DecodeTarget decode = DecodeTarget::PairB;
  std::string model = "custom";

  int total_qubits() const { return n_chain + 4; }
};

struct EncodedQubits {
  int a0, b0, bn, an;
  std::vector<int> chain;
};
EncodedQubits encoded_layout(int n_chain);

// encode CNOT(0_a -> 0_b), U_a, U_b, decode CNOT((N+1)_b -> (N+1)_a) [or the reverse for PairA]
Circuit encoded_protocol_unitary(const ProtocolSpec& p, int cap = kDefaultQubitCap);
ChannelSetup encoded_channel_setup(int n_chain, DecodeTarget decode);

// Batched evaluator specialised to the protocol; agrees with the generic circuit path.
ExactChannelResult exact_channel_fidelity(const ProtocolSpec& p, int cap = kDefaultQubitCap);

// Reusable form: the leg spectra are computed once and evaluated at many times.
class EncodedEvaluator {
 public:
  EncodedEvaluator(int n_chain, const CouplingMap& J, DecodeTarget decode = DecodeTarget::PairB,
                   int cap = kDefaultQubitCap);
  ExactChannelResult at(double t_a, double t_b) const;
  ExactChannelResult at(double t) const { return at(t, t); }
  int n_chain() const { return n_chain_; }

 private:
  int n_chain_;
  DecodeTarget decode_;
  SectorHamiltonian H_;
  SectorSpectrum S_;
};

}  // namespace qst
