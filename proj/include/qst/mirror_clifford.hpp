#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qst {

// ---- Pauli strings ------------------------------------------------------------

struct PauliString {
  std::vector<std::uint8_t> x, z;  // (1,1) = Y
  bool negative = false;

  explicit PauliString(int n = 0) : x(n, 0), z(n, 0) {}
  int size() const { return static_cast<int>(x.size()); }
  std::vector<int> support() const;
  char at(int q) const;  // 'I', 'X', 'Y', 'Z'
  std::string str() const;

  static PauliString single(int n, int q, char p);
};

// ---- stabilizer tableau ---------------------------------------------------------

// Heisenberg-picture tableau: row i < n holds U X_i U^dag, row n+i holds U Z_i U^dag.
// Column-major storage with rows packed 64 per word.
class Tableau {
 public:
  explicit Tableau(int n);

  int qubits() const { return n_; }
  void h(int q);
  void s(int q);
  void x(int q);
  void y(int q);
  void z(int q);
  void cz(int a, int b);
  void cnot(int c, int t);

  PauliString image_x(int q) const { return row(q); }
  PauliString image_z(int q) const { return row(n_ + q); }
  PauliString row(int r) const;
  bool operator==(const Tableau& o) const = default;

 private:
  bool bit(const std::vector<std::uint64_t>& v, int q, int r) const {
    return (v[static_cast<std::size_t>(q) * words_ + r / 64] >> (r % 64)) & 1;
  }
  std::uint64_t* col(std::vector<std::uint64_t>& v, int q) { return v.data() + static_cast<std::size_t>(q) * words_; }
  void check(int q) const;

  int n_;
  int words_;
  std::vector<std::uint64_t> xs_, zs_, r_;
};

// ---- pulse programs -----------------------------------------------------------

enum class LocalGate { X, Y, Z, H, S };

struct GlobalHadamard {
  std::vector<int> sites;
};
struct GlobalCZ {
  std::vector<std::pair<int, int>> edges;
};
struct Local {
  int site = 0;
  LocalGate gate = LocalGate::X;
};
struct PulseProgram;
struct Repeat {
  std::shared_ptr<const PulseProgram> block;
  int count = 1;
};
using Layer = std::variant<GlobalHadamard, GlobalCZ, Local, Repeat>;

struct PulseProgram {
  int n = 0;
  std::vector<Layer> layers;  // applied first to last

  PulseProgram& then(const PulseProgram& p);
  PulseProgram& then(Layer l) {
    layers.push_back(std::move(l));
    return *this;
  }
  std::size_t layer_count() const;
};

PulseProgram inverse(const PulseProgram& p);
PulseProgram repeat(const PulseProgram& p, int count);

void clifford_apply(Tableau& t, const PulseProgram& p);
Tableau clifford_apply(const PulseProgram& p);

// ---- mirror constructs --------------------------------------------------------

// One cycle Q = H * CZ on an ordered site list (CZ between consecutive entries).
PulseProgram mirror_cycle(int n, const std::vector<int>& sites);
// (H * CZ)^(len+1) on the listed sites; reverses their order up to local Cliffords.
PulseProgram mirror_program(int n, const std::vector<int>& sites);
PulseProgram mirror_program(int n);

struct SiteMapCheck {
  bool ok = true;
  std::vector<std::string> corrections;  // per source site, e.g. "X->-Z Z->+X"
  std::string failure;
};

// Checks that X_i and Z_i are carried to single-qubit Paulis on target[i].
SiteMapCheck check_site_map(const Tableau& t, const std::vector<int>& target);
SiteMapCheck check_mirror(const PulseProgram& p, const std::vector<int>& sites);

// Register at local site 0, chain sites 1..L-1 (all indices into `sites`).
// Swaps sites[k] and sites[k+1], k in [0, L-2], up to single-qubit Cliffords.
PulseProgram propagated_swap(int n, const std::vector<int>& sites, int k);
// Convenience: chain 0..length-1 with the register at 0; pair_index is 1-based (n, n+1).
PulseProgram propagated_swap(int pair_index, int length);

// ---- lattice ------------------------------------------------------------------

enum class SiteKind { Register, Impurity, Hole };

class LatticeMap {
 public:
  static LatticeMap parse(const std::string& text);
  LatticeMap(int rows, int cols, std::vector<SiteKind> kinds);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  int index(int r, int c) const { return r * cols_ + c; }
  SiteKind kind(int site) const { return kinds_[site]; }
  int row_of(int site) const { return site / cols_; }
  int col_of(int site) const { return site % cols_; }
  std::string str() const;

  // Maximal hole-free run of sites in the row containing `site`, left to right.
  std::vector<int> run(int site) const;

 private:
  int rows_, cols_;
  std::vector<SiteKind> kinds_;
};

struct DirectedSwaps {
  PulseProgram q_m;  // swaps the two impurities next to the register
  PulseProgram q_l;  // mirrors one side chain while the other refocuses
  int q_l_cycles = 0;
  bool q_l_mirrors_left = false;
  std::vector<int> left, right;  // side chains, ordered outward from the register
};

DirectedSwaps directed_swap_programs(const LatticeMap& lattice, int reg);

struct Move {
  enum class Kind { InRow, InterRow } kind = Kind::InRow;
  int from = 0;
  int to = 0;
};

struct RoutePlan {
  std::vector<Move> moves;
  PulseProgram program;
  std::size_t layers = 0;
  int vertical_moves() const;
};

RoutePlan route(const LatticeMap& lattice, int src, int dst);

// ---- dense oracle -------------------------------------------------------------

inline constexpr int kDenseCap = 12;

struct DenseReport {
  double max_deviation = 0.0;  // max |U P v - Q U v| over generators and probes
  int generators_checked = 0;
  bool full_unitary = false;
};

// Compares the tableau images of every X_i, Z_i with the dense action of the program.
DenseReport dense_unitary_check(const PulseProgram& p, std::uint64_t seed = 1);

// Dense state-vector action of the program on a 2^n vector (little-endian qubits).
void dense_apply(const PulseProgram& p, std::vector<std::complex<double>>& psi);

}  // namespace qst
