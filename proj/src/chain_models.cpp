#include "qst/chain_models.hpp"

#include "qst/errors.hpp"
#include "qst/philox.hpp"

#include <cmath>
#include <random>
#include <string>

namespace qst {

namespace {

template <class... F>
struct overloaded : F... {
  using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;

double cube_law(double r, double kappa_ref, double d_ref) {
  const double q = d_ref / r;
  return kappa_ref * q * q * q;
}

}  // namespace

void ChainSpec::validate() const {
  if (n < 1) throw InputError("chain length must be >= 1");
  if (g_left < 0 || g_right < 0) throw InputError("register couplings must be non-negative");
  if (!(kappa_ref_khz > 0)) throw InputError("kappa_ref must be positive");
  if (!(d_ref_nm > 0)) throw InputError("d_ref must be positive");
  std::visit(overloaded{
                 [](const Uniform&) {},
                 [](const Engineered&) {},
                 [this](const Explicit& e) {
                   if (static_cast<int>(e.bonds.size()) != n - 1)
                     throw InputError("explicit pattern needs N-1 bonds, got " +
                                      std::to_string(e.bonds.size()));
                 },
                 [this](const FromPositions& p) {
                   const auto m = static_cast<int>(p.positions.size());
                   if (m != n && m != n + 2)
                     throw InputError("positions must have N or N+2 entries");
                   for (int i = 1; i < m; ++i)
                     if (!(p.positions[i] > p.positions[i - 1]))
                       throw InputError("positions must be strictly increasing");
                 },
             },
             pattern);
}

std::vector<double> PositionsRealization::gaps() const {
  std::vector<double> g;
  for (std::size_t i = 1; i < x.size(); ++i) g.push_back(x[i] - x[i - 1]);
  return g;
}

PositionsRealization sample_positions(const DisorderSpec& spec, int n_sites, std::uint64_t stream) {
  if (n_sites < 2) throw InputError("need at least two sites");
  if (!(spec.d > 0) || spec.sigma_d < 0 || !(spec.min_spacing_fraction > 0) ||
      !(spec.min_spacing_fraction < 1))
    throw InputError("invalid disorder spec");
  PositionsRealization out;
  out.seed = spec.master_seed;
  out.stream = stream;
  out.x.resize(n_sites);
  out.x[0] = 0.0;
  Philox4x32 rng(spec.master_seed, stream);
  std::normal_distribution<double> gauss(spec.d, spec.sigma_d);
  const double floor = spec.min_spacing_fraction * spec.d;
  for (int i = 1; i < n_sites; ++i) {
    double gap = spec.d;
    if (spec.sigma_d > 0) {
      do gap = gauss(rng);
      while (gap < floor);
    }
    out.x[i] = out.x[i - 1] + gap;
  }
  return out;
}

CouplingMap couplings_from_positions(const std::vector<double>& x, RangeRule rule, double kappa_ref,
                                     double d_ref) {
  const auto m = static_cast<Eigen::Index>(x.size());
  CouplingMap J = CouplingMap::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto sep = j - i;
      if (rule == RangeRule::NearestNeighbor && sep != 1) continue;
      if (rule == RangeRule::NNNCancelled && sep == 2) continue;
      J(i, j) = J(j, i) = cube_law(std::abs(x[j] - x[i]), kappa_ref, d_ref);
    }
  }
  return J;
}

std::vector<double> engineered_couplings(int n) {
  if (n < 0) throw InputError("engineered chain needs N >= 0");
  std::vector<double> J(n + 1);
  for (int i = 0; i <= n; ++i) J[i] = 0.5 * std::sqrt(double(i + 1) * double(n + 1 - i));
  return J;
}

CouplingMap chain_couplings(const ChainSpec& spec) {
  const int n = spec.n;
  CouplingMap J = CouplingMap::Zero(n, n);
  auto set_bonds = [&](auto&& bond) {
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = bond(i);
  };
  std::visit(overloaded{
                 [&](const Uniform& u) { set_bonds([&](int) { return u.kappa; }); },
                 [&](const Engineered&) {
                   const auto e = engineered_couplings(n);
                   set_bonds([&](int i) { return e[i + 1]; });
                 },
                 [&](const Explicit& e) { set_bonds([&](int i) { return e.bonds[i]; }); },
                 [&](const FromPositions& p) {
                   auto first = p.positions.begin();
                   if (static_cast<int>(p.positions.size()) == n + 2) ++first;
                   std::vector<double> xs(first, first + n);
                   J = couplings_from_positions(xs, p.rule, 1.0, spec.d_ref_nm);
                 },
             },
             spec.pattern);
  return J;
}

std::pair<double, double> effective_register_couplings(const ChainSpec& spec) {
  if (std::holds_alternative<Engineered>(spec.pattern)) {
    const auto e = engineered_couplings(spec.n);
    return {e.front(), e.back()};
  }
  double gl = spec.g_left, gr = spec.g_right;
  if (const auto* p = std::get_if<FromPositions>(&spec.pattern)) {
    const auto& x = p->positions;
    if (!p->freeze_registers && static_cast<int>(x.size()) == spec.n + 2) {
      gl *= cube_law(x[1] - x[0], 1.0, spec.d_ref_nm);
      gr *= cube_law(x[spec.n + 1] - x[spec.n], 1.0, spec.d_ref_nm);
    }
  }
  return {gl, gr};
}

RMat build_single_particle_matrix(const ChainSpec& spec) {
  spec.validate();
  if (spec.kind == ModelKind::TFIM)
    throw InputError("TFIM spec does not conserve particle number; use build_bdg_matrix");
  const int n = spec.n;
  RMat K = RMat::Zero(n + 2, n + 2);
  K.block(1, 1, n, n) = chain_couplings(spec);
  for (int i = 1; i <= n; ++i) K(i, i) = spec.field;
  const auto [gl, gr] = effective_register_couplings(spec);
  K(0, 1) = K(1, 0) = gl;
  K(n, n + 1) = K(n + 1, n) = gr;
  K(0, 0) = spec.register_field;
  K(n + 1, n + 1) = spec.register_field_right;
  return K;
}

RMat build_bdg_matrix(const ChainSpec& spec, bool with_registers) {
  spec.validate();
  if (spec.kind != ModelKind::TFIM) throw InputError("BdG matrix requires a TFIM spec");
  const int n = spec.n;
  const int m = with_registers ? n + 2 : n;
  const int off = with_registers ? 1 : 0;
  const RMat Jc = chain_couplings(spec);
  RMat h = RMat::Zero(m, m);
  RMat delta = RMat::Zero(m, m);
  auto bond = [&](int i, int j, double J) {
    h(i, j) = h(j, i) = -J;
    delta(i, j) = -J;
    delta(j, i) = J;
  };
  for (int i = 0; i + 1 < n; ++i) bond(i + off, i + 1 + off, Jc(i, i + 1));
  for (int i = 0; i < n; ++i) h(i + off, i + off) = 2.0 * spec.field;
  if (with_registers) {
    const auto [gl, gr] = effective_register_couplings(spec);
    bond(0, 1, gl);
    bond(n, n + 1, gr);
    h(0, 0) = 2.0 * spec.register_field;
    h(n + 1, n + 1) = 2.0 * spec.register_field_right;
  }
  RMat A(2 * m, 2 * m);
  A << h, delta, delta.transpose(), -h;
  return 0.5 * A;
}

}  // namespace qst
