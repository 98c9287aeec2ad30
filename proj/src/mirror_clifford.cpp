#include "qst/mirror_clifford.hpp"

#include "qst/errors.hpp"
#include "qst/philox.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <tuple>

namespace qst {

// ---- PauliString --------------------------------------------------------------

std::vector<int> PauliString::support() const {
  std::vector<int> s;
  for (int q = 0; q < size(); ++q)
    if (x[q] || z[q]) s.push_back(q);
  return s;
}

char PauliString::at(int q) const {
  static constexpr char names[4] = {'I', 'Z', 'X', 'Y'};
  return names[x[q] * 2 + z[q]];
}

std::string PauliString::str() const {
  std::string s(1, negative ? '-' : '+');
  for (int q = 0; q < size(); ++q) s += at(q);
  return s;
}

PauliString PauliString::single(int n, int q, char p) {
  PauliString s(n);
  s.x[q] = (p == 'X' || p == 'Y');
  s.z[q] = (p == 'Z' || p == 'Y');
  return s;
}

// ---- Tableau ------------------------------------------------------------------

Tableau::Tableau(int n) : n_(n), words_((2 * n + 63) / 64) {
  if (n < 1) throw InputError("tableau needs at least one qubit");
  xs_.assign(static_cast<std::size_t>(n) * words_, 0);
  zs_.assign(static_cast<std::size_t>(n) * words_, 0);
  r_.assign(words_, 0);
  for (int q = 0; q < n; ++q) {
    col(xs_, q)[q / 64] |= std::uint64_t{1} << (q % 64);
    col(zs_, q)[(n + q) / 64] |= std::uint64_t{1} << ((n + q) % 64);
  }
}

void Tableau::check(int q) const {
  if (q < 0 || q >= n_) throw InputError("site " + std::to_string(q) + " out of range");
}

void Tableau::h(int q) {
  check(q);
  auto* x = col(xs_, q);
  auto* z = col(zs_, q);
  for (int w = 0; w < words_; ++w) {
    r_[w] ^= x[w] & z[w];
    std::swap(x[w], z[w]);
  }
}

void Tableau::s(int q) {
  check(q);
  auto* x = col(xs_, q);
  auto* z = col(zs_, q);
  for (int w = 0; w < words_; ++w) {
    r_[w] ^= x[w] & z[w];
    z[w] ^= x[w];
  }
}

void Tableau::x(int q) {
  check(q);
  const auto* z = col(zs_, q);
  for (int w = 0; w < words_; ++w) r_[w] ^= z[w];
}

void Tableau::z(int q) {
  check(q);
  const auto* x = col(xs_, q);
  for (int w = 0; w < words_; ++w) r_[w] ^= x[w];
}

void Tableau::y(int q) {
  check(q);
  const auto* x = col(xs_, q);
  const auto* z = col(zs_, q);
  for (int w = 0; w < words_; ++w) r_[w] ^= x[w] ^ z[w];
}

void Tableau::cz(int a, int b) {
  check(a);
  check(b);
  if (a == b) throw InputError("CZ needs two distinct sites");
  auto* xa = col(xs_, a);
  auto* za = col(zs_, a);
  auto* xb = col(xs_, b);
  auto* zb = col(zs_, b);
  for (int w = 0; w < words_; ++w) {
    r_[w] ^= xa[w] & xb[w] & (za[w] ^ zb[w]);
    za[w] ^= xb[w];
    zb[w] ^= xa[w];
  }
}

void Tableau::cnot(int c, int t) {
  check(c);
  check(t);
  if (c == t) throw InputError("CNOT needs two distinct sites");
  auto* xc = col(xs_, c);
  auto* zc = col(zs_, c);
  auto* xt = col(xs_, t);
  auto* zt = col(zs_, t);
  for (int w = 0; w < words_; ++w) {
    r_[w] ^= xc[w] & zt[w] & ~(xt[w] ^ zc[w]);
    xt[w] ^= xc[w];
    zc[w] ^= zt[w];
  }
}

PauliString Tableau::row(int r) const {
  if (r < 0 || r >= 2 * n_) throw InputError("tableau row out of range");
  PauliString p(n_);
  for (int q = 0; q < n_; ++q) {
    p.x[q] = bit(xs_, q, r);
    p.z[q] = bit(zs_, q, r);
  }
  p.negative = (r_[r / 64] >> (r % 64)) & 1;
  return p;
}

// ---- programs -----------------------------------------------------------------

PulseProgram& PulseProgram::then(const PulseProgram& p) {
  if (p.n != n) throw InputError("program sizes differ");
  layers.insert(layers.end(), p.layers.begin(), p.layers.end());
  return *this;
}

std::size_t PulseProgram::layer_count() const {
  std::size_t c = 0;
  for (const auto& l : layers) {
    if (const auto* r = std::get_if<Repeat>(&l))
      c += r->count * r->block->layer_count();
    else
      ++c;
  }
  return c;
}

PulseProgram inverse(const PulseProgram& p) {
  PulseProgram out{p.n, {}};
  for (auto it = p.layers.rbegin(); it != p.layers.rend(); ++it) {
    if (const auto* r = std::get_if<Repeat>(&*it)) {
      out.layers.push_back(Repeat{std::make_shared<const PulseProgram>(inverse(*r->block)), r->count});
    } else if (const auto* l = std::get_if<Local>(&*it); l && l->gate == LocalGate::S) {
      for (int k = 0; k < 3; ++k) out.layers.push_back(*l);
    } else {
      out.layers.push_back(*it);
    }
  }
  return out;
}

PulseProgram repeat(const PulseProgram& p, int count) {
  if (count < 0) throw InputError("repeat count must be non-negative");
  return PulseProgram{p.n, {Repeat{std::make_shared<const PulseProgram>(p), count}}};
}

void clifford_apply(Tableau& t, const PulseProgram& p) {
  if (p.n != t.qubits()) throw InputError("program and tableau sizes differ");
  for (const auto& layer : p.layers) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, GlobalHadamard>) {
            for (int q : l.sites) t.h(q);
          } else if constexpr (std::is_same_v<T, GlobalCZ>) {
            for (auto [a, b] : l.edges) t.cz(a, b);
          } else if constexpr (std::is_same_v<T, Local>) {
            switch (l.gate) {
              case LocalGate::X: t.x(l.site); break;
              case LocalGate::Y: t.y(l.site); break;
              case LocalGate::Z: t.z(l.site); break;
              case LocalGate::H: t.h(l.site); break;
              case LocalGate::S: t.s(l.site); break;
            }
          } else {
            for (int k = 0; k < l.count; ++k) clifford_apply(t, *l.block);
          }
        },
        layer);
  }
}

Tableau clifford_apply(const PulseProgram& p) {
  Tableau t(p.n);
  clifford_apply(t, p);
  return t;
}

// ---- mirror -------------------------------------------------------------------

PulseProgram mirror_cycle(int n, const std::vector<int>& sites) {
  GlobalCZ cz;
  for (std::size_t i = 0; i + 1 < sites.size(); ++i) cz.edges.emplace_back(sites[i], sites[i + 1]);
  PulseProgram p{n, {}};
  p.then(std::move(cz)).then(GlobalHadamard{sites});
  return p;
}

PulseProgram mirror_program(int n, const std::vector<int>& sites) {
  if (sites.empty()) throw InputError("mirror needs at least one site");
  return repeat(mirror_cycle(n, sites), static_cast<int>(sites.size()) + 1);
}

PulseProgram mirror_program(int n) {
  if (n < 1) throw InputError("mirror needs n >= 1");
  std::vector<int> sites(n);
  for (int i = 0; i < n; ++i) sites[i] = i;
  return mirror_program(n, sites);
}

namespace {

std::string signed_name(const PauliString& p, int q) {
  return std::string(1, p.negative ? '-' : '+') + p.at(q);
}

}  // namespace

SiteMapCheck check_site_map(const Tableau& t, const std::vector<int>& target) {
  SiteMapCheck out;
  if (static_cast<int>(target.size()) != t.qubits()) throw InputError("target map size mismatch");
  for (int q = 0; q < t.qubits(); ++q) {
    const auto px = t.image_x(q), pz = t.image_z(q);
    const auto sx = px.support(), sz = pz.support();
    const std::vector<int> want{target[q]};
    if (sx != want || sz != want) {
      out.ok = false;
      std::ostringstream os;
      os << "site " << q << ": X -> " << px.str() << ", Z -> " << pz.str() << " (expected site "
         << target[q] << ")";
      out.failure = os.str();
      return out;
    }
    out.corrections.push_back("X->" + signed_name(px, target[q]) + " Z->" + signed_name(pz, target[q]));
  }
  return out;
}

SiteMapCheck check_mirror(const PulseProgram& p, const std::vector<int>& sites) {
  std::vector<int> target(p.n);
  for (int q = 0; q < p.n; ++q) target[q] = q;
  const int L = static_cast<int>(sites.size());
  for (int i = 0; i < L; ++i) target[sites[i]] = sites[L - 1 - i];
  return check_site_map(clifford_apply(p), target);
}

// ---- propagated swap --------------------------------------------------------------

namespace {

// CNOT(c -> t) with only the register locally addressable: conjugating the
// register-neighbour CZ by a global Hadamard on the impurities (H^2 = 1 on
// the others), or by a local Hadamard on the register.
PulseProgram register_swap(int n, const std::vector<int>& sites) {
  const std::vector<int> impurities(sites.begin() + 1, sites.end());
  const int reg = sites[0], nb = sites[1];
  PulseProgram hi{n, {GlobalHadamard{impurities}}};
  PulseProgram cnot_to_nb = hi;
  cnot_to_nb.then(GlobalCZ{{{reg, nb}}}).then(hi);
  PulseProgram cnot_to_reg{n, {Local{reg, LocalGate::H}, GlobalCZ{{{reg, nb}}}, Local{reg, LocalGate::H}}};
  PulseProgram p = cnot_to_nb;
  p.then(cnot_to_reg).then(cnot_to_nb);
  return p;
}

// Cyclic shift sites[i] -> sites[i+1], last -> first: mirror of the whole
// segment (register included) followed by a mirror of the impurities while
// the register is echoed.
PulseProgram shift_program(int n, const std::vector<int>& sites) {
  PulseProgram p = mirror_program(n, sites);
  p.then(mirror_program(n, std::vector<int>(sites.begin() + 1, sites.end())));
  return p;
}

}  // namespace

PulseProgram propagated_swap(int n, const std::vector<int>& sites, int k) {
  const int L = static_cast<int>(sites.size());
  if (L < 2) throw InputError("propagated swap needs a register and at least one impurity");
  if (k < 0 || k > L - 2) throw InputError("swap index out of range");
  const PulseProgram sigma = shift_program(n, sites);
  const PulseProgram back = inverse(sigma);
  // bring the pair (k, k+1) to (0, 1), swap there, carry it back
  PulseProgram p{n, {}};
  if (k > 0) p.then(repeat(back, k));
  p.then(register_swap(n, sites));
  if (k > 0) p.then(repeat(sigma, k));
  return p;
}

PulseProgram propagated_swap(int pair_index, int length) {
  if (length < 2) throw InputError("chain length must be >= 2");
  if (pair_index < 1 || pair_index >= length) throw InputError("pair index out of range");
  std::vector<int> sites(length);
  for (int i = 0; i < length; ++i) sites[i] = i;
  return propagated_swap(length, sites, pair_index - 1);
}

// ---- lattice --------------------------------------------------------------------

LatticeMap::LatticeMap(int rows, int cols, std::vector<SiteKind> kinds)
    : rows_(rows), cols_(cols), kinds_(std::move(kinds)) {
  if (rows < 1 || cols < 1 || static_cast<int>(kinds_.size()) != rows * cols)
    throw InputError("lattice dimensions do not match site list");
}

LatticeMap LatticeMap::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw InputError("empty lattice");
  const auto cols = lines[0].size();
  std::vector<SiteKind> kinds;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].size() != cols) throw InputError("lattice row " + std::to_string(r) + " has a different width");
    for (char ch : lines[r]) {
      switch (ch) {
        case 'R': kinds.push_back(SiteKind::Register); break;
        case '.': kinds.push_back(SiteKind::Impurity); break;
        case '#': kinds.push_back(SiteKind::Hole); break;
        default: throw InputError(std::string("unknown lattice character '") + ch + "'");
      }
    }
  }
  return LatticeMap(static_cast<int>(lines.size()), static_cast<int>(cols), std::move(kinds));
}

std::string LatticeMap::str() const {
  std::string s;
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      const auto k = kinds_[index(r, c)];
      s += k == SiteKind::Register ? 'R' : k == SiteKind::Impurity ? '.' : '#';
    }
    s += '\n';
  }
  return s;
}

std::vector<int> LatticeMap::run(int site) const {
  if (kinds_[site] == SiteKind::Hole) return {};
  const int r = row_of(site);
  int lo = col_of(site), hi = lo;
  while (lo > 0 && kinds_[index(r, lo - 1)] != SiteKind::Hole) --lo;
  while (hi + 1 < cols_ && kinds_[index(r, hi + 1)] != SiteKind::Hole) ++hi;
  std::vector<int> out;
  for (int c = lo; c <= hi; ++c) out.push_back(index(r, c));
  return out;
}

// ---- directed swaps ---------------------------------------------------------------

namespace {

std::vector<int> side_chain(const LatticeMap& lat, int reg, int step) {
  std::vector<int> out;
  const int r = lat.row_of(reg);
  for (int c = lat.col_of(reg) + step; c >= 0 && c < lat.cols(); c += step) {
    const int s = lat.index(r, c);
    if (lat.kind(s) != SiteKind::Impurity) break;
    out.push_back(s);
  }
  return out;
}

}  // namespace

DirectedSwaps directed_swap_programs(const LatticeMap& lat, int reg) {
  if (reg < 0 || reg >= lat.size() || lat.kind(reg) != SiteKind::Register)
    throw InputError("directed swaps need a register site");
  DirectedSwaps d;
  d.left = side_chain(lat, reg, -1);
  d.right = side_chain(lat, reg, +1);
  if (d.left.empty() || d.right.empty())
    throw DomainError("register needs impurity chains on both sides");
  const int n = lat.size();
  const int a = d.left[0], b = d.right[0];

  // Q_M: three-site mirror a - NV - b; the global Hadamard on the other row
  // impurities is applied four times and cancels.
  std::vector<int> row_imp;
  for (int c = 0; c < lat.cols(); ++c) {
    const int s = lat.index(lat.row_of(reg), c);
    if (lat.kind(s) == SiteKind::Impurity) row_imp.push_back(s);
  }
  std::vector<int> h_sites = row_imp;
  h_sites.push_back(reg);
  PulseProgram cycle{n, {GlobalCZ{{{a, reg}, {reg, b}}}, GlobalHadamard{h_sites}}};
  d.q_m = repeat(cycle, 4);
  std::vector<int> target(n);
  for (int q = 0; q < n; ++q) target[q] = q;
  std::swap(target[a], target[b]);
  if (auto c = check_site_map(clifford_apply(d.q_m), target); !c.ok)
    throw DomainError("Q_M verification failed: " + c.failure);

  // Q_L: both side chains cycle with the register idle; look for a count that
  // mirrors one chain while the other returns to itself.
  if (d.left.size() == d.right.size()) throw DomainError("asymmetry unavailable: equal side chains");
  PulseProgram merged{n, {}};
  {
    GlobalCZ cz;
    std::vector<int> hs;
    for (const auto* seg : {&d.left, &d.right}) {
      for (std::size_t i = 0; i + 1 < seg->size(); ++i) cz.edges.emplace_back((*seg)[i], (*seg)[i + 1]);
      hs.insert(hs.end(), seg->begin(), seg->end());
    }
    merged.then(std::move(cz)).then(GlobalHadamard{hs});
  }
  auto mirrored = [&](const std::vector<int>& side) {
    std::vector<int> want(n);
    for (int q = 0; q < n; ++q) want[q] = q;
    for (std::size_t i = 0; i < side.size(); ++i) want[side[i]] = side[side.size() - 1 - i];
    return want;
  };
  const auto want_left = mirrored(d.left), want_right = mirrored(d.right);
  const int limit = 4 * static_cast<int>((d.left.size() + 1) * (d.right.size() + 1));
  Tableau t(n);
  for (int m = 1; m <= limit; ++m) {
    clifford_apply(t, merged);
    const bool l = check_site_map(t, want_left).ok, r = !l && check_site_map(t, want_right).ok;
    if (l || r) {
      d.q_l = repeat(merged, m);
      d.q_l_cycles = m;
      d.q_l_mirrors_left = l;
      return d;
    }
  }
  throw DomainError("asymmetry unavailable: no cycle count mirrors one side chain alone");
}

// ---- routing ----------------------------------------------------------------------

int RoutePlan::vertical_moves() const {
  return static_cast<int>(std::count_if(moves.begin(), moves.end(),
                                        [](const Move& m) { return m.kind == Move::Kind::InterRow; }));
}

namespace {

// Sites the propagated swap runs over for the in-row edge (a, b), register first.
std::optional<std::vector<int>> in_row_segment(const LatticeMap& lat, int a, int b) {
  const auto run = lat.run(a);
  std::optional<std::vector<int>> best;
  const int ca = lat.col_of(a), cb = lat.col_of(b);
  for (int s : run) {
    if (lat.kind(s) != SiteKind::Register) continue;
    const int cr = lat.col_of(s);
    std::vector<int> seg;
    if (cr <= std::min(ca, cb)) {
      for (int c = cr; c <= lat.col_of(run.back()); ++c) seg.push_back(lat.index(lat.row_of(s), c));
    } else if (cr >= std::max(ca, cb)) {
      for (int c = cr; c >= lat.col_of(run.front()); --c) seg.push_back(lat.index(lat.row_of(s), c));
    } else {
      continue;
    }
    // stop at the next register: it bounds this register's chain
    for (std::size_t i = 1; i < seg.size(); ++i)
      if (lat.kind(seg[i]) == SiteKind::Register && seg[i] != a && seg[i] != b) {
        seg.resize(i);
        break;
      }
    const bool covers = std::find(seg.begin(), seg.end(), a) != seg.end() &&
                        std::find(seg.begin(), seg.end(), b) != seg.end();
    if (covers && (!best || seg.size() < best->size())) best = seg;
  }
  return best;
}

PulseProgram vertical_swap(int n, int a, int b) {
  PulseProgram p{n, {}};
  auto cnot = [&](int c, int t) {
    p.then(Local{t, LocalGate::H}).then(GlobalCZ{{{c, t}}}).then(Local{t, LocalGate::H});
  };
  cnot(a, b);
  cnot(b, a);
  cnot(a, b);
  return p;
}

}  // namespace

RoutePlan route(const LatticeMap& lat, int src, int dst) {
  auto valid = [&](int s) { return s >= 0 && s < lat.size() && lat.kind(s) != SiteKind::Hole; };
  if (!valid(src) || !valid(dst)) throw InputError("route endpoints must be non-hole sites");
  RoutePlan plan;
  plan.program.n = lat.size();
  if (src == dst) return plan;

  using Cost = std::pair<int, int>;  // (moves, vertical moves)
  const Cost inf{1 << 30, 1 << 30};
  std::vector<Cost> dist(lat.size(), inf);
  std::vector<int> prev(lat.size(), -1);
  std::priority_queue<std::tuple<Cost, int>, std::vector<std::tuple<Cost, int>>, std::greater<>> pq;
  dist[src] = {0, 0};
  pq.emplace(dist[src], src);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d != dist[u]) continue;
    const int r = lat.row_of(u), c = lat.col_of(u);
    const std::pair<int, int> nbrs[4] = {{r, c - 1}, {r, c + 1}, {r - 1, c}, {r + 1, c}};
    for (int k = 0; k < 4; ++k) {
      const auto [rr, cc] = nbrs[k];
      if (rr < 0 || rr >= lat.rows() || cc < 0 || cc >= lat.cols()) continue;
      const int v = lat.index(rr, cc);
      if (!valid(v)) continue;
      const bool vertical = k >= 2;
      if (!vertical && !in_row_segment(lat, u, v)) continue;
      const Cost nd{d.first + 1, d.second + (vertical ? 1 : 0)};
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
        pq.emplace(nd, v);
      }
    }
  }
  if (dist[dst] == inf) throw DomainError("no route between the requested sites");

  std::vector<int> path;
  for (int v = dst; v != -1; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const int a = path[i], b = path[i + 1];
    Move m{lat.row_of(a) == lat.row_of(b) ? Move::Kind::InRow : Move::Kind::InterRow, a, b};
    if (m.kind == Move::Kind::InRow) {
      const auto seg = *in_row_segment(lat, a, b);
      const auto ia = std::find(seg.begin(), seg.end(), a) - seg.begin();
      const auto ib = std::find(seg.begin(), seg.end(), b) - seg.begin();
      plan.program.then(propagated_swap(lat.size(), seg, static_cast<int>(std::min(ia, ib))));
    } else {
      plan.program.then(vertical_swap(lat.size(), a, b));
    }
    plan.moves.push_back(m);
  }
  plan.layers = plan.program.layer_count();

  const Tableau t = clifford_apply(plan.program);
  const auto px = t.image_x(src).support(), pz = t.image_z(src).support();
  if (px != std::vector<int>{dst} || pz != std::vector<int>{dst})
    throw DomainError("compiled route does not carry the source qubit to the destination");
  return plan;
}

// ---- dense oracle -------------------------------------------------------------------

namespace {

using Amp = std::complex<double>;

void dense_h(std::vector<Amp>& v, int q) {
  const std::size_t b = std::size_t{1} << q;
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(i & b)) {
      const Amp a0 = v[i], a1 = v[i | b];
      v[i] = r * (a0 + a1);
      v[i | b] = r * (a0 - a1);
    }
}

void dense_local(std::vector<Amp>& v, int q, LocalGate g) {
  const std::size_t b = std::size_t{1} << q;
  const Amp i1(0, 1);
  if (g == LocalGate::H) return dense_h(v, q);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i & b) continue;
    Amp& a0 = v[i];
    Amp& a1 = v[i | b];
    switch (g) {
      case LocalGate::X: std::swap(a0, a1); break;
      case LocalGate::Y: {
        const Amp t0 = a0;
        a0 = -i1 * a1;
        a1 = i1 * t0;
        break;
      }
      case LocalGate::Z: a1 = -a1; break;
      case LocalGate::S: a1 *= i1; break;
      default: break;
    }
  }
}

void dense_pauli(std::vector<Amp>& v, const PauliString& p) {
  for (int q = 0; q < p.size(); ++q) {
    if (p.x[q] && p.z[q]) dense_local(v, q, LocalGate::Y);
    else if (p.x[q]) dense_local(v, q, LocalGate::X);
    else if (p.z[q]) dense_local(v, q, LocalGate::Z);
  }
  if (p.negative)
    for (auto& a : v) a = -a;
}

}  // namespace

void dense_apply(const PulseProgram& p, std::vector<Amp>& psi) {
  if (psi.size() != (std::size_t{1} << p.n)) throw InputError("state size does not match program");
  for (const auto& layer : p.layers) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, GlobalHadamard>) {
            for (int q : l.sites) dense_h(psi, q);
          } else if constexpr (std::is_same_v<T, GlobalCZ>) {
            for (auto [a, b] : l.edges) {
              const std::size_t m = (std::size_t{1} << a) | (std::size_t{1} << b);
              for (std::size_t i = 0; i < psi.size(); ++i)
                if ((i & m) == m) psi[i] = -psi[i];
            }
          } else if constexpr (std::is_same_v<T, Local>) {
            dense_local(psi, l.site, l.gate);
          } else {
            for (int k = 0; k < l.count; ++k) dense_apply(*l.block, psi);
          }
        },
        layer);
  }
}

DenseReport dense_unitary_check(const PulseProgram& p, std::uint64_t seed) {
  if (p.n > kDenseCap) throw ResourceError("dense check is capped at " + std::to_string(kDenseCap) + " qubits");
  const std::size_t dim = std::size_t{1} << p.n;
  const Tableau t = clifford_apply(p);
  DenseReport rep;
  rep.full_unitary = p.n <= 8;

  std::vector<std::vector<Amp>> probes;
  if (rep.full_unitary) {
    for (std::size_t j = 0; j < dim; ++j) {
      std::vector<Amp> e(dim, 0.0);
      e[j] = 1.0;
      probes.push_back(std::move(e));
    }
  } else {
    Philox4x32 rng(seed, 0);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 3; ++k) {
      std::vector<Amp> v(dim);
      for (auto& a : v) a = Amp(gauss(rng), gauss(rng));
      probes.push_back(std::move(v));
    }
  }
  std::vector<std::vector<Amp>> uv;
  for (auto v : probes) {
    dense_apply(p, v);
    uv.push_back(std::move(v));
  }
  for (int r = 0; r < 2 * p.n; ++r) {
    const PauliString img = t.row(r);
    const int q = r % p.n;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      // U P v
      auto lhs = probes[k];
      dense_local(lhs, q, r < p.n ? LocalGate::X : LocalGate::Z);
      dense_apply(p, lhs);
      // Q U v
      auto rhs = uv[k];
      dense_pauli(rhs, img);
      double dev = 0;
      for (std::size_t i = 0; i < dim; ++i) dev = std::max(dev, std::abs(lhs[i] - rhs[i]));
      rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    ++rep.generators_checked;
  }
  return rep;
}

}  // namespace qst
