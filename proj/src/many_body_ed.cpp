#include "qst/many_body_ed.hpp"

#include "qst/errors.hpp"
#include "qst/numeric.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

namespace qst {

namespace {

using Mask = std::uint32_t;

std::vector<Mask> sector_basis(int n, int w) {
  std::vector<Mask> out;
  for (Mask x = 0; x < (Mask{1} << n); ++x)
    if (std::popcount(x) == w) out.push_back(x);
  return out;
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void check_cap(int n, int cap) {
  if (n < 1) throw InputError("need at least one qubit");
  if (n > cap || n > 24) {
    std::ostringstream os;
    os << n << " qubits exceeds the exact-diagonalization cap of " << cap << " (needs about "
       << many_body_memory_bytes(n) / 1e9 << " GB)";
    throw ResourceError(os.str());
  }
}

// Pauli matrices in the (down = 0, up = 1) basis.
const std::array<Eigen::Matrix2cd, 3>& paulis() {
  static const std::array<Eigen::Matrix2cd, 3> p = [] {
    const cplx i(0, 1);
    Eigen::Matrix2cd x, y, z;
    x << 0, 1, 1, 0;
    y << 0, i, -i, 0;
    z << -1, 0, 0, 1;
    return std::array<Eigen::Matrix2cd, 3>{x, y, z};
  }();
  return p;
}

// out[s][s'] (2x2 over output alpha, beta) accumulated over rest configs.
struct OutputBlocks {
  std::array<CompensatedComplexSum, 16> acc;

  void add(const CVec& phi0, const CVec& phi1, int output, double weight) {
    const Mask bit = Mask{1} << output;
    const CVec* phi[2] = {&phi0, &phi1};
    std::array<cplx, 16> local{};
    const auto dim = static_cast<Mask>(phi0.size());
    for (Mask r = 0; r < dim; ++r) {
      if (r & bit) continue;
      const Mask rr[2] = {r, r | bit};
      for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              local[((s * 2 + sp) * 2 + a) * 2 + b] += (*phi[s])(rr[a]) * std::conj((*phi[sp])(rr[b]));
    }
    for (int k = 0; k < 16; ++k) acc[k].add(weight * local[k]);
  }

  PauliTransfer transfer() const {
    PauliTransfer T;
    const auto& P = paulis();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        cplx t = 0;
        for (int s = 0; s < 2; ++s)
          for (int sp = 0; sp < 2; ++sp)
            for (int al = 0; al < 2; ++al)
              for (int be = 0; be < 2; ++be)
                t += P[b](s, sp) * P[a](be, al) * acc[((s * 2 + sp) * 2 + al) * 2 + be].value();
        T(a, b) = t.real();
      }
    return T;
  }
};

ExactChannelResult finish(const PauliTransfer& T, const Eigen::Matrix2cd& V, std::string model,
                          std::chrono::steady_clock::time_point start) {
  ExactChannelResult r;
  r.transfer = T;
  r.traces = {T(0, 0), T(1, 1), T(2, 2)};
  r.fidelity = fidelity_from_transfer(T, V);
  r.phase_corrected = phase_corrected_fidelity(T);
  r.model = std::move(model);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

double many_body_memory_bytes(int n) {
  double entries = 0;
  for (int w = 0; w <= n; ++w) entries += binomial(n, w) * binomial(n, w);
  // real block + real eigenvectors + complex unitary
  return entries * (8 + 8 + 16) + std::ldexp(4.0, n);
}

SectorHamiltonian build_many_body(const CouplingMap& J, int n, int cap) {
  check_cap(n, cap);
  if (J.rows() != n || J.cols() != n) throw InputError("coupling map size does not match qubit count");
  if ((J - J.transpose()).cwiseAbs().maxCoeff() > 0) throw InputError("coupling map must be symmetric");
  SectorHamiltonian H;
  H.n = n;
  H.position.assign(std::size_t{1} << n, 0);
  H.sectors.resize(n + 1);
  for (int w = 0; w <= n; ++w) {
    auto& sec = H.sectors[w];
    sec.basis = sector_basis(n, w);
    for (std::size_t k = 0; k < sec.basis.size(); ++k) H.position[sec.basis[k]] = static_cast<Mask>(k);
  }
  for (int w = 0; w <= n; ++w) {
    auto& sec = H.sectors[w];
    const auto d = static_cast<Eigen::Index>(sec.basis.size());
    sec.block = RMat::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const Mask x = sec.basis[k];
      double diag = 0;
      for (int i = 0; i < n; ++i)
        if (x >> i & 1) diag += J(i, i);
      sec.block(k, k) = diag;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          if (J(i, j) == 0.0 || ((x >> i) & 1) == ((x >> j) & 1)) continue;
          const Mask y = x ^ (Mask{1} << i) ^ (Mask{1} << j);
          sec.block(H.position[y], k) += J(i, j);
        }
    }
  }
  return H;
}

SectorSpectrum diagonalize(const SectorHamiltonian& H) {
  SectorSpectrum S;
  S.n = H.n;
  for (const auto& sec : H.sectors) {
    Eigen::SelfAdjointEigenSolver<RMat> es(sec.block);
    if (es.info() != Eigen::Success) throw DomainError("sector eigensolver failed");
    S.energies.push_back(es.eigenvalues());
    S.vectors.push_back(es.eigenvectors());
  }
  return S;
}

SectorUnitaries exact_unitary(const SectorSpectrum& S, double t) {
  if (t < 0) throw InputError("evolution time must be non-negative");
  SectorUnitaries U;
  U.n = S.n;
  for (std::size_t w = 0; w < S.vectors.size(); ++w) {
    const auto& E = S.energies[w];
    CVec ph(E.size());
    for (Eigen::Index k = 0; k < E.size(); ++k) ph(k) = std::polar(1.0, -E(k) * t);
    const CMat V = S.vectors[w].cast<cplx>();
    U.blocks.push_back(V * ph.asDiagonal() * V.transpose());
  }
  return U;
}

SectorUnitaries exact_unitary(const SectorHamiltonian& H, double t) {
  return exact_unitary(diagonalize(H), t);
}

RVec many_body_spectrum(const SectorSpectrum& S) {
  std::vector<double> all;
  for (const auto& e : S.energies) all.insert(all.end(), e.data(), e.data() + e.size());
  std::sort(all.begin(), all.end());
  return Eigen::Map<RVec>(all.data(), static_cast<Eigen::Index>(all.size()));
}

void apply_circuit(const Circuit& c, CMat& psi) {
  const Mask dim = Mask{1} << c.n;
  if (psi.rows() != static_cast<Eigen::Index>(dim)) throw InputError("state dimension mismatch");
  auto check_qubit = [&](int q) {
    if (q < 0 || q >= c.n) throw InputError("qubit index out of range");
  };
  for (const auto& step : c.steps) {
    if (const auto* e = std::get_if<EvolveStep>(&step)) {
      const int m = static_cast<int>(e->qubits.size());
      Mask used = 0;
      for (int q : e->qubits) {
        check_qubit(q);
        used |= Mask{1} << q;
      }
      if (e->unitary->n != m) throw InputError("unitary size does not match its qubit list");
      std::vector<Mask> l2g(std::size_t{1} << m, 0);
      for (Mask x = 0; x < l2g.size(); ++x)
        for (int k = 0; k < m; ++k)
          if (x >> k & 1) l2g[x] |= Mask{1} << e->qubits[k];
      std::vector<Mask> idle_bases;
      for (Mask x = 0; x < dim; ++x)
        if ((x & used) == 0) idle_bases.push_back(x);
      for (int w = 0; w <= m; ++w) {
        const auto basis = sector_basis(m, w);
        const CMat& U = e->unitary->blocks[w];
        const auto d = static_cast<Eigen::Index>(basis.size());
        CMat G(d, psi.cols());
        for (Mask base : idle_bases) {
          for (Eigen::Index k = 0; k < d; ++k) G.row(k) = psi.row(base | l2g[basis[k]]);
          const CMat out = U * G;
          for (Eigen::Index k = 0; k < d; ++k) psi.row(base | l2g[basis[k]]) = out.row(k);
        }
      }
    } else if (const auto* g = std::get_if<CnotStep>(&step)) {
      check_qubit(g->control);
      check_qubit(g->target);
      if (g->control == g->target) throw InputError("CNOT control equals target");
      const Mask cb = Mask{1} << g->control, tb = Mask{1} << g->target;
      const Mask want = g->on_down ? 0 : cb;
      for (Mask x = 0; x < dim; ++x)
        if ((x & cb) == want && !(x & tb)) psi.row(x).swap(psi.row(x | tb));
    } else {
      const auto& p = std::get<PauliStep>(step);
      check_qubit(p.qubit);
      const Mask b = Mask{1} << p.qubit;
      const cplx i(0, 1);
      for (Mask x = 0; x < dim; ++x) {
        if (x & b) continue;
        switch (p.pauli) {
          case 'x':
            psi.row(x).swap(psi.row(x | b));
            break;
          case 'y': {
            CVec lo = psi.row(x).transpose();
            psi.row(x) = i * psi.row(x | b);
            psi.row(x | b) = -i * lo.transpose();
            break;
          }
          case 'z':
            psi.row(x) *= -1.0;
            break;
          default:
            throw InputError("unknown Pauli label");
        }
      }
    }
  }
}

RestEnsemble product_ensemble(int n, int input, const std::vector<double>& p_up) {
  if (static_cast<int>(p_up.size()) != n) throw InputError("need one probability per qubit");
  RestEnsemble r;
  for (Mask x = 0; x < (Mask{1} << n); ++x) {
    if (x >> input & 1) continue;
    double w = 1;
    for (int q = 0; q < n; ++q) {
      if (q == input) continue;
      w *= (x >> q & 1) ? p_up[q] : 1.0 - p_up[q];
    }
    if (w > 0) {
      r.configs.push_back(x);
      r.weights.push_back(w);
    }
  }
  return r;
}

double fidelity_from_transfer(const PauliTransfer& T, const Eigen::Matrix2cd& V) {
  const auto& P = paulis();
  double s = 0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Matrix2cd rot = V * P[i] * V.adjoint();
    for (int a = 0; a < 3; ++a) s += 0.5 * (P[a] * rot).trace().real() * T(a, i);
  }
  return 0.5 + s / 12.0;
}

double phase_corrected_fidelity(const PauliTransfer& T) {
  return 0.5 + (T(2, 2) + std::hypot(T(0, 0) + T(1, 1), T(0, 1) - T(1, 0))) / 12.0;
}

ExactChannelResult channel_fidelity(const Circuit& c, const ChannelSetup& setup) {
  const auto start = std::chrono::steady_clock::now();
  const Mask dim = Mask{1} << c.n;
  const Mask in_bit = Mask{1} << setup.input;
  OutputBlocks out;
  constexpr std::size_t chunk = 64;
  const auto& cfg = setup.rest.configs;
  for (std::size_t lo = 0; lo < cfg.size(); lo += chunk) {
    const std::size_t hi = std::min(cfg.size(), lo + chunk);
    CMat psi = CMat::Zero(dim, static_cast<Eigen::Index>(2 * (hi - lo)));
    for (std::size_t k = lo; k < hi; ++k) {
      if (cfg[k] & in_bit) throw InputError("rest configuration sets the input qubit");
      psi(cfg[k], 2 * (k - lo)) = 1.0;
      psi(cfg[k] | in_bit, 2 * (k - lo) + 1) = 1.0;
    }
    apply_circuit(c, psi);
    for (std::size_t k = lo; k < hi; ++k)
      out.add(psi.col(2 * (k - lo)), psi.col(2 * (k - lo) + 1), setup.output, setup.rest.weights[k]);
  }
  return finish(out.transfer(), setup.target, "circuit", start);
}

EncodedQubits encoded_layout(int n_chain) {
  EncodedQubits q{0, 1, n_chain + 2, n_chain + 3, {}};
  for (int i = 0; i < n_chain; ++i) q.chain.push_back(2 + i);
  return q;
}

Circuit encoded_protocol_unitary(const ProtocolSpec& p, int cap) {
  const int n = p.total_qubits();
  check_cap(n, cap);
  const int m = p.n_chain + 2;
  if (p.leg_a.J.rows() != m || p.leg_b.J.rows() != m)
    throw InputError("leg couplings must be (N+2)x(N+2)");
  const auto q = encoded_layout(p.n_chain);
  std::vector<int> sub_a{q.a0}, sub_b{q.b0};
  for (int s : q.chain) {
    sub_a.push_back(s);
    sub_b.push_back(s);
  }
  sub_a.push_back(q.an);
  sub_b.push_back(q.bn);
  auto ua = std::make_shared<const SectorUnitaries>(exact_unitary(build_many_body(p.leg_a.J, m, cap), p.leg_a.t));
  auto ub = std::make_shared<const SectorUnitaries>(exact_unitary(build_many_body(p.leg_b.J, m, cap), p.leg_b.t));
  Circuit c;
  c.n = n;
  c.steps.push_back(CnotStep{q.a0, q.b0, true});
  c.steps.push_back(EvolveStep{sub_a, ua, "U_a"});
  c.steps.push_back(EvolveStep{sub_b, ub, "U_b"});
  if (p.decode == DecodeTarget::PairB)
    c.steps.push_back(CnotStep{q.bn, q.an, true});
  else
    c.steps.push_back(CnotStep{q.an, q.bn, true});
  return c;
}

ChannelSetup encoded_channel_setup(int n_chain, DecodeTarget decode) {
  const auto q = encoded_layout(n_chain);
  ChannelSetup s;
  s.input = q.a0;
  s.output = decode == DecodeTarget::PairB ? q.bn : q.an;
  const double w = std::ldexp(0.5, -n_chain);
  for (Mask c = 0; c < (Mask{1} << n_chain); ++c)
    for (Mask pr = 0; pr < 2; ++pr) {
      Mask x = Mask{1} << q.b0;
      x |= c << 2;
      if (pr) x |= (Mask{1} << q.bn) | (Mask{1} << q.an);
      s.rest.configs.push_back(x);
      s.rest.weights.push_back(w);
    }
  return s;
}

EncodedEvaluator::EncodedEvaluator(int n_chain, const CouplingMap& J, DecodeTarget decode, int cap)
    : n_chain_(n_chain), decode_(decode) {
  check_cap(n_chain + 4, cap);
  H_ = build_many_body(J, n_chain + 2, cap);
  S_ = diagonalize(H_);
}

ExactChannelResult EncodedEvaluator::at(double t_a, double t_b) const {
  const auto start = std::chrono::steady_clock::now();
  const int N = n_chain_;
  const int m = N + 2;
  const int n = N + 4;
  const Mask far = Mask{1} << (N + 1);
  const Mask chain_mask = (Mask{1} << N) - 1;
  const SectorUnitaries Ua = exact_unitary(S_, t_a);
  const SectorUnitaries Ub = exact_unitary(S_, t_b);
  const auto q = encoded_layout(N);
  const int output = decode_ == DecodeTarget::PairB ? q.bn : q.an;

  // groups[w][a0 + 2 a1]: sector indices whose register bits are (a0, a1)
  std::vector<std::array<std::vector<Eigen::Index>, 4>> groups(m + 1);
  for (int w = 0; w <= m; ++w) {
    const auto& basis = H_.sectors[w].basis;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const int a0 = basis[k] & 1, a1 = (basis[k] & far) ? 1 : 0;
      groups[w][a0 + 2 * a1].push_back(static_cast<Eigen::Index>(k));
    }
  }

  OutputBlocks out;
  const double weight = std::ldexp(0.5, -N);
  CVec phi[2] = {CVec(Mask{1} << n), CVec(Mask{1} << n)};
  for (Mask p = 0; p < 2; ++p) {
    for (int k = 0; k <= N; ++k) {
      std::vector<Mask> C;
      for (Mask c = 0; c <= chain_mask; ++c)
        if (std::popcount(c) == k) C.push_back(c);
      const auto nc = static_cast<Eigen::Index>(C.size());
      // result[s][g] = (sector weight of the b-leg, amplitudes d_b x nc)
      std::array<std::array<std::pair<int, CMat>, 4>, 2> result;
      for (Mask s = 0; s < 2; ++s) {
        const int wa = static_cast<int>(s + p) + k;
        const CMat& UA = Ua.blocks[wa];
        CMat vin(UA.rows(), nc);
        for (Eigen::Index j = 0; j < nc; ++j) {
          const Mask xa = s | (C[j] << 1) | (p ? far : 0);
          vin.col(j) = UA.col(H_.position[xa]);
        }
        for (int g = 0; g < 4; ++g) {
          const auto& G = groups[wa][g];
          const int a0 = g & 1, a1 = g >> 1;
          const int wb = static_cast<int>(s + p) + wa - a0 - a1;
          auto& slot = result[s][g];
          slot.first = wb;
          if (G.empty()) {
            slot.second.resize(0, 0);
            continue;
          }
          const CMat& UB = Ub.blocks[wb];
          CMat ucols(UB.rows(), static_cast<Eigen::Index>(G.size()));
          CMat vg(static_cast<Eigen::Index>(G.size()), nc);
          for (std::size_t r = 0; r < G.size(); ++r) {
            const Mask ya = H_.sectors[wa].basis[G[r]];
            const Mask xb = s | (((ya >> 1) & chain_mask) << 1) | (p ? far : 0);
            ucols.col(static_cast<Eigen::Index>(r)) = UB.col(H_.position[xb]);
            vg.row(static_cast<Eigen::Index>(r)) = vin.row(G[r]);
          }
          slot.second.noalias() = ucols * vg;
        }
      }
      for (Eigen::Index j = 0; j < nc; ++j) {
        for (int s = 0; s < 2; ++s) {
          phi[s].setZero();
          for (int g = 0; g < 4; ++g) {
            const auto& [wb, amp] = result[s][g];
            if (amp.size() == 0) continue;
            const auto& basis = H_.sectors[wb].basis;
            const Mask a0 = g & 1, a1 = g >> 1;
            for (Eigen::Index z = 0; z < amp.rows(); ++z) {
              Mask x = a0 | (basis[z] << 1) | (a1 << q.an);
              if (decode_ == DecodeTarget::PairB) {
                if (!(x >> q.bn & 1)) x ^= Mask{1} << q.an;
              } else {
                if (!(x >> q.an & 1)) x ^= Mask{1} << q.bn;
              }
              phi[s](x) += amp(z, j);
            }
          }
        }
        out.add(phi[0], phi[1], output, weight);
      }
    }
  }
  return finish(out.transfer(), Eigen::Matrix2cd::Identity(), "encoded", start);
}

ExactChannelResult exact_channel_fidelity(const ProtocolSpec& p, int cap) {
  ExactChannelResult r;
  if (p.leg_a.J.rows() == p.leg_b.J.rows() && p.leg_a.J == p.leg_b.J) {
    r = EncodedEvaluator(p.n_chain, p.leg_a.J, p.decode, cap).at(p.leg_a.t, p.leg_b.t);
  } else {
    r = channel_fidelity(encoded_protocol_unitary(p, cap), encoded_channel_setup(p.n_chain, p.decode));
  }
  r.model = p.model;
  return r;
}

}  // namespace qst
