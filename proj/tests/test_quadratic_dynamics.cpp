#include "doctest.h"

#include "qst/errors.hpp"
#include "qst/quadratic_dynamics.hpp"

#include <algorithm>
#include <numbers>

using namespace qst;

namespace {

RMat uniform_k(int n, double g, double field = 0.0) {
  ChainSpec s;
  s.n = n;
  s.g_left = s.g_right = g;
  s.register_field = s.register_field_right = field;
  return build_single_particle_matrix(s);
}

}  // namespace

TEST_CASE("propagator is unitary, symmetric and composes") {
  const RMat K = uniform_k(7, 0.4, 0.1);
  const CMat a = propagator(K, 1.3).M, b = propagator(K, 2.1).M, ab = propagator(K, 3.4).M;
  CHECK((a * a.adjoint() - CMat::Identity(9, 9)).norm() < 1e-12);
  CHECK((a - a.transpose()).norm() < 1e-12);
  CHECK((a * b - ab).norm() < 1e-12);
  CHECK((propagator(K, 0).M - CMat::Identity(9, 9)).norm() < 1e-14);
}

TEST_CASE("spectral propagator matches the dense one") {
  const RMat K = uniform_k(6, 0.7);
  const SpectralPropagator P(K);
  const CMat M = propagator(K, 4.2).M;
  CHECK((P.at(4.2).M - M).norm() < 1e-12);
  CHECK(std::abs(P.element(0, 7, 4.2) - M(0, 7)) < 1e-13);
}

TEST_CASE("eigenmodes are orthonormal with positive leading entries") {
  const auto m = eigenmodes(uniform_k(5, 0.3));
  CHECK((m.vectors.transpose() * m.vectors - RMat::Identity(7, 7)).norm() < 1e-12);
  CHECK(std::is_sorted(m.energies.data(), m.energies.data() + 7));
  for (int k = 0; k < 7; ++k) {
    Eigen::Index i;
    m.vectors.col(k).cwiseAbs().maxCoeff(&i);
    CHECK(m.vectors(i, k) > 0);
  }
}

TEST_CASE("participation ratio") {
  CHECK(participation_ratio(RVec::Unit(5, 2)) == doctest::Approx(1.0));
  CHECK(participation_ratio(RVec::Constant(4, 0.5)) == doctest::Approx(4.0));
  ChainSpec s;
  s.n = 11;
  const auto m = eigenmodes(chain_couplings(s));
  CHECK(participation_ratio(m.vectors.col(0)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("resonant mode selection") {
  ChainSpec s;
  s.n = 5;
  const auto m = eigenmodes(chain_couplings(s));
  const auto c = matched_choice(m, 2, 0.01);  // zero mode of an odd chain
  CHECK(m.energies(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.g_left == doctest::Approx(0.01));
  CHECK(c.tau == doctest::Approx(std::numbers::pi / (std::numbers::sqrt2 * c.t_z)));
  CHECK(is_transfer_candidate(m, 2));
  const auto best = select_resonant_mode(m, 0.01, FixedMode{1});
  CHECK(best.z == 1);
}

TEST_CASE("weak coupling through the zero mode swaps the registers") {
  const int n = 9;
  ChainSpec s;
  s.n = n;
  const auto m = eigenmodes(chain_couplings(s));
  const auto c = matched_choice(m, 4, 0.005);
  const CMat M = propagator(uniform_k(n, 0.005), c.tau).M;
  CHECK(std::abs(M(0, n + 1)) > 0.999);
}

TEST_CASE("bdg spectrum reproduces the transverse-field Ising model") {
  const int n = 4;
  const double B = 0.7;
  ChainSpec s;
  s.kind = ModelKind::TFIM;
  s.n = n;
  s.field = B;
  const auto d = bdg_diagonalize(build_bdg_matrix(s));
  REQUIRE(d.modes() == n);
  // dense H = -sum sx sx - B sum sz
  const int D = 1 << n;
  RMat H = RMat::Zero(D, D);
  for (int x = 0; x < D; ++x) {
    for (int i = 0; i < n; ++i) H(x, x) -= B * ((x >> i & 1) ? 1 : -1);
    for (int i = 0; i + 1 < n; ++i) H(x ^ (3 << i), x) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(H);
  std::vector<double> q;
  for (int mask = 0; mask < D; ++mask) {
    double e = 0;
    for (int k = 0; k < n; ++k) e += ((mask >> k & 1) ? 1.0 : -1.0) * d.energy(k);  // quasiparticle k costs 2 e_k
    q.push_back(e);
  }
  std::sort(q.begin(), q.end());
  for (int i = 0; i < D; ++i) CHECK(es.eigenvalues()(i) == doctest::Approx(q[i]).epsilon(1e-10));
  // transformation is orthogonal
  CHECK((d.O * d.O.transpose() - RMat::Identity(2 * n, 2 * n)).norm() < 1e-12);
}

TEST_CASE("paramagnetic TFIM swaps, Majorana zero mode does not") {
  ChainSpec s;
  s.kind = ModelKind::TFIM;
  s.n = 8;
  s.g_left = s.g_right = 0.02;
  s.field = 2.0;
  CHECK(bdg_effective_swap_check(s, 0).exchange_amplitude > 0.99);
  s.field = 0.3;
  CHECK(bdg_effective_swap_check(s, 0).exchange_amplitude < 1e-3);
}

TEST_CASE("bosonic thermal error vanishes for a perfect swap") {
  CMat M = CMat::Zero(3, 3);
  M(2, 0) = M(0, 2) = -1;
  M(1, 1) = 1;
  const std::vector<double> occ{4.0, 0.0};
  const auto r = bosonic_swap_and_thermal_error(M, 1.0, occ);
  CHECK(r.eps == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(r.n_out == doctest::Approx(1.0));
}
