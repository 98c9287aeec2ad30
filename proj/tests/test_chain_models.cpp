#include "doctest.h"

#include "qst/chain_models.hpp"
#include "qst/errors.hpp"
#include "qst/philox.hpp"

#include <cmath>

using namespace qst;

TEST_CASE("philox known answers") {
  using P = Philox4x32;
  const auto a = P::block({0, 0, 0, 0}, {0, 0});
  CHECK(a == P::counter_type{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto b = P::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u});
  CHECK(b == P::counter_type{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
}

TEST_CASE("philox streams are independent and reproducible") {
  Philox4x32 x(7, 1), y(7, 1), z(7, 2);
  bool differ = false;
  for (int i = 0; i < 16; ++i) {
    const auto u = x(), v = y(), w = z();
    CHECK(u == v);
    differ |= u != w;
  }
  CHECK(differ);
}

TEST_CASE("engineered couplings") {
  const auto j = engineered_couplings(4);
  REQUIRE(j.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(j[i] == doctest::Approx(0.5 * std::sqrt((i + 1.0) * (5 - i))));
  ChainSpec s;
  s.n = 4;
  s.pattern = Engineered{};
  const RMat K = build_single_particle_matrix(s);
  CHECK(K(0, 1) == doctest::Approx(j[0]));
  CHECK(K(4, 5) == doctest::Approx(j[4]));
  // linear spectrum k - (N+1)/2
  Eigen::SelfAdjointEigenSolver<RMat> es(K);
  for (int k = 0; k < 6; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(k - 2.5));
}

TEST_CASE("uniform chain with registers") {
  ChainSpec s;
  s.n = 3;
  s.g_left = 0.2;
  s.g_right = 0.3;
  s.register_field = 0.1;
  s.register_field_right = -0.1;
  s.field = 0.05;
  const RMat K = build_single_particle_matrix(s);
  REQUIRE(K.rows() == 5);
  CHECK(K(0, 1) == 0.2);
  CHECK(K(3, 4) == 0.3);
  CHECK(K(1, 2) == 1.0);
  CHECK(K(0, 0) == 0.1);
  CHECK(K(4, 4) == -0.1);
  CHECK(K(2, 2) == 0.05);
  CHECK(K(0, 2) == 0.0);
  CHECK((K - K.transpose()).norm() == 0.0);
}

TEST_CASE("cube-law couplings and range rules") {
  const std::vector<double> x{0, 10, 20, 40};
  const auto nn = couplings_from_positions(x, RangeRule::NearestNeighbor, 1.0, 10.0);
  CHECK(nn(0, 1) == doctest::Approx(1.0));
  CHECK(nn(2, 3) == doctest::Approx(0.125));
  CHECK(nn(0, 2) == 0.0);
  const auto dip = couplings_from_positions(x, RangeRule::FullDipolar, 1.0, 10.0);
  CHECK(dip(0, 2) == doctest::Approx(0.125));
  CHECK(dip(0, 3) == doctest::Approx(1.0 / 64));
  const auto nnn = couplings_from_positions(x, RangeRule::NNNCancelled, 1.0, 10.0);
  CHECK(nnn(0, 2) == 0.0);
  CHECK(nnn(1, 3) == 0.0);
  CHECK(nnn(0, 3) == doctest::Approx(1.0 / 64));
  CHECK(nnn(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("register gaps rescale end couplings unless frozen") {
  ChainSpec s;
  s.n = 2;
  s.g_left = s.g_right = 0.5;
  s.pattern = FromPositions{{0, 20, 30, 35}, RangeRule::NearestNeighbor, false};
  auto [gl, gr] = effective_register_couplings(s);
  CHECK(gl == doctest::Approx(0.5 * 0.125));
  CHECK(gr == doctest::Approx(0.5 * 8.0));
  s.pattern = FromPositions{{0, 20, 30, 35}, RangeRule::NearestNeighbor, true};
  std::tie(gl, gr) = effective_register_couplings(s);
  CHECK(gl == 0.5);
  CHECK(gr == 0.5);
}

TEST_CASE("disorder sampling") {
  DisorderSpec d{10.0, 3.0, 0.2, 42};
  const auto a = sample_positions(d, 30, 5), b = sample_positions(d, 30, 5), c = sample_positions(d, 30, 6);
  CHECK(a.x == b.x);
  CHECK(a.x != c.x);
  for (double g : a.gaps()) CHECK(g >= 2.0);
  d.sigma_d = 0;
  for (double g : sample_positions(d, 5, 0).gaps()) CHECK(g == 10.0);
}

TEST_CASE("chain spec validation") {
  ChainSpec s;
  s.n = 0;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.n = 3;
  s.pattern = Explicit{{1.0}};
  CHECK_THROWS_AS(build_single_particle_matrix(s), InputError);
  s.pattern = FromPositions{{0, 2, 1}};
  CHECK_THROWS_AS(s.validate(), InputError);
  s.pattern = Uniform{};
  s.g_left = -1;
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("bdg matrix is symmetric with particle-hole structure") {
  ChainSpec s;
  s.kind = ModelKind::TFIM;
  s.n = 5;
  s.field = 0.7;
  const RMat A = build_bdg_matrix(s);
  REQUIRE(A.rows() == 10);
  CHECK((A - A.transpose()).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<RMat> es(A);
  for (int k = 0; k < 5; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(-es.eigenvalues()(9 - k)));
}
