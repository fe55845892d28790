#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "irsalloc/decode_order.hpp"
#include "irsalloc/rng.hpp"

using namespace irsalloc;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

namespace {

ChannelRealization make_chan(int n, int k, int m) {
  ChannelRealization c;
  c.n_channels = n;
  c.n_users = k;
  c.n_elements = m;
  c.h = MatrixXcd::Zero(n, k);
  c.g.assign(n, MatrixXcd::Zero(m, k));
  c.f.assign(n, VectorXcd::Zero(m));
  c.f_los.assign(n, VectorXcd::Zero(m));
  c.f_nlos.assign(n, VectorXcd::Zero(m));
  return c;
}

void finalize_zrows(ChannelRealization& c) {
  c.zrows.assign(c.n_channels, MatrixXcd::Zero(c.n_users, c.n_elements));
  for (int n = 0; n < c.n_channels; ++n)
    for (int u = 0; u < c.n_users; ++u)
      c.zrows[n].row(u) = c.g[n].col(u).adjoint() * c.f[n].asDiagonal();
}

Assignment block_assignment(const SystemConfig& cfg) {
  Assignment assign = Assignment::empty(cfg.n_channels, cfg.n_users);
  for (int k = 0; k < cfg.n_users; ++k) assign.add(k / cfg.per_channel_cap, k);
  return assign;
}

}  // namespace

TEST_CASE("lifted quadratic form reproduces the combined gains") {
  SystemConfig cfg;
  ChannelRealization chan = sample_channels(cfg, 23);
  Assignment assign = block_assignment(cfg);
  MatrixXcd v = build_v(chan, assign);
  int m = cfg.n_elements;

  REQUIRE(v.rows() == m + 1);
  CHECK((v - v.adjoint()).norm() <= 1e-12 * v.norm());

  SUBCASE("reference-only lifted vector picks out the direct links") {
    VectorXcd lifted = VectorXcd::Zero(m + 1);
    lifted[m] = 1.0;
    double direct = 0.0;
    for (int n = 0; n < cfg.n_channels; ++n)
      for (int k : assign.members[n]) direct += std::norm(chan.h(n, k));
    double quad = (lifted.adjoint() * v * lifted)(0).real();
    CHECK(quad == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("general lifted vector sums the per-user gains") {
    Rng rng(1);
    VectorXcd e(m);
    for (int i = 0; i < m; ++i) e[i] = std::polar(1.0, rng.phase());
    VectorXcd lifted(m + 1);
    lifted.head(m) = e;
    lifted[m] = 1.0;
    double total = 0.0;
    for (int n = 0; n < cfg.n_channels; ++n)
      for (int k : assign.members[n]) total += combined_gain(chan, n, k, e);
    double quad = (lifted.adjoint() * v * lifted)(0).real();
    CHECK(quad == doctest::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("phase reduction and randomization draws") {
  SUBCASE("phases are taken relative to the reference entry") {
    VectorXcd lifted(3);
    lifted << std::polar(2.0, 1.0), std::polar(0.5, -0.7), std::polar(3.0, 0.25);
    VectorXcd e = lifted_to_phases(lifted);
    REQUIRE(e.size() == 2);
    CHECK(std::abs(e[0]) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::arg(e[0]) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::arg(e[1]) == doctest::Approx(-0.95).epsilon(1e-12));
  }

  SUBCASE("draw norm equals the covariance trace") {
    Rng rng(3);
    MatrixXcd a = MatrixXcd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = complex<double>(rng.gaussian(), rng.gaussian());
    MatrixXcd cov = a * a.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(cov);
    for (int rep = 0; rep < 5; ++rep) {
      VectorXcd draw = randomized_lifted(eig.eigenvectors(), eig.eigenvalues(), rng);
      CHECK(draw.squaredNorm() == doctest::Approx(cov.trace().real()).epsilon(1e-10));
    }
  }
}

TEST_CASE("gain sorting puts the weak user first") {
  auto chan = make_chan(1, 2, 0);
  chan.h(0, 0) = 2.0;  // gain 4
  chan.h(0, 1) = 1.0;  // gain 1
  finalize_zrows(chan);
  Assignment assign = Assignment::empty(1, 2);
  assign.add(0, 0);
  assign.add(0, 1);

  DecodingOrder order = order_by_gain(chan, assign, VectorXcd());
  REQUIRE(order.seq[0].size() == 2);
  CHECK(order.seq[0][0] == 1);
  CHECK(order.seq[0][1] == 0);
  CHECK(order.position(0, 1) == 0);

  SUBCASE("equal gains fall back to index order") {
    chan.h(0, 0) = 1.0;
    DecodingOrder tie = order_by_gain(chan, assign, VectorXcd());
    CHECK(tie.seq[0][0] == 0);
    CHECK(tie.seq[0][1] == 1);
  }
}

TEST_CASE("single user gets a fully aligned selection") {
  auto chan = make_chan(1, 1, 4);
  chan.h(0, 0) = complex<double>(0.2, -0.3);
  for (int m = 0; m < 4; ++m) {
    chan.g[0].col(0)[m] = std::polar(0.3 + 0.1 * m, 0.8 * m);
    chan.f[0][m] = std::polar(1.0, -0.3 * m);
  }
  finalize_zrows(chan);

  SystemConfig cfg;
  cfg.n_channels = 1;
  cfg.n_users = 1;
  cfg.per_channel_cap = 1;
  cfg.n_elements = 4;
  Assignment assign = Assignment::empty(1, 1);
  assign.add(0, 0);

  Rng rng(5);
  OrderSelection sel = optimize_decoding_order(chan, assign, cfg, rng);

  double ceiling = std::abs(chan.h(0, 0));
  for (int m = 0; m < 4; ++m) ceiling += std::abs(chan.zrow(0, 0)[m]);
  CHECK(sel.rank_one);
  CHECK(sel.objective == doctest::Approx(ceiling * ceiling).epsilon(1e-6));
  CHECK(sel.order.seq[0] == std::vector<int>{0});
}

TEST_CASE("selection on a sampled scenario") {
  SystemConfig cfg;
  ChannelRealization chan = sample_channels(cfg, 31);
  Assignment assign = block_assignment(cfg);

  Rng rng(9);
  OrderSelection sel = optimize_decoding_order(chan, assign, cfg, rng);

  REQUIRE(sel.e.size() == cfg.n_elements);
  for (int m = 0; m < cfg.n_elements; ++m)
    CHECK(std::abs(sel.e[m]) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("order is ascending in gain, so successive decoding works") {
    CHECK(sic_feasible(chan, assign, sel.order, sel.e, 0.0));
    for (int n = 0; n < cfg.n_channels; ++n) {
      auto& seq = sel.order.seq[n];
      for (size_t i = 1; i < seq.size(); ++i)
        CHECK(combined_gain(chan, n, seq[i], sel.e) >=
              combined_gain(chan, n, seq[i - 1], sel.e));
    }
  }

  SUBCASE("objective recomputes from the returned vector") {
    double total = 0.0;
    for (int n = 0; n < cfg.n_channels; ++n)
      for (int k : assign.members[n]) total += combined_gain(chan, n, k, sel.e);
    CHECK(sel.objective == doctest::Approx(total).epsilon(1e-12));
  }

  SUBCASE("same seed reproduces the selection") {
    Rng rng2(9);
    OrderSelection sel2 = optimize_decoding_order(chan, assign, cfg, rng2);
    for (int m = 0; m < cfg.n_elements; ++m) CHECK(sel2.e[m] == sel.e[m]);
    CHECK(sel2.objective == sel.objective);
  }

  SUBCASE("forcing the randomization path still yields a unit-modulus winner") {
    SystemConfig hard = cfg;
    hard.solver.rank_one_tol = 1e-30;
    Rng rng3(9);
    OrderSelection sel3 = optimize_decoding_order(chan, assign, hard, rng3);
    CHECK(sel3.randomized == hard.solver.randomization_count);
    CHECK_FALSE(sel3.rank_one);
    for (int m = 0; m < cfg.n_elements; ++m)
      CHECK(std::abs(sel3.e[m]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sel3.objective >= sel.objective * (1.0 - 1e-9));
  }
}

TEST_CASE("selection beats the flat reflection on total gain") {
  SystemConfig cfg;
  Assignment assign;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ChannelRealization chan = sample_channels(cfg, 100 + seed);
    assign = block_assignment(cfg);
    Rng rng(seed);
    OrderSelection sel = optimize_decoding_order(chan, assign, cfg, rng);
    double flat = 0.0;
    VectorXcd ones = VectorXcd::Ones(cfg.n_elements);
    for (int n = 0; n < cfg.n_channels; ++n)
      for (int k : assign.members[n]) flat += combined_gain(chan, n, k, ones);
    if (sel.objective > flat) ++wins;
  }
  CHECK(wins >= 15);
}
