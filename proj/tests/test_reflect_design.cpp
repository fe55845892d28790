#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "irsalloc/power_alloc.hpp"
#include "irsalloc/reflect_design.hpp"
#include "irsalloc/rng.hpp"

using namespace irsalloc;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

namespace {

ChannelRealization make_chan(int n, int k, int m) {
  ChannelRealization c;
  c.n_channels = n;
  c.n_users = k;
  c.n_elements = m;
  c.h = Eigen::MatrixXcd::Zero(n, k);
  c.g.assign(n, Eigen::MatrixXcd::Zero(m, k));
  c.f.assign(n, VectorXcd::Zero(m));
  c.f_los.assign(n, VectorXcd::Zero(m));
  c.f_nlos.assign(n, VectorXcd::Zero(m));
  return c;
}

void finalize_zrows(ChannelRealization& c) {
  c.zrows.assign(c.n_channels, Eigen::MatrixXcd::Zero(c.n_users, c.n_elements));
  for (int n = 0; n < c.n_channels; ++n)
    for (int u = 0; u < c.n_users; ++u)
      c.zrows[n].row(u) = c.g[n].col(u).adjoint() * c.f[n].asDiagonal();
}

Assignment block_assignment(const SystemConfig& cfg) {
  Assignment assign = Assignment::empty(cfg.n_channels, cfg.n_users);
  for (int k = 0; k < cfg.n_users; ++k) assign.add(k / cfg.per_channel_cap, k);
  return assign;
}

DecodingOrder ascending_order(const ChannelRealization& chan, const Assignment& assign,
                              const VectorXcd& e) {
  DecodingOrder order;
  order.seq.resize(assign.members.size());
  for (int n = 0; n < static_cast<int>(assign.members.size()); ++n) {
    order.seq[n] = assign.members[n];
    std::sort(order.seq[n].begin(), order.seq[n].end(), [&](int a, int b) {
      double ga = combined_gain(chan, n, a, e);
      double gb = combined_gain(chan, n, b, e);
      if (ga != gb) return ga < gb;
      return a < b;
    });
  }
  return order;
}

VectorXcd unit_phases(int m, std::uint64_t seed) {
  Rng rng(seed);
  VectorXcd e(m);
  for (int i = 0; i < m; ++i) e[i] = std::polar(1.0, rng.phase());
  return e;
}

}  // namespace

TEST_CASE("linearization data follows the fixed powers and targets") {
  auto chan = make_chan(2, 4, 2);
  for (int n = 0; n < 2; ++n)
    for (int k = 0; k < 4; ++k) {
      chan.h(n, k) = complex<double>(0.1 * (k + 1), -0.05 * n);
      chan.g[n].col(k) << complex<double>(0.3, 0.1 * k), complex<double>(-0.2, 0.05);
    }
  chan.f[0] << complex<double>(1.0, 0.0), complex<double>(0.0, 1.0);
  chan.f[1] << complex<double>(0.5, 0.5), complex<double>(1.0, 0.0);
  finalize_zrows(chan);

  SystemConfig cfg;
  cfg.noise_w = 0.5;
  Assignment assign = block_assignment(cfg);
  DecodingOrder order;
  order.seq = {{0, 1}, {2, 3}};
  LinkLayout lay = LinkLayout::from(assign, order);

  VectorXcd e = unit_phases(2, 3);
  VectorXd p(4), chi(4);
  p << 4.0, 2.0, 1.0, 3.0;
  chi << 1.0, 2.0, 0.5, 0.25;

  ReflectionSubproblem sub = refresh_linearization(chan, lay, e, p, chi, cfg);

  REQUIRE(sub.zr.rows() == 4);
  CHECK(sub.beta[0] == doctest::Approx(1.0 * 2.0 / 4.0));
  CHECK(sub.beta[1] == 0.0);
  CHECK(sub.beta[2] == doctest::Approx(0.5 * 3.0 / 1.0));
  CHECK(sub.beta[3] == 0.0);
  CHECK(sub.rhs[0] == doctest::Approx(1.0 * 0.5 / 4.0));
  CHECK(sub.rhs[3] == doctest::Approx(0.25 * 0.5 / 3.0));

  REQUIRE(sub.pairs.size() == 2);
  CHECK(sub.pairs[0] == std::pair<int, int>(0, 1));
  CHECK(sub.pairs[1] == std::pair<int, int>(2, 3));

  for (int a = 0; a < 4; ++a) {
    int n = lay.channel[a], k = lay.user[a];
    complex<double> amp = (chan.zrow(n, k) * e)(0) + chan.h(n, k);
    CHECK(sub.kappa_t[a] == doctest::Approx(amp.real()).epsilon(1e-14));
    CHECK(sub.xi_t[a] == doctest::Approx(amp.imag()).epsilon(1e-14));
    CHECK(sub.kappa_t[a] * sub.kappa_t[a] + sub.xi_t[a] * sub.xi_t[a] ==
          doctest::Approx(combined_gain(chan, n, k, e)).epsilon(1e-12));
  }
}

TEST_CASE("reflection rounds widen the slack monotonically") {
  SystemConfig cfg;
  ChannelRealization chan = sample_channels(cfg, 17);
  VectorXcd e0 = unit_phases(cfg.n_elements, 4);
  Assignment assign = block_assignment(cfg);
  DecodingOrder order = ascending_order(chan, assign, e0);

  Rng rng(13);
  PowerState ps = find_feasible(chan, assign, order, e0, cfg, rng);
  REQUIRE(ps.feasible);

  ReflectionState rs = optimize_reflection(chan, assign, order, e0, ps.p, ps.chi, cfg);
  REQUIRE(rs.feasible);
  CHECK(rs.rounds >= 1);
  CHECK(rs.slack > 0.0);
  CHECK(reflection_valid(rs.e));
  for (size_t i = 1; i < rs.trace.size(); ++i)
    CHECK(rs.trace[i] >= rs.trace[i - 1] * (1.0 - 1e-5));

  SUBCASE("every target stays deliverable at the fixed powers") {
    LinkLayout lay = LinkLayout::from(assign, order);
    for (int a = 0; a < lay.count(); ++a) {
      double g = combined_gain(chan, lay.channel[a], lay.user[a], rs.e);
      double interf = 0.0;
      for (int b = a + 1; b < lay.channel_end(lay.channel[a]); ++b) interf += ps.p[b];
      double sinr = ps.p[a] * g / (interf * g + cfg.noise_w);
      CHECK(sinr >= ps.chi[a] * (1.0 - 1e-9));
    }
  }

  SUBCASE("the decode-order gain gaps survive") {
    CHECK(sic_feasible(chan, assign, order, rs.e, 0.0));
  }
}

TEST_CASE("unreachable targets fall back to the input vector") {
  SystemConfig cfg;
  ChannelRealization chan = sample_channels(cfg, 17);
  VectorXcd e0 = unit_phases(cfg.n_elements, 4);
  Assignment assign = block_assignment(cfg);
  DecodingOrder order = ascending_order(chan, assign, e0);

  Rng rng(13);
  PowerState ps = find_feasible(chan, assign, order, e0, cfg, rng);
  REQUIRE(ps.feasible);

  VectorXd chi = ps.chi * 1e9;
  ReflectionState rs = optimize_reflection(chan, assign, order, e0, ps.p, chi, cfg);
  CHECK_FALSE(rs.feasible);
  CHECK(rs.rounds == 1);
  CHECK(rs.slack <= 0.0);
  for (int m = 0; m < cfg.n_elements; ++m) CHECK(rs.e[m] == e0[m]);
}

TEST_CASE("degenerate inputs are no-ops") {
  SUBCASE("no reflecting elements") {
    SystemConfig cfg;
    cfg.n_elements = 0;
    ChannelRealization chan = sample_channels(cfg, 2);
    Assignment assign = block_assignment(cfg);
    DecodingOrder order = ascending_order(chan, assign, VectorXcd());
    VectorXd p = VectorXd::Constant(4, 1e-3), chi = VectorXd::Constant(4, 0.1);
    ReflectionState rs = optimize_reflection(chan, assign, order, VectorXcd(), p, chi, cfg);
    CHECK(rs.feasible);
    CHECK(rs.rounds == 0);
    CHECK(rs.e.size() == 0);
  }

  SUBCASE("no assigned users") {
    SystemConfig cfg;
    ChannelRealization chan = sample_channels(cfg, 2);
    Assignment assign = Assignment::empty(cfg.n_channels, cfg.n_users);
    DecodingOrder order;
    order.seq.assign(cfg.n_channels, {});
    VectorXcd e0 = unit_phases(cfg.n_elements, 1);
    ReflectionState rs = optimize_reflection(chan, assign, order, e0, VectorXd(), VectorXd(), cfg);
    CHECK(rs.feasible);
    CHECK(rs.rounds == 0);
    for (int m = 0; m < cfg.n_elements; ++m) CHECK(rs.e[m] == e0[m]);
  }
}

TEST_CASE("single aligned user approaches the coherent ceiling") {
  auto chan = make_chan(1, 1, 4);
  chan.h(0, 0) = complex<double>(0.3, 0.0);
  for (int m = 0; m < 4; ++m) {
    chan.g[0].col(0)[m] = complex<double>(0.2, 0.1 * m);
    chan.f[0][m] = std::polar(1.0, 0.4 * m);
  }
  finalize_zrows(chan);

  SystemConfig cfg;
  cfg.n_channels = 1;
  cfg.n_users = 1;
  cfg.per_channel_cap = 1;
  cfg.n_elements = 4;
  Assignment assign = Assignment::empty(1, 1);
  assign.add(0, 0);
  DecodingOrder order;
  order.seq = {{0}};

  // Tiny target keeps the step feasible; the slack objective then drives the
  // gain toward full phase alignment.
  VectorXd p = VectorXd::Constant(1, 1.0);
  VectorXd chi = VectorXd::Constant(1, 1e-6);
  cfg.noise_w = 1e-9;

  VectorXcd e0 = unit_phases(4, 9);
  ReflectionState rs = optimize_reflection(chan, assign, order, e0, p, chi, cfg);
  REQUIRE(rs.feasible);

  double ceiling = std::abs(chan.h(0, 0));
  for (int m = 0; m < 4; ++m) ceiling += std::abs(chan.zrow(0, 0)[m]);
  double g = combined_gain(chan, 0, 0, rs.e);
  CHECK(g <= ceiling * ceiling * (1.0 + 1e-9));
  CHECK(g >= ceiling * ceiling * 0.999);
}
