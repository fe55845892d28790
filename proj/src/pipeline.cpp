#include "irsalloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "irsalloc/decode_order.hpp"
#include "irsalloc/matching.hpp"
#include "irsalloc/power_alloc.hpp"
#include "irsalloc/reflect_design.hpp"
#include "irsalloc/rng.hpp"
#include "irsalloc/subsolvers.hpp"

namespace irsalloc {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// Substream slots of the per-run randomness. Variants draw what they need
// from the same slots, so runs at one seed stay paired: a random decoding
// order uses the slot of the relaxation step, and the phase init and the
// feasibility search are identical across variants.
constexpr std::uint64_t kOrderStream = 1;
constexpr std::uint64_t kPhaseStream = 2;
constexpr std::uint64_t kFeasStream = 3;

VectorXcd random_phases(int m, Rng& rng) {
  VectorXcd e(m);
  for (int i = 0; i < m; ++i) e[i] = std::polar(1.0, rng.phase());
  return e;
}

bool single_user_channels(const Assignment& assign) {
  for (const auto& members : assign.members)
    if (members.size() > 1) return false;
  return true;
}

MatrixXd to_power_matrix(const LinkLayout& layout, const VectorXd& p, int n_channels,
                         int n_users) {
  MatrixXd out = MatrixXd::Zero(n_channels, n_users);
  for (int a = 0; a < layout.count(); ++a) out(layout.channel[a], layout.user[a]) = p[a];
  return out;
}

// Final step for a fixed assignment and decoding order: find a feasible power
// point at e_init, then alternate power ascent and (when enabled) reflection
// refinement. The outer trace records the power-step objective, which cannot
// decrease: the reflection step keeps the current targets deliverable at the
// current powers, so every power step resumes from a point at least as good
// as the last one it produced.
Solution run_noma_alternation(const ChannelRealization& chan, const SystemConfig& cfg,
                              const Assignment& assign, const DecodingOrder& order,
                              const VectorXcd& e_init, bool refine_reflection,
                              std::uint64_t seed, std::string label) {
  Solution sol;
  sol.label = std::move(label);
  sol.mode = AccessMode::noma;
  sol.assign = assign;
  sol.order = order;
  sol.e = e_init;
  sol.p = MatrixXd::Zero(chan.n_channels, chan.n_users);
  sol.rates = MatrixXd::Zero(chan.n_channels, chan.n_users);
  if (assign.assigned_count() == 0) {
    sol.feasible = true;
    return sol;
  }

  Rng rng_feas = Rng::substream(seed, kFeasStream);
  PowerState ps = find_feasible(chan, assign, order, sol.e, cfg, rng_feas);
  if (!ps.feasible) return sol;

  const SolverOptions& opts = cfg.solver;
  double prev = 0.0;
  bool have_prev = false;
  for (int round = 1; round <= opts.max_outer_rounds; ++round) {
    ps = optimize_power(chan, assign, order, sol.e, ps, cfg);
    sol.outer_trace.push_back(ps.objective);
    sol.outer_rounds = round;
    bool converged = have_prev && std::abs(ps.objective - prev) <=
                                      opts.tol_outer * std::max(1.0, std::abs(prev));
    prev = ps.objective;
    have_prev = true;
    if (converged) break;
    if (refine_reflection && chan.n_elements > 0) {
      ReflectionState rs = optimize_reflection(chan, assign, order, sol.e, ps.p, ps.chi, cfg);
      if (rs.feasible) sol.e = rs.e;
    }
  }

  sol.p = to_power_matrix(ps.layout, ps.p, chan.n_channels, chan.n_users);
  sol.rates = rate_matrix(chan, assign, order, sol.p, sol.e, cfg.noise_w);
  sol.throughput = sol.rates.sum();
  // The power chain already guarantees the floor and the budget; successive
  // decoding can still break when no reflection round managed to sort the
  // gains along the imposed order.
  sol.feasible = sic_feasible(chan, assign, order, sol.e);
  return sol;
}

// Reflection refinement for orthogonal slots at fixed powers: maximizes the
// slack by which every powered link's gain exceeds its value at entry, so no
// slot's SNR can drop. Same relinearization loop as the joint design, with
// no interference terms and no ordering pairs.
VectorXcd refine_oma_reflection(const ChannelRealization& chan, const SystemConfig& cfg,
                                const std::vector<std::pair<int, int>>& slots,
                                const VectorXd& p, const VectorXcd& e_init) {
  std::vector<int> live;
  for (int i = 0; i < static_cast<int>(slots.size()); ++i)
    if (p[i] > 0.0) live.push_back(i);
  if (live.empty() || chan.n_elements == 0) return e_init;

  int a_count = static_cast<int>(live.size());
  ReflectionSubproblem sub;
  sub.zr.resize(a_count, chan.n_elements);
  sub.h.resize(a_count);
  sub.beta = VectorXd::Zero(a_count);
  sub.rhs.resize(a_count);
  sub.kappa_t.resize(a_count);
  sub.xi_t.resize(a_count);
  for (int i = 0; i < a_count; ++i) {
    auto [n, k] = slots[live[i]];
    sub.zr.row(i) = chan.zrow(n, k);
    sub.h[i] = chan.h(n, k);
    sub.rhs[i] = combined_gain(chan, n, k, e_init);  // chi * noise / p at the entry SNR
  }

  VectorXcd e = e_init;
  double prev_slack = 0.0;
  bool have_prev = false;
  for (int round = 1; round <= cfg.solver.max_reflect_rounds; ++round) {
    for (int i = 0; i < a_count; ++i) {
      std::complex<double> amp = (sub.zr.row(i) * e)(0) + sub.h[i];
      sub.kappa_t[i] = amp.real();
      sub.xi_t[i] = amp.imag();
    }
    ReflectionSolveResult res = solve_p6(sub, e, cfg.solver);
    if (!res.feasible) break;
    double step = (res.e - e).cwiseAbs().maxCoeff();
    e = res.e;
    bool converged = step < cfg.solver.tol_sca;
    if (have_prev && std::abs(res.slack - prev_slack) <=
                         cfg.solver.tol_sca * std::max(1.0, std::abs(res.slack)))
      converged = true;
    prev_slack = res.slack;
    have_prev = true;
    if (converged) break;
  }
  return e;
}

// Orthogonal benchmark for a fixed assignment: water-filled powers over all
// slots at equal time shares, alternated with reflection refinement. The
// trace records the filled objective each round; refilling after a gain
// improvement cannot lower it.
Solution run_oma(const ChannelRealization& chan, const SystemConfig& cfg,
                 const Assignment& assign, bool refine_reflection, std::uint64_t seed,
                 std::string label) {
  Solution sol;
  sol.label = std::move(label);
  sol.mode = AccessMode::oma;
  sol.assign = assign;
  sol.order.seq = assign.members;  // slot list only; nothing is decoded successively
  sol.p = MatrixXd::Zero(chan.n_channels, chan.n_users);
  sol.rates = MatrixXd::Zero(chan.n_channels, chan.n_users);

  int m = chan.n_elements;
  if (refine_reflection && m > 0) {
    Rng rng_phase = Rng::substream(seed, kPhaseStream);
    sol.e = random_phases(m, rng_phase);
  } else {
    sol.e = VectorXcd::Zero(m);
  }

  std::vector<std::pair<int, int>> slots;
  std::vector<double> share;
  for (int n = 0; n < chan.n_channels; ++n)
    for (int k : assign.members[n]) {
      slots.emplace_back(n, k);
      share.push_back(1.0 / static_cast<double>(assign.members[n].size()));
    }
  if (slots.empty()) {
    sol.feasible = true;
    return sol;
  }

  int a_count = static_cast<int>(slots.size());
  VectorXd p = VectorXd::Zero(a_count);
  const SolverOptions& opts = cfg.solver;
  double prev = 0.0;
  bool have_prev = false;
  for (int round = 1; round <= opts.max_outer_rounds; ++round) {
    VectorXd n0(a_count);
    for (int i = 0; i < a_count; ++i) {
      double g = combined_gain(chan, slots[i].first, slots[i].second, sol.e);
      n0[i] = g > 0.0 ? cfg.noise_w / g : std::numeric_limits<double>::infinity();
    }
    p = water_fill(n0, cfg.p_max_w);
    double obj = 0.0;
    for (int i = 0; i < a_count; ++i)
      if (p[i] > 0.0) obj += share[i] * std::log2(1.0 + p[i] / n0[i]);
    sol.outer_trace.push_back(obj);
    sol.outer_rounds = round;
    bool converged =
        have_prev && std::abs(obj - prev) <= opts.tol_outer * std::max(1.0, std::abs(prev));
    prev = obj;
    have_prev = true;
    if (converged) break;
    if (refine_reflection && m > 0) sol.e = refine_oma_reflection(chan, cfg, slots, p, sol.e);
  }

  bool floor_ok = true;
  for (int i = 0; i < a_count; ++i) {
    auto [n, k] = slots[i];
    sol.p(n, k) = p[i];
    double g = combined_gain(chan, n, k, sol.e);
    sol.rates(n, k) = share[i] * std::log2(1.0 + p[i] * g / cfg.noise_w);
    if (sol.rates(n, k) < cfg.min_rate - 1e-6) floor_ok = false;
  }
  sol.throughput = sol.rates.sum();
  sol.feasible = floor_ok;  // the floor is reported here, never enforced
  return sol;
}

// Feasible-first, then higher throughput.
bool improves(const Solution& cand, const Solution& best) {
  if (cand.feasible != best.feasible) return cand.feasible;
  return cand.throughput > best.throughput;
}

long double binom_ld(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / i;
  return r;
}

// Number of ways to place every user on some channel with all loads at most
// cap. Channel-by-channel convolution over how many users each channel takes.
long double partition_count(int n_users, int n_channels, int cap) {
  std::vector<long double> ways(n_users + 1, 0.0L);
  ways[0] = 1.0L;
  for (int n = 0; n < n_channels; ++n) {
    std::vector<long double> next(n_users + 1, 0.0L);
    for (int u = 0; u <= n_users; ++u) {
      if (ways[u] == 0.0L) continue;
      for (int j = 0; j <= cap && u + j <= n_users; ++j)
        next[u + j] += ways[u] * binom_ld(n_users - u, j);
    }
    ways = std::move(next);
  }
  return ways[n_users];
}

std::string format_count(long double c) {
  if (c < 9e18L) return std::to_string(static_cast<long long>(llroundl(c)));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3Le", c);
  return buf;
}

void collect_assignments(int k, int n_users, int n_channels, int cap, std::vector<int>& loads,
                         Assignment& cur, std::vector<Assignment>& out) {
  if (k == n_users) {
    out.push_back(cur);
    return;
  }
  int room = 0;
  for (int n = 0; n < n_channels; ++n) room += cap - loads[n];
  if (room < n_users - k) return;
  for (int n = 0; n < n_channels; ++n) {
    if (loads[n] >= cap) continue;
    cur.add(n, k);
    ++loads[n];
    collect_assignments(k + 1, n_users, n_channels, cap, loads, cur, out);
    --loads[n];
    cur.remove(n, k);
  }
}

UtilityContext context_without_surface(const ChannelRealization& chan, const SystemConfig& cfg) {
  UtilityContext ctx;
  ctx.chan = &chan;
  ctx.e = VectorXcd::Zero(chan.n_elements);
  ctx.p_each = cfg.p_max_w / cfg.n_users;
  ctx.noise_w = cfg.noise_w;
  ctx.gains.resize(chan.n_channels, chan.n_users);
  for (int n = 0; n < chan.n_channels; ++n)
    for (int k = 0; k < chan.n_users; ++k) ctx.gains(n, k) = combined_gain(chan, n, k, ctx.e);
  return ctx;
}

}  // namespace

VectorXd water_fill(const VectorXd& noise_over_gain, double budget) {
  int n = static_cast<int>(noise_over_gain.size());
  VectorXd p = VectorXd::Zero(n);
  if (n == 0 || budget <= 0.0) return p;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return noise_over_gain[a] < noise_over_gain[b]; });
  // Filling the j cheapest slots puts the water level at
  // (budget + sum of their floors) / j; the largest j whose level clears its
  // most expensive slot is optimal.
  double run = 0.0;
  double level = 0.0;
  int take = 0;
  for (int j = 1; j <= n; ++j) {
    run += noise_over_gain[idx[j - 1]];
    double mu = (budget + run) / j;
    if (mu > noise_over_gain[idx[j - 1]]) {
      level = mu;
      take = j;
    }
  }
  for (int i = 0; i < take; ++i) p[idx[i]] = level - noise_over_gain[idx[i]];
  return p;
}

double placement_gain_approx(double d_bs_irs, double d_bs_user, double reflected_exponent,
                             double direct_exponent) {
  if (!(d_bs_irs > 0.0) || !(d_bs_irs < d_bs_user))
    throw std::domain_error("placement_gain_approx: surface must sit strictly between the ends");
  return path_loss(d_bs_irs, reflected_exponent) *
             path_loss(d_bs_user - d_bs_irs, reflected_exponent) +
         path_loss(d_bs_user, direct_exponent);
}

Solution three_step(const ChannelRealization& chan, const SystemConfig& cfg,
                    std::uint64_t seed) {
  UtilityContext ctx = UtilityContext::standard(chan, cfg);
  MatchResult mr = assign_channels(chan, ctx, cfg);

  DecodingOrder order;
  OrderSelection sel;
  bool used_selection = false;
  if (single_user_channels(mr.assign)) {
    order.seq = mr.assign.members;  // nothing to order, skip the relaxation
  } else {
    Rng rng_order = Rng::substream(seed, kOrderStream);
    sel = optimize_decoding_order(chan, mr.assign, cfg, rng_order);
    order = sel.order;
    used_selection = true;
  }

  VectorXcd e_init;
  if (cfg.solver.warm_start_reflection && used_selection) {
    e_init = sel.e;
  } else {
    Rng rng_phase = Rng::substream(seed, kPhaseStream);
    e_init = random_phases(chan.n_elements, rng_phase);
  }
  return run_noma_alternation(chan, cfg, mr.assign, order, e_init, true, seed,
                              "ThreeStep-IRS-NOMA");
}

Solution oma_waterfill(const ChannelRealization& chan, const SystemConfig& cfg,
                       std::uint64_t seed) {
  UtilityContext ctx = UtilityContext::standard(chan, cfg);
  MatchResult mr = assign_channels(chan, ctx, cfg);
  return run_oma(chan, cfg, mr.assign, true, seed, "TwoStep-IRS-OMA");
}

Solution no_irs_variant(const ChannelRealization& chan, const SystemConfig& cfg,
                        AccessMode mode, std::uint64_t seed) {
  UtilityContext ctx = context_without_surface(chan, cfg);
  MatchResult mr = assign_channels(chan, ctx, cfg);
  if (mode == AccessMode::oma) return run_oma(chan, cfg, mr.assign, false, seed, "OMA-noIRS");
  DecodingOrder order = order_by_gain(chan, mr.assign, ctx.e);
  return run_noma_alternation(chan, cfg, mr.assign, order, ctx.e, false, seed, "NOMA-noIRS");
}

Solution random_order_variant(const ChannelRealization& chan, const SystemConfig& cfg,
                              std::uint64_t seed) {
  UtilityContext ctx = UtilityContext::standard(chan, cfg);
  MatchResult mr = assign_channels(chan, ctx, cfg);

  Rng rng_order = Rng::substream(seed, kOrderStream);
  DecodingOrder order;
  order.seq.resize(chan.n_channels);
  for (int n = 0; n < chan.n_channels; ++n) {
    std::vector<int> seq = mr.assign.members[n];
    std::sort(seq.begin(), seq.end());
    for (int j = static_cast<int>(seq.size()) - 1; j > 0; --j) {
      int i = static_cast<int>(rng_order.uniform() * (j + 1));
      std::swap(seq[j], seq[i]);
    }
    order.seq[n] = seq;
  }

  Rng rng_phase = Rng::substream(seed, kPhaseStream);
  VectorXcd e_init = random_phases(chan.n_elements, rng_phase);
  return run_noma_alternation(chan, cfg, mr.assign, order, e_init, true, seed,
                              "Random-IRS-NOMA");
}

Solution exhaustive_assignment(const ChannelRealization& chan, const SystemConfig& cfg,
                               AccessMode mode, std::uint64_t seed) {
  long double count = partition_count(chan.n_users, chan.n_channels, cfg.per_channel_cap);
  if (count < 0.5L)
    throw std::runtime_error("exhaustive assignment search: no capacity-respecting assignment");
  if (count > static_cast<long double>(cfg.solver.assignment_cap))
    throw std::runtime_error("exhaustive assignment search refused: " + format_count(count) +
                             " assignments exceed the cap " +
                             std::to_string(cfg.solver.assignment_cap));

  std::vector<Assignment> all;
  std::vector<int> loads(chan.n_channels, 0);
  Assignment cur = Assignment::empty(chan.n_channels, chan.n_users);
  collect_assignments(0, chan.n_users, chan.n_channels, cfg.per_channel_cap, loads, cur, all);

  Solution best;
  bool first = true;
  for (const Assignment& a : all) {
    Solution cand = (mode == AccessMode::noma)
                        ? exhaustive_order(chan, a, cfg, seed).second
                        : run_oma(chan, cfg, a, true, seed, "Exhaust-IRS-OMA");
    if (first || improves(cand, best)) {
      best = std::move(cand);
      first = false;
    }
  }
  best.label = (mode == AccessMode::noma) ? "Exhaust-IRS-NOMA" : "Exhaust-IRS-OMA";
  return best;
}

std::pair<DecodingOrder, Solution> exhaustive_order(const ChannelRealization& chan,
                                                    const Assignment& assign,
                                                    const SystemConfig& cfg,
                                                    std::uint64_t seed) {
  long double combos = 1.0L;
  for (int n = 0; n < chan.n_channels; ++n)
    for (int j = 2; j <= assign.load(n); ++j) combos *= j;
  if (combos > static_cast<long double>(cfg.solver.order_cap))
    throw std::runtime_error("exhaustive order search refused: " + format_count(combos) +
                             " combinations exceed the cap " +
                             std::to_string(cfg.solver.order_cap));

  std::vector<std::vector<std::vector<int>>> perms(chan.n_channels);
  for (int n = 0; n < chan.n_channels; ++n) {
    std::vector<int> seq = assign.members[n];
    std::sort(seq.begin(), seq.end());
    do {
      perms[n].push_back(seq);
    } while (std::next_permutation(seq.begin(), seq.end()));
  }

  Rng rng_phase = Rng::substream(seed, kPhaseStream);
  VectorXcd e_init = random_phases(chan.n_elements, rng_phase);

  std::vector<int> pick(chan.n_channels, 0);
  DecodingOrder best_order;
  Solution best;
  bool first = true;
  while (true) {
    DecodingOrder order;
    order.seq.resize(chan.n_channels);
    for (int n = 0; n < chan.n_channels; ++n) order.seq[n] = perms[n][pick[n]];
    Solution cand = run_noma_alternation(chan, cfg, assign, order, e_init, true, seed,
                                         "ExhaustOrder-IRS-NOMA");
    if (first || improves(cand, best)) {
      best = std::move(cand);
      best_order = order;
      first = false;
    }
    int n = 0;
    while (n < chan.n_channels && ++pick[n] == static_cast<int>(perms[n].size())) {
      pick[n] = 0;
      ++n;
    }
    if (n == chan.n_channels) break;
  }
  return {best_order, best};
}

bool solution_consistent(const ChannelRealization& chan, const SystemConfig& cfg,
                         const Solution& sol, std::string* why) {
  auto fail = [&](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  int n_ch = chan.n_channels, n_us = chan.n_users;
  if (static_cast<int>(sol.assign.members.size()) != n_ch ||
      static_cast<int>(sol.assign.channel_of.size()) != n_us)
    return fail("assignment shape mismatch");
  std::vector<int> seen(n_us, -1);
  for (int n = 0; n < n_ch; ++n) {
    if (sol.assign.load(n) > cfg.per_channel_cap) return fail("channel over capacity");
    for (int k : sol.assign.members[n]) {
      if (k < 0 || k >= n_us || seen[k] >= 0) return fail("member lists malformed");
      seen[k] = n;
    }
  }
  for (int k = 0; k < n_us; ++k)
    if (sol.assign.channel_of[k] != seen[k]) return fail("channel_of disagrees with members");
  if (!sol.feasible) return true;  // the claims below only bind feasible solutions

  if (static_cast<int>(sol.e.size()) != chan.n_elements) return fail("reflection vector size");
  if (!reflection_valid(sol.e, 1e-9)) return fail("reflection modulus above one");
  if (sol.p.rows() != n_ch || sol.p.cols() != n_us || sol.rates.rows() != n_ch ||
      sol.rates.cols() != n_us)
    return fail("power or rate shape mismatch");
  if (sol.p.minCoeff() < 0.0) return fail("negative transmit power");
  if (sol.p.sum() > cfg.p_max_w * (1.0 + 1e-6)) return fail("power budget exceeded");

  MatrixXd expect;
  if (sol.mode == AccessMode::noma) {
    if (static_cast<int>(sol.order.seq.size()) != n_ch) return fail("decoding order shape");
    for (int n = 0; n < n_ch; ++n) {
      std::vector<int> a = sol.order.seq[n], b = sol.assign.members[n];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) return fail("decoding order does not list the channel members");
    }
    if (!sic_feasible(chan, sol.assign, sol.order, sol.e))
      return fail("gains not ascending along the decoding order");
    expect = rate_matrix(chan, sol.assign, sol.order, sol.p, sol.e, cfg.noise_w);
  } else {
    expect = MatrixXd::Zero(n_ch, n_us);
    for (int n = 0; n < n_ch; ++n) {
      double sh = sol.assign.load(n) > 0 ? 1.0 / sol.assign.load(n) : 0.0;
      for (int k : sol.assign.members[n]) {
        double g = combined_gain(chan, n, k, sol.e);
        expect(n, k) = sh * std::log2(1.0 + sol.p(n, k) * g / cfg.noise_w);
      }
    }
  }
  for (int n = 0; n < n_ch; ++n)
    for (int k = 0; k < n_us; ++k) {
      double tol = 1e-9 * std::max(1.0, std::abs(expect(n, k)));
      if (std::abs(sol.rates(n, k) - expect(n, k)) > tol) return fail("reported rates differ");
    }
  for (int n = 0; n < n_ch; ++n)
    for (int k : sol.assign.members[n])
      if (expect(n, k) < cfg.min_rate - 1e-6) return fail("rate floor broken");
  double sum = expect.sum();
  if (std::abs(sol.throughput - sum) > 1e-9 * std::max(1.0, std::abs(sum)))
    return fail("reported throughput differs");
  return true;
}

}  // namespace irsalloc
