#include "irsalloc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irsalloc {

UtilityContext UtilityContext::standard(const ChannelRealization& chan,
                                        const SystemConfig& cfg) {
  UtilityContext ctx;
  ctx.chan = &chan;
  ctx.e = Eigen::VectorXcd::Ones(chan.n_elements);
  ctx.p_each = cfg.p_max_w / cfg.n_users;
  ctx.noise_w = cfg.noise_w;
  ctx.gains.resize(chan.n_channels, chan.n_users);
  for (int n = 0; n < chan.n_channels; ++n)
    for (int k = 0; k < chan.n_users; ++k) ctx.gains(n, k) = combined_gain(chan, n, k, ctx.e);
  return ctx;
}

double UtilityContext::user_rate(int n, int k, const std::vector<int>& members) const {
  double g = gains(n, k);
  // Decoded weakest first, so the interferers still on air are the members
  // with strictly higher gain. Exact ties see each other as cancelled, which
  // keeps equal users symmetric and swap sweeps cycle-free.
  int later = 0;
  for (int j : members)
    if (j != k && gains(n, j) > g) ++later;
  double interf = later * p_each * g;
  return std::log2(1.0 + p_each * g / (interf + noise_w));
}

double UtilityContext::channel_utility(int n, const std::vector<int>& members) const {
  double u = 0.0;
  for (int k : members) u += user_rate(n, k, members);
  return u;
}

double UtilityContext::total_utility(const Assignment& assign) const {
  double u = 0.0;
  for (int n = 0; n < static_cast<int>(assign.members.size()); ++n)
    u += channel_utility(n, assign.members[n]);
  return u;
}

Matching init_matching(const ChannelRealization& chan, const UtilityContext& ctx,
                       const SystemConfig& cfg) {
  int n_count = chan.n_channels, k_count = chan.n_users;
  Matching m;
  m.assign = Assignment::empty(n_count, k_count);
  m.rejected.assign(k_count, std::vector<bool>(n_count, false));

  int round_cap = k_count * n_count + 1;
  bool overloaded = k_count > n_count * cfg.per_channel_cap;
  while (true) {
    // Collect proposals from everyone currently without a channel.
    std::vector<std::vector<int>> proposals(n_count);
    bool any_proposal = false;
    for (int k = 0; k < k_count; ++k) {
      if (m.assign.channel_of[k] >= 0) continue;
      int best = -1;
      for (int n = 0; n < n_count; ++n) {
        if (m.rejected[k][n]) continue;
        if (best < 0 || ctx.gains(n, k) > ctx.gains(best, k)) best = n;
      }
      if (best < 0) {
        // Out of channels: possible only when the users outnumber the slots,
        // in which case this user simply stays unmatched.
        if (!overloaded)
          throw std::logic_error("matching: user rejected by every channel");
        continue;
      }
      proposals[best].push_back(k);
      any_proposal = true;
    }
    if (!any_proposal) break;
    if (++m.proposal_rounds > round_cap)
      throw std::logic_error("matching: proposal rounds exceeded the K*N bound");

    // Each channel ranks current members plus proposers and keeps the top
    // `cap` of them.
    for (int n = 0; n < n_count; ++n) {
      if (proposals[n].empty()) continue;
      std::vector<int> pool = m.assign.members[n];
      pool.insert(pool.end(), proposals[n].begin(), proposals[n].end());
      std::sort(pool.begin(), pool.end(), [&](int a, int b) {
        if (ctx.gains(n, a) != ctx.gains(n, b)) return ctx.gains(n, a) > ctx.gains(n, b);
        return a < b;
      });
      for (int k : m.assign.members[n]) m.assign.remove(n, k);
      for (size_t i = 0; i < pool.size(); ++i) {
        int k = pool[i];
        if (static_cast<int>(i) < cfg.per_channel_cap) {
          m.assign.add(n, k);
        } else {
          m.rejected[k][n] = true;
        }
      }
    }
  }
  return m;
}

bool is_swap_blocking(const UtilityContext& ctx, const Assignment& assign, int k1, int k2,
                      double margin) {
  int n1 = assign.channel_of[k1], n2 = assign.channel_of[k2];
  if (n1 < 0 || n2 < 0 || n1 == n2)
    throw std::domain_error("swap test needs two users on different channels");

  std::vector<int> before1 = assign.members[n1], before2 = assign.members[n2];
  std::vector<int> after1 = before1, after2 = before2;
  std::replace(after1.begin(), after1.end(), k1, k2);
  std::replace(after2.begin(), after2.end(), k2, k1);

  double d_u1 = ctx.user_rate(n2, k1, after2) - ctx.user_rate(n1, k1, before1);
  double d_u2 = ctx.user_rate(n1, k2, after1) - ctx.user_rate(n2, k2, before2);
  double d_c1 = ctx.channel_utility(n1, after1) - ctx.channel_utility(n1, before1);
  double d_c2 = ctx.channel_utility(n2, after2) - ctx.channel_utility(n2, before2);

  if (d_u1 < 0.0 || d_u2 < 0.0 || d_c1 < 0.0 || d_c2 < 0.0) return false;
  return d_u1 > margin || d_u2 > margin || d_c1 > margin || d_c2 > margin;
}

MatchResult assign_channels(const ChannelRealization& chan, const UtilityContext& ctx,
                            const SystemConfig& cfg) {
  Matching m = init_matching(chan, ctx, cfg);
  MatchResult res;
  res.assign = m.assign;
  res.proposal_rounds = m.proposal_rounds;
  res.trace.push_back(ctx.total_utility(res.assign));

  int k_count = chan.n_users;
  int swap_cap = 10 * k_count * k_count;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k1 = 0; k1 < k_count; ++k1)
      for (int k2 = k1 + 1; k2 < k_count; ++k2) {
        if (res.assign.channel_of[k1] < 0 || res.assign.channel_of[k2] < 0) continue;
        if (res.assign.channel_of[k1] == res.assign.channel_of[k2]) continue;
        if (!is_swap_blocking(ctx, res.assign, k1, k2)) continue;
        int n1 = res.assign.channel_of[k1], n2 = res.assign.channel_of[k2];
        res.assign.remove(n1, k1);
        res.assign.remove(n2, k2);
        res.assign.add(n2, k1);
        res.assign.add(n1, k2);
        res.trace.push_back(ctx.total_utility(res.assign));
        changed = true;
        if (++res.swaps > swap_cap)
          throw std::logic_error("matching: swap count exceeded the stability bound");
      }
  }
  res.utility = res.trace.back();
  return res;
}

}  // namespace irsalloc
