#pragma once

#include <Eigen/Dense>
#include <vector>

#include "irsalloc/config.hpp"
#include "irsalloc/scenario.hpp"

namespace irsalloc {

// Fixed evaluation rules for matching utilities: gains under one reflection
// vector, an equal power split, weakest-first decoding within a channel. A
// user's utility is its own rate, a channel's utility is the sum over its
// members, so every candidate matching is scored consistently.
struct UtilityContext {
  const ChannelRealization* chan = nullptr;
  Eigen::VectorXcd e;      // reflection vector the gains are evaluated under
  Eigen::MatrixXd gains;   // N x K cache of combined gains under e
  double p_each = 0.0;     // per-user power of the provisional equal split
  double noise_w = 0.0;

  // All-ones reflection vector and p_each = P_max / K.
  static UtilityContext standard(const ChannelRealization& chan, const SystemConfig& cfg);

  // Rate of member k of channel n when `members` share the channel with
  // equal powers and are decoded weakest first.
  double user_rate(int n, int k, const std::vector<int>& members) const;
  double channel_utility(int n, const std::vector<int>& members) const;
  double total_utility(const Assignment& assign) const;
};

// Proposal/rejection state of the assignment search.
struct Matching {
  Assignment assign;
  std::vector<std::vector<bool>> rejected;  // [k][n]: channel n has rejected user k
  int proposal_rounds = 0;
};

struct MatchResult {
  Assignment assign;
  double utility = 0.0;
  std::vector<double> trace;  // total utility after init and after every swap
  int swaps = 0;
  int proposal_rounds = 0;
};

// Proposal/rejection rounds until every user holds a channel: unmatched
// users propose to their best channel that has not rejected them (by gain,
// ties to the lower channel index); each channel keeps its top proposers and
// members up to capacity (by gain, ties to the lower user index) and rejects
// the rest. Throws std::logic_error if someone runs out of channels, which
// cannot happen while K <= N * cap.
Matching init_matching(const ChannelRealization& chan, const UtilityContext& ctx,
                       const SystemConfig& cfg);

// True when exchanging the channels of k1 and k2 leaves all four involved
// utilities (both users, both channels) no worse and improves at least one
// by more than `margin`. Throws std::domain_error unless the users sit on
// two different channels.
bool is_swap_blocking(const UtilityContext& ctx, const Assignment& assign, int k1, int k2,
                      double margin = 1e-9);

// init_matching followed by lexicographic swap sweeps until no swap-blocking
// pair remains. Total utility never decreases across swaps; the swap count
// is capped at 10 K^2 (std::logic_error beyond it).
MatchResult assign_channels(const ChannelRealization& chan, const UtilityContext& ctx,
                            const SystemConfig& cfg);

}  // namespace irsalloc
