#pragma once

#include <vector>

#include "irsalloc/rng.hpp"
#include "irsalloc/subsolvers.hpp"

namespace irsalloc {

// Power-control state over the flat link layout of one (assignment, order)
// pair. chi holds the SINR targets the current powers support.
struct PowerState {
  LinkLayout layout;
  Eigen::VectorXd p;
  Eigen::VectorXd chi;
  Eigen::VectorXd alpha;
  double objective = 0.0;        // sum of log2(1 + chi)
  double z_slack = 0.0;          // final slack of the feasibility search
  bool feasible = false;
  int rounds = 0;
  std::vector<double> trace;     // objective after each round (SCA loop)
  std::vector<double> z_trace;   // slack after each round (feasibility search)
  double max_violation = 0.0;    // worst relative constraint violation at the result
};

// Combined gain of every flat link at reflection vector e.
Eigen::VectorXd layout_gains(const ChannelRealization& chan, const LinkLayout& layout,
                             const Eigen::VectorXcd& e);

// Surrogate slopes from the current point: alpha_a = interference_a / chi_a
// with chi clamped below by chi_floor. At these slopes the convex upper
// bound on interference * chi is tight at (p, chi). Entries of last-decoded
// links are 0 and unused.
Eigen::VectorXd update_alpha(const LinkLayout& layout, const Eigen::VectorXd& p,
                             const Eigen::VectorXd& chi, double chi_floor);

// Feasibility search: from a random power draw, repeatedly minimizes the
// shared constraint slack and refreshes the slopes until the slack falls
// under the acceptance threshold. The accepted point is polished so that
// every power-step constraint holds with nonnegative slack (targets are set
// to the exactly achieved SINRs). feasible=false after the round cap means
// no point was found.
PowerState find_feasible(const ChannelRealization& chan, const Assignment& assign,
                         const DecodingOrder& order, const Eigen::VectorXcd& e,
                         const SystemConfig& cfg, Rng& rng);

// SCA ascent on the throughput from a feasible state: targets are first
// clamped to the SINRs achieved at (p, e), so every accepted round increases
// the true sum rate, not just the surrogate objective.
PowerState optimize_power(const ChannelRealization& chan, const Assignment& assign,
                          const DecodingOrder& order, const Eigen::VectorXcd& e,
                          const PowerState& init, const SystemConfig& cfg);

}  // namespace irsalloc
