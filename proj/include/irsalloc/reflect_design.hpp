#pragma once

#include <Eigen/Dense>
#include <vector>

#include "irsalloc/config.hpp"
#include "irsalloc/scenario.hpp"
#include "irsalloc/subsolvers.hpp"

namespace irsalloc {

struct ReflectionState {
  Eigen::VectorXcd e;
  double slack = 0.0;         // shared constraint slack, absolute gain units
  bool feasible = false;
  int rounds = 0;
  std::vector<double> trace;  // slack after each relinearization round
};

// Builds the linearized reflection step at expansion point e_t for the links
// of `layout` with fixed powers p and SINR targets chi (flat, decode order).
// A feasible solution keeps every target deliverable at these powers and
// every decode-order gain gap open.
ReflectionSubproblem refresh_linearization(const ChannelRealization& chan,
                                           const LinkLayout& layout,
                                           const Eigen::VectorXcd& e_t,
                                           const Eigen::VectorXd& p,
                                           const Eigen::VectorXd& chi,
                                           const SystemConfig& cfg);

// Alternates relinearization and shared-slack maximization from e_init.
// The slack trace is non-decreasing because each new expansion point is
// feasible for its own linearization with the previous slack. When even the
// first round is infeasible, e_init is returned unchanged with
// feasible = false so the caller can keep its current design.
ReflectionState optimize_reflection(const ChannelRealization& chan,
                                    const Assignment& assign, const DecodingOrder& order,
                                    const Eigen::VectorXcd& e_init,
                                    const Eigen::VectorXd& p, const Eigen::VectorXd& chi,
                                    const SystemConfig& cfg);

}  // namespace irsalloc
