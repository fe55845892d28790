#pragma once

#include <Eigen/Dense>

#include "irsalloc/config.hpp"
#include "irsalloc/rng.hpp"
#include "irsalloc/scenario.hpp"
#include "irsalloc/subsolvers.hpp"

namespace irsalloc {

// Sum over assigned users of the lifted gain outer products. Row
// w = [z_{n,k}, h_{n,k}] turns the combined gain into the quadratic form
// lifted^H (w^H w) lifted with lifted = [e; 1], so maximizing
// Tr(build_v * E) over lifted covariances E maximizes the total gain.
Eigen::MatrixXcd build_v(const ChannelRealization& chan, const Assignment& assign);

// Phase-only reduction of a lifted vector: element m of the result is the
// unit-modulus rotation of lifted[m] relative to the reference last entry.
Eigen::VectorXcd lifted_to_phases(const Eigen::VectorXcd& lifted);

// One randomization draw from the eigenfactor (u, lambda) of a covariance:
// u * diag(sqrt(lambda)) * r with unit-phase entries in r. Every draw keeps
// the squared norm at trace(E) exactly.
Eigen::VectorXcd randomized_lifted(const Eigen::MatrixXcd& u, const Eigen::VectorXd& lambda,
                                   Rng& rng);

// Users of every channel sorted by ascending combined gain under e,
// ties broken by user index.
DecodingOrder order_by_gain(const ChannelRealization& chan, const Assignment& assign,
                            const Eigen::VectorXcd& e);

struct OrderSelection {
  Eigen::VectorXcd e;      // unit-modulus selection vector
  DecodingOrder order;     // ascending combined gains under e
  double objective = 0.0;  // sum of combined gains under e
  bool rank_one = false;   // relaxation solution was (numerically) rank one
  int randomized = 0;      // randomization candidates drawn
  SolveStatus status = SolveStatus::ok;
};

// Picks the decoding order through the lifted-covariance relaxation: solve
// for E, take the dominant eigenvector when E is numerically rank one, and
// otherwise choose the best of the dominant eigenvector and
// randomization_count unit-phase draws, scored by total combined gain. The
// order itself is ascending gains per channel, which makes successive
// decoding feasible by construction.
OrderSelection optimize_decoding_order(const ChannelRealization& chan,
                                       const Assignment& assign, const SystemConfig& cfg,
                                       Rng& rng);

}  // namespace irsalloc
