#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "irsalloc/config.hpp"
#include "irsalloc/scenario.hpp"

namespace irsalloc {

enum class AccessMode { noma, oma };

struct Solution {
  std::string label;
  AccessMode mode = AccessMode::noma;
  Assignment assign;
  DecodingOrder order;             // one sequence per channel; unused for OMA
  Eigen::MatrixXd p;               // N x K transmit powers, W
  Eigen::VectorXcd e;              // reflection coefficients
  Eigen::MatrixXd rates;           // N x K achieved rates, bit/s/Hz
  double throughput = 0.0;         // sum of the achieved rates
  std::vector<double> outer_trace; // objective after each outer iteration
  int outer_rounds = 0;
  bool feasible = false;
};

// Exact water-filling over parallel slots: maximizes sum log2(1 + p_i / n_i)
// subject to sum p_i <= budget, where n_i is slot i's noise-over-gain.
// Active-set closed form; powers are (level - n_i) clamped at zero.
Eigen::VectorXd water_fill(const Eigen::VectorXd& noise_over_gain, double budget);

// Distance-only approximation of the combined average gain when the surface
// sits on the line between transmitter and receiver: reflected product term
// plus the direct term. Minimized at the midpoint. Throws std::domain_error
// unless 0 < d_bs_irs < d_bs_user.
double placement_gain_approx(double d_bs_irs, double d_bs_user,
                             double reflected_exponent = 2.5,
                             double direct_exponent = 3.0);

// Full pipeline: matched assignment, relaxation-based decoding order, then
// alternating power allocation and reflection design from a random phase
// init. All randomness is derived from `seed` through fixed substreams, so
// equal seeds give paired runs across variants.
Solution three_step(const ChannelRealization& chan, const SystemConfig& cfg,
                    std::uint64_t seed);

// Orthogonal benchmark: matched assignment, equal time shares within a
// channel, water-filled powers across all slots, reflection design without
// ordering constraints. The rate floor is reported, not enforced.
Solution oma_waterfill(const ChannelRealization& chan, const SystemConfig& cfg,
                       std::uint64_t seed);

// Pipeline with the surface disabled (e = 0, no reflection step); decoding
// order by direct-link gains for NOMA, water-filling for OMA.
Solution no_irs_variant(const ChannelRealization& chan, const SystemConfig& cfg,
                        AccessMode mode, std::uint64_t seed);

// As three_step but with a uniformly drawn decoding order per channel.
Solution random_order_variant(const ChannelRealization& chan, const SystemConfig& cfg,
                              std::uint64_t seed);

// Best throughput over every capacity-respecting assignment, with the
// downstream steps of the chosen mode run per branch (NOMA branches also
// exhaust the decoding orders). Refuses with std::runtime_error when the
// partition count exceeds the configured cap.
Solution exhaustive_assignment(const ChannelRealization& chan, const SystemConfig& cfg,
                               AccessMode mode, std::uint64_t seed);

// Best throughput over every decoding-order combination for a fixed
// assignment. Refuses with std::runtime_error when the combination count
// exceeds the configured cap.
std::pair<DecodingOrder, Solution> exhaustive_order(const ChannelRealization& chan,
                                                    const Assignment& assign,
                                                    const SystemConfig& cfg,
                                                    std::uint64_t seed);

// Re-derives a Solution's claims from the realization alone: assignment
// coherence, reflection bounds, power budget, decodability of the decoding
// order, the rate floor, and the reported rates and throughput. Returns
// false (with a reason when asked) on the first broken claim.
bool solution_consistent(const ChannelRealization& chan, const SystemConfig& cfg,
                         const Solution& sol, std::string* why = nullptr);

}  // namespace irsalloc
