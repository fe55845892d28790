#pragma once

#include <cmath>
#include <cstdint>

namespace irsalloc {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Tolerances and iteration caps for the optimization stack. Defaults are the
// values every experiment and test uses; they are data, not compile-time
// constants, so a config file can override them.
struct SolverOptions {
  double gap_tol = 1e-8;         // barrier duality-gap target (on normalized objectives)
  double barrier_increase = 10.0;
  int newton_cap = 200;          // Newton steps per barrier stage
  double newton_tol = 1e-12;     // stop a stage when decrement^2 / 2 falls below this
  double constraint_tol = 1e-6;  // slack tolerance when checking returned points
  double order_margin = 1e-8;    // decoding-order gain margin, relative to the largest gain
  double rank_one_tol = 1e-6;    // second/first eigenvalue ratio that counts as rank one
  int randomization_count = 100;
  double chi_floor = 1e-12;      // lower clamp when dividing by chi
  double feas_threshold = 1e-6;  // accept a feasibility-search point when the slack is below this
  double tol_sca = 1e-4;         // relative objective change that ends an SCA loop
  double tol_outer = 1e-3;       // relative throughput change that ends the alternation
  int max_power_rounds = 50;
  int max_feas_rounds = 50;
  int max_reflect_rounds = 30;
  int max_outer_rounds = 30;
  long assignment_cap = 10000;   // refuse exhaustive assignment search above this count
  long order_cap = 1000;         // refuse exhaustive order search above this count
  bool warm_start_reflection = false;  // reuse the ordering-step phases as the alternation init
};

// Scenario description. Power quantities are linear watts, rates are
// bit/s/Hz, geometry is meters. Defaults reproduce the reference downlink:
// a 2-channel, 4-user cell with an 8-element reflecting surface.
struct SystemConfig {
  int n_channels = 2;       // N
  int n_users = 4;          // K
  int per_channel_cap = 2;  // max users multiplexed on one channel
  int n_elements = 8;       // M reflecting elements

  double p_max_w = dbm_to_watts(15.0);
  double noise_w = dbm_to_watts(-80.0);
  double min_rate = 0.01;   // per-user rate floor, bit/s/Hz
  double total_bandwidth_hz = 30e3;

  Vec3 bs_pos{0.0, 0.0, 15.0};
  Vec3 irs_pos{50.0, 50.0, 15.0};
  Vec3 user_center{50.0, 45.0, 0.0};
  double user_radius = 5.0;

  double alpha_bs_user = 3.0;
  double alpha_bs_irs = 2.2;
  double alpha_irs_user = 2.5;
  double rician_factor = db_to_linear(3.0);  // linear K-factor of the BS-surface link

  std::uint64_t seed = 1;
  SolverOptions solver;

  double channel_bandwidth_hz() const { return total_bandwidth_hz / n_channels; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

}  // namespace irsalloc
