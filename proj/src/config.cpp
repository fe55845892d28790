#include "irsalloc/config.hpp"

#include <stdexcept>
#include <string>

namespace irsalloc {

double distance(const Vec3& a, const Vec3& b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace

void SystemConfig::validate() const {
  require(n_channels >= 1, "n_channels must be >= 1");
  require(n_users >= 1, "n_users must be >= 1");
  require(per_channel_cap >= 1, "per_channel_cap must be >= 1");
  require(n_users <= n_channels * per_channel_cap,
          "n_users exceeds n_channels * per_channel_cap");
  require(n_elements >= 0, "n_elements must be >= 0");
  require(p_max_w > 0.0, "p_max_w must be positive");
  require(noise_w > 0.0, "noise_w must be positive");
  require(min_rate >= 0.0, "min_rate must be nonnegative");
  require(total_bandwidth_hz > 0.0, "total_bandwidth_hz must be positive");
  require(user_radius >= 0.0, "user_radius must be nonnegative");
  require(alpha_bs_user > 0.0, "alpha_bs_user must be positive");
  require(alpha_bs_irs > 0.0, "alpha_bs_irs must be positive");
  require(alpha_irs_user > 0.0, "alpha_irs_user must be positive");
  require(rician_factor >= 0.0, "rician_factor must be nonnegative");
  require(distance(bs_pos, irs_pos) > 0.0, "bs_pos and irs_pos must differ");
  require(solver.gap_tol > 0.0, "solver.gap_tol must be positive");
  require(solver.feas_threshold > 0.0, "solver.feas_threshold must be positive");
  require(solver.tol_sca > 0.0, "solver.tol_sca must be positive");
  require(solver.tol_outer > 0.0, "solver.tol_outer must be positive");
  require(solver.max_outer_rounds >= 1, "solver.max_outer_rounds must be >= 1");
  require(solver.randomization_count >= 1, "solver.randomization_count must be >= 1");
}

}  // namespace irsalloc
