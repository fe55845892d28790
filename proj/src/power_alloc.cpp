#include "irsalloc/power_alloc.hpp"

#include <algorithm>
#include <cmath>

namespace irsalloc {

using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

double chi_min_of(const SystemConfig& cfg) { return std::pow(2.0, cfg.min_rate) - 1.0; }

double achieved_sinr(const PowerSubproblem& sub, const VectorXd& p, int a) {
  return p[a] / (sub.later_sum(p, a) + sub.nu[a]);
}

double sum_log_rate(const VectorXd& chi) {
  double v = 0.0;
  for (int a = 0; a < chi.size(); ++a) v += std::log2(1.0 + chi[a]);
  return v;
}

// Worst relative violation of the true power-step constraints at (p, chi).
double worst_violation(const PowerSubproblem& sub, const VectorXd& p, const VectorXd& chi) {
  double v = (p.sum() - sub.p_max) / sub.p_max;
  for (int a = 0; a < p.size(); ++a) {
    v = std::max(v, (sub.chi_min - chi[a]) / std::max(1.0, sub.chi_min));
    double need = chi[a] * (sub.later_sum(p, a) + sub.nu[a]);
    v = std::max(v, (need - p[a]) / sub.p_max);
  }
  return v;
}

PowerSubproblem make_subproblem(const ChannelRealization& chan, const LinkLayout& layout,
                                const VectorXcd& e, const SystemConfig& cfg) {
  PowerSubproblem sub;
  sub.layout = layout;
  VectorXd gains = layout_gains(chan, layout, e);
  sub.nu = (cfg.noise_w / gains.array()).matrix();
  sub.chi_min = chi_min_of(cfg);
  sub.p_max = cfg.p_max_w;
  return sub;
}

}  // namespace

VectorXd layout_gains(const ChannelRealization& chan, const LinkLayout& layout,
                      const VectorXcd& e) {
  VectorXd g(layout.count());
  for (int a = 0; a < layout.count(); ++a)
    g[a] = std::max(combined_gain(chan, layout.channel[a], layout.user[a], e), 1e-300);
  return g;
}

VectorXd update_alpha(const LinkLayout& layout, const VectorXd& p, const VectorXd& chi,
                      double chi_floor) {
  VectorXd alpha = VectorXd::Zero(layout.count());
  for (int a = 0; a < layout.count(); ++a) {
    if (layout.is_last_in_channel(a)) continue;
    double s = 0.0;
    for (int b = a + 1; b < layout.begin[layout.channel[a] + 1]; ++b) s += p[b];
    alpha[a] = std::max(s, 1e-300) / std::max(chi[a], chi_floor);
  }
  return alpha;
}

PowerState find_feasible(const ChannelRealization& chan, const Assignment& assign,
                         const DecodingOrder& order, const VectorXcd& e,
                         const SystemConfig& cfg, Rng& rng) {
  PowerState st;
  st.layout = LinkLayout::from(assign, order);
  int a_count = st.layout.count();
  if (a_count == 0) {
    st.feasible = true;
    return st;
  }
  PowerSubproblem sub = make_subproblem(chan, st.layout, e, cfg);

  VectorXd p(a_count), chi(a_count);
  for (int a = 0; a < a_count; ++a) p[a] = (1.0 - rng.uniform()) * cfg.p_max_w / a_count;
  for (int a = 0; a < a_count; ++a) chi[a] = 0.5 * achieved_sinr(sub, p, a);

  for (int round = 1; round <= cfg.solver.max_feas_rounds; ++round) {
    sub.alpha = update_alpha(st.layout, p, chi, cfg.solver.chi_floor);
    auto res = solve_p4(sub, p, chi, cfg.solver);
    p = res.p;
    chi = res.chi;
    st.z_slack = res.z;
    st.z_trace.push_back(res.z);
    st.rounds = round;
    if (res.z < cfg.solver.feas_threshold) {
      // Polish to exact feasibility: scale into the budget, then set targets
      // to the SINRs the powers actually deliver.
      VectorXd p_pol = p;
      if (p_pol.sum() > sub.p_max) p_pol *= sub.p_max / p_pol.sum();
      VectorXd chi_pol(a_count);
      bool ok = true;
      for (int a = 0; a < a_count; ++a) {
        chi_pol[a] = achieved_sinr(sub, p_pol, a);
        if (chi_pol[a] < sub.chi_min) ok = false;
      }
      if (ok) {
        p = p_pol;
        chi = chi_pol;
        st.feasible = true;
        break;
      }
    }
  }

  st.p = p;
  st.chi = chi;
  st.alpha = update_alpha(st.layout, p, chi, cfg.solver.chi_floor);
  st.objective = sum_log_rate(chi);
  st.max_violation = worst_violation(sub, p, chi);
  return st;
}

PowerState optimize_power(const ChannelRealization& chan, const Assignment& assign,
                          const DecodingOrder& order, const VectorXcd& e,
                          const PowerState& init, const SystemConfig& cfg) {
  PowerState st;
  st.layout = LinkLayout::from(assign, order);
  int a_count = st.layout.count();
  if (a_count == 0) {
    st.feasible = true;
    return st;
  }
  PowerSubproblem sub = make_subproblem(chan, st.layout, e, cfg);

  VectorXd p = init.p;
  VectorXd chi = init.chi;
  // Anchor the targets to what (p, e) actually delivers; from a feasible
  // init this only removes slack, and it makes every later surrogate round
  // an ascent step on the true throughput.
  for (int a = 0; a < a_count; ++a)
    chi[a] = std::min(chi[a], achieved_sinr(sub, p, a));

  double prev = sum_log_rate(chi);
  st.trace.push_back(prev);
  st.feasible = true;
  for (int round = 1; round <= cfg.solver.max_power_rounds; ++round) {
    sub.alpha = update_alpha(st.layout, p, chi, cfg.solver.chi_floor);
    auto res = solve_p3(sub, p, chi, cfg.solver);
    if (res.status == SolveStatus::infeasible) {
      st.feasible = false;
      break;
    }
    p = res.p;
    chi = res.chi;
    st.trace.push_back(res.objective);
    st.rounds = round;
    double rel = std::abs(res.objective - prev) / std::max(1.0, std::abs(prev));
    prev = res.objective;
    if (rel < cfg.solver.tol_sca) break;
  }

  st.p = p;
  st.chi = chi;
  st.alpha = update_alpha(st.layout, p, chi, cfg.solver.chi_floor);
  st.objective = prev;
  st.max_violation = worst_violation(sub, p, chi);
  return st;
}

}  // namespace irsalloc
