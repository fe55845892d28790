#include "irsalloc/reflect_design.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace irsalloc {

using Eigen::VectorXcd;
using Eigen::VectorXd;

ReflectionSubproblem refresh_linearization(const ChannelRealization& chan,
                                           const LinkLayout& layout,
                                           const VectorXcd& e_t, const VectorXd& p,
                                           const VectorXd& chi, const SystemConfig& cfg) {
  int a_count = layout.count();
  int m_count = chan.n_elements;
  ReflectionSubproblem sub;
  sub.zr.resize(a_count, m_count);
  sub.h.resize(a_count);
  sub.beta.resize(a_count);
  sub.rhs.resize(a_count);
  sub.kappa_t.resize(a_count);
  sub.xi_t.resize(a_count);
  sub.order_margin = cfg.solver.order_margin;

  for (int a = 0; a < a_count; ++a) {
    int n = layout.channel[a], k = layout.user[a];
    sub.zr.row(a) = chan.zrow(n, k);
    sub.h[a] = chan.h(n, k);
    double interf = 0.0;
    for (int b = a + 1; b < layout.channel_end(n); ++b) interf += p[b];
    double pa = std::max(p[a], 1e-300);
    sub.beta[a] = chi[a] * interf / pa;
    sub.rhs[a] = chi[a] * cfg.noise_w / pa;
    std::complex<double> amp = (sub.zr.row(a) * e_t)(0) + sub.h[a];
    sub.kappa_t[a] = amp.real();
    sub.xi_t[a] = amp.imag();
  }
  for (int n = 0; n < layout.channel_count(); ++n)
    for (int a = layout.begin[n]; a + 1 < layout.begin[n + 1]; ++a)
      sub.pairs.emplace_back(a, a + 1);
  return sub;
}

ReflectionState optimize_reflection(const ChannelRealization& chan, const Assignment& assign,
                                    const DecodingOrder& order, const VectorXcd& e_init,
                                    const VectorXd& p, const VectorXd& chi,
                                    const SystemConfig& cfg) {
  ReflectionState st;
  st.e = e_init;
  LinkLayout layout = LinkLayout::from(assign, order);
  if (layout.count() == 0 || chan.n_elements == 0) {
    st.feasible = true;
    return st;
  }

  VectorXcd e = e_init;
  double prev_slack = 0.0;
  bool have_prev = false;
  for (int round = 1; round <= cfg.solver.max_reflect_rounds; ++round) {
    ReflectionSubproblem sub = refresh_linearization(chan, layout, e, p, chi, cfg);
    ReflectionSolveResult res = solve_p6(sub, e, cfg.solver);
    double abs_slack = res.slack * res.scale;
    if (!res.feasible) {
      if (round == 1) {
        st.slack = abs_slack;
        st.rounds = 1;
        st.trace.push_back(abs_slack);
        return st;
      }
      break;
    }
    double step = (res.e - e).cwiseAbs().maxCoeff();
    e = res.e;
    st.e = e;
    st.slack = abs_slack;
    st.feasible = true;
    st.rounds = round;
    st.trace.push_back(abs_slack);
    bool converged = step < cfg.solver.tol_sca;
    if (have_prev &&
        std::abs(res.slack - prev_slack) <= cfg.solver.tol_sca * std::max(1.0, std::abs(res.slack)))
      converged = true;
    prev_slack = res.slack;
    have_prev = true;
    if (converged) break;
  }
  return st;
}

}  // namespace irsalloc
