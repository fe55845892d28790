#include "irsalloc/subsolvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace irsalloc {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

LinkLayout LinkLayout::from(const Assignment& assign, const DecodingOrder& order) {
  LinkLayout lay;
  int n_channels = static_cast<int>(order.seq.size());
  lay.begin.resize(n_channels + 1);
  for (int n = 0; n < n_channels; ++n) {
    lay.begin[n] = lay.count();
    for (int k : order.seq[n]) {
      if (assign.channel_of[k] != n)
        throw std::domain_error("layout: order lists a user not assigned to the channel");
      lay.channel.push_back(n);
      lay.user.push_back(k);
    }
  }
  lay.begin[n_channels] = lay.count();
  return lay;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453094172321214581766;

struct EngineOutcome {
  VectorXd x;
  SolveStatus status = SolveStatus::ok;
  int newton_steps = 0;
  double final_t = 0.0;
};

// Regularized Newton direction: H d = -g, nudging H toward identity until the
// step is a finite descent direction.
VectorXd newton_direction(MatrixXd h, const VectorXd& g, double* decrement) {
  int n = static_cast<int>(g.size());
  double reg = 0.0;
  double base = 1e-12 * (1.0 + h.trace() / std::max(1, n));
  for (int attempt = 0; attempt < 12; ++attempt) {
    MatrixXd hr = h;
    if (reg > 0.0) hr.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(hr);
    if (ldlt.info() == Eigen::Success) {
      VectorXd d = ldlt.solve(-g);
      double dec = -g.dot(d);
      if (d.allFinite() && dec > 0.0) {
        *decrement = dec;
        return d;
      }
    }
    reg = (reg == 0.0) ? base : reg * 100.0;
  }
  *decrement = 0.0;
  return VectorXd::Zero(n);
}

// Log-barrier minimization of a model exposing
//   dim(), constraint_count(), objective(x) and
//   barrier(x, t, grad_or_null, hess_or_null) -> value (+inf outside domain).
// Objectives are normalized to O(1) by the models, so the duality-gap target
// opts.gap_tol * max(1, |objective|) is meaningful for all of them.
template <class Model>
EngineOutcome barrier_minimize(const Model& model, VectorXd x, const SolverOptions& opts) {
  EngineOutcome out;
  const int m = model.constraint_count();
  if (m == 0) {
    out.x = std::move(x);
    return out;
  }
  if (!std::isfinite(model.barrier(x, 1.0, nullptr, nullptr))) {
    out.x = std::move(x);
    out.status = SolveStatus::infeasible;
    return out;
  }

  VectorXd g(model.dim());
  MatrixXd h(model.dim(), model.dim());
  double t = std::max(1.0, static_cast<double>(m));
  for (int stage = 0; stage < 64; ++stage) {
    int steps = 0;
    double prev_dec = kInf;
    for (;;) {
      double val = model.barrier(x, t, &g, &h);
      double dec = 0.0;
      VectorXd d = newton_direction(h, g, &dec);
      if (0.5 * dec <= opts.newton_tol) break;
      // Inside the quadratic-convergence region the barrier value is too
      // noisy (it scales with t) to drive a line search; the decrement is
      // gradient-based and stays accurate, so take plain Newton steps and
      // stop once they no longer contract.
      if (dec <= 0.25 && prev_dec <= 0.25 && dec >= 0.9 * prev_dec) break;
      bool moved = false;
      if (dec <= 0.25) {
        VectorXd xn = x + d;
        if (std::isfinite(model.barrier(xn, t, nullptr, nullptr))) {
          x = std::move(xn);
          moved = true;
        }
      }
      if (!moved) {
        double alpha = 1.0;
        double band = 1e-13 * (1.0 + std::abs(val));
        for (int ls = 0; ls < 80; ++ls) {
          VectorXd xn = x + alpha * d;
          double vn = model.barrier(xn, t, nullptr, nullptr);
          if (std::isfinite(vn) && vn <= val - 0.01 * alpha * dec + band) {
            x = std::move(xn);
            moved = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      ++out.newton_steps;
      prev_dec = dec;
      if (!moved) break;
      if (++steps >= opts.newton_cap) {
        out.status = SolveStatus::iteration_limit;
        break;
      }
    }
    out.final_t = t;
    double gap = m / t;
    if (gap <= opts.gap_tol * std::max(1.0, std::abs(model.objective(x)))) break;
    if (out.status == SolveStatus::iteration_limit) break;
    t *= opts.barrier_increase;
  }
  out.x = std::move(x);
  return out;
}

// ----- throughput-maximizing power step -------------------------------------

// Variables x = [p(0..A-1), chi(0..A-1)].
struct P3Model {
  const PowerSubproblem& sub;
  int a_count;
  double obj_scale;  // normalizes the throughput objective to O(1)

  int dim() const { return 2 * a_count; }
  int constraint_count() const { return 3 * a_count + 1; }

  double objective(const VectorXd& x) const {
    double v = 0.0;
    for (int a = 0; a < a_count; ++a) v -= std::log1p(x[a_count + a]) / kLn2;
    return v / obj_scale;
  }

  // Slack of the surrogate SINR constraint of link a (positive = satisfied).
  double q_slack(const VectorXd& x, int a) const {
    double chi = x[a_count + a];
    double need = sub.nu[a] * chi;
    if (!sub.layout.is_last_in_channel(a)) {
      double s = 0.0;
      for (int b = a + 1; b < sub.channel_end(a); ++b) s += x[b];
      need += s * s / (2.0 * sub.alpha[a]) + 0.5 * sub.alpha[a] * chi * chi;
    }
    return x[a] - need;
  }

  double barrier(const VectorXd& x, double t, VectorXd* g, MatrixXd* h) const {
    if (g) g->setZero();
    if (h) h->setZero();
    double val = 0.0;
    double coeff = t / (obj_scale * kLn2);

    for (int a = 0; a < a_count; ++a) {
      double chi = x[a_count + a];
      double p = x[a];
      if (chi <= sub.chi_min || p <= 0.0) return kInf;
      // objective -log(1+chi) part
      val -= coeff * std::log1p(chi);
      if (g) (*g)[a_count + a] -= coeff / (1.0 + chi);
      if (h) (*h)(a_count + a, a_count + a) += coeff / ((1.0 + chi) * (1.0 + chi));
      // chi >= chi_min and p >= 0 barriers
      double s1 = chi - sub.chi_min;
      val -= std::log(s1);
      if (g) (*g)[a_count + a] -= 1.0 / s1;
      if (h) (*h)(a_count + a, a_count + a) += 1.0 / (s1 * s1);
      val -= std::log(p);
      if (g) (*g)[a] -= 1.0 / p;
      if (h) (*h)(a, a) += 1.0 / (p * p);
    }

    double budget = sub.p_max - x.head(a_count).sum();
    if (budget <= 0.0) return kInf;
    val -= std::log(budget);
    if (g)
      for (int a = 0; a < a_count; ++a) (*g)[a] += 1.0 / budget;
    if (h) {
      double w = 1.0 / (budget * budget);
      for (int a = 0; a < a_count; ++a)
        for (int b = 0; b < a_count; ++b) (*h)(a, b) += w;
    }

    for (int a = 0; a < a_count; ++a) {
      double s = q_slack(x, a);
      if (s <= 0.0) return kInf;
      val -= std::log(s);
      if (!g) continue;
      // ds/dp_a = 1, ds/dp_b = -S/alpha for later-decoded b, ds/dchi = -(alpha chi + nu)
      double chi = x[a_count + a];
      bool last = sub.layout.is_last_in_channel(a);
      double inter = 0.0;
      if (!last)
        for (int b = a + 1; b < sub.channel_end(a); ++b) inter += x[b];
      double ds_chi = last ? -sub.nu[a] : -(sub.alpha[a] * chi + sub.nu[a]);
      double ds_pb = last ? 0.0 : -inter / sub.alpha[a];
      double inv = 1.0 / s;
      (*g)[a] -= inv;
      (*g)[a_count + a] -= inv * ds_chi;
      if (!last)
        for (int b = a + 1; b < sub.channel_end(a); ++b) (*g)[b] -= inv * ds_pb;
      if (h) {
        // (1/s^2) ds ds^T - (1/s) d2s
        auto add = [&](int i, int j, double v) { (*h)(i, j) += v; };
        double inv2 = inv * inv;
        std::vector<std::pair<int, double>> ds;
        ds.reserve(2 + sub.channel_end(a) - a);
        ds.emplace_back(a, 1.0);
        ds.emplace_back(a_count + a, ds_chi);
        if (!last)
          for (int b = a + 1; b < sub.channel_end(a); ++b) ds.emplace_back(b, ds_pb);
        for (auto [i, vi] : ds)
          for (auto [j, vj] : ds) add(i, j, inv2 * vi * vj);
        if (!last) {
          add(a_count + a, a_count + a, inv * sub.alpha[a]);
          double w = inv / sub.alpha[a];
          for (int b = a + 1; b < sub.channel_end(a); ++b)
            for (int c2 = a + 1; c2 < sub.channel_end(a); ++c2) add(b, c2, w);
        } else {
          // affine constraint, no curvature
        }
      }
    }
    return val;
  }
};

// Componentwise-minimal feasible powers at chi slightly above the floor,
// built backwards from each channel's interference-free last link. Fails
// only when no strictly interior point exists for the given alpha.
bool p3_chain_point(const PowerSubproblem& sub, VectorXd* p_out, VectorXd* chi_out) {
  int a_count = sub.layout.count();
  for (double delta : {1e-4, 1e-7, 1e-10}) {
    double chi_t = sub.chi_min + delta * (1.0 + sub.chi_min);
    VectorXd p = VectorXd::Zero(a_count);
    VectorXd chi = VectorXd::Constant(a_count, chi_t);
    for (int n = 0; n < sub.layout.channel_count(); ++n) {
      for (int a = sub.layout.begin[n + 1] - 1; a >= sub.layout.begin[n]; --a) {
        double need = sub.nu[a] * chi_t;
        if (!sub.layout.is_last_in_channel(a)) {
          double s = sub.later_sum(p, a);
          need += s * s / (2.0 * sub.alpha[a]) + 0.5 * sub.alpha[a] * chi_t * chi_t;
        }
        p[a] = need * (1.0 + delta) + 1e-300;
      }
    }
    if (p.sum() < sub.p_max * (1.0 - 1e-12)) {
      *p_out = p;
      *chi_out = chi;
      return true;
    }
  }
  return false;
}

bool p3_strictly_feasible(const P3Model& model, const VectorXd& x) {
  return std::isfinite(model.barrier(x, 1.0, nullptr, nullptr));
}

// ----- feasibility power step -----------------------------------------------

// Variables x = [p(0..A-1), chi(0..A-1), z]; minimizes z with z added to the
// rate floor, surrogate SINR and budget constraints.
struct P4Model {
  const PowerSubproblem& sub;
  int a_count;
  double r_min;

  int dim() const { return 2 * a_count + 1; }
  int constraint_count() const { return 4 * a_count + 2; }
  double objective(const VectorXd& x) const { return x[2 * a_count]; }

  double barrier(const VectorXd& x, double t, VectorXd* g, MatrixXd* h) const {
    if (g) g->setZero();
    if (h) h->setZero();
    int zi = 2 * a_count;
    double z = x[zi];
    if (z <= 0.0) return kInf;
    double val = t * z - std::log(z);
    if (g) {
      (*g)[zi] += t;
      (*g)[zi] -= 1.0 / z;
    }
    if (h) (*h)(zi, zi) += 1.0 / (z * z);

    for (int a = 0; a < a_count; ++a) {
      double p = x[a];
      double chi = x[a_count + a];
      if (p <= 0.0 || chi <= 0.0) return kInf;
      val -= std::log(p);
      val -= std::log(chi);
      if (g) {
        (*g)[a] -= 1.0 / p;
        (*g)[a_count + a] -= 1.0 / chi;
      }
      if (h) {
        (*h)(a, a) += 1.0 / (p * p);
        (*h)(a_count + a, a_count + a) += 1.0 / (chi * chi);
      }

      // rate floor: z + log2(1+chi) - r_min > 0
      double s1 = z + std::log1p(chi) / kLn2 - r_min;
      if (s1 <= 0.0) return kInf;
      val -= std::log(s1);
      if (g) {
        double inv = 1.0 / s1;
        double dchi = 1.0 / (kLn2 * (1.0 + chi));
        (*g)[zi] -= inv;
        (*g)[a_count + a] -= inv * dchi;
        if (h) {
          double inv2 = inv * inv;
          (*h)(zi, zi) += inv2;
          (*h)(zi, a_count + a) += inv2 * dchi;
          (*h)(a_count + a, zi) += inv2 * dchi;
          (*h)(a_count + a, a_count + a) += inv2 * dchi * dchi;
          // -(1/s) d2s with d2s = -1/(ln2 (1+chi)^2)
          (*h)(a_count + a, a_count + a) += inv / (kLn2 * (1.0 + chi) * (1.0 + chi));
        }
      }

      // surrogate SINR with slack: z + p - quadratic > 0
      double chi_a = chi;
      bool last = sub.layout.is_last_in_channel(a);
      double inter = 0.0;
      if (!last)
        for (int b = a + 1; b < sub.channel_end(a); ++b) inter += x[b];
      double need = sub.nu[a] * chi_a;
      if (!last)
        need += inter * inter / (2.0 * sub.alpha[a]) + 0.5 * sub.alpha[a] * chi_a * chi_a;
      double s2 = z + p - need;
      if (s2 <= 0.0) return kInf;
      val -= std::log(s2);
      if (g) {
        double inv = 1.0 / s2;
        double ds_chi = last ? -sub.nu[a] : -(sub.alpha[a] * chi_a + sub.nu[a]);
        double ds_pb = last ? 0.0 : -inter / sub.alpha[a];
        std::vector<std::pair<int, double>> ds;
        ds.emplace_back(zi, 1.0);
        ds.emplace_back(a, 1.0);
        ds.emplace_back(a_count + a, ds_chi);
        if (!last)
          for (int b = a + 1; b < sub.channel_end(a); ++b) ds.emplace_back(b, ds_pb);
        for (auto [i, vi] : ds) (*g)[i] -= inv * vi;
        if (h) {
          double inv2 = inv * inv;
          for (auto [i, vi] : ds)
            for (auto [j, vj] : ds) (*h)(i, j) += inv2 * vi * vj;
          if (!last) {
            (*h)(a_count + a, a_count + a) += inv * sub.alpha[a];
            double w = inv / sub.alpha[a];
            for (int b = a + 1; b < sub.channel_end(a); ++b)
              for (int c2 = a + 1; c2 < sub.channel_end(a); ++c2) (*h)(b, c2) += w;
          }
        }
      }
    }

    double s3 = x[zi] + sub.p_max - x.head(a_count).sum();
    if (s3 <= 0.0) return kInf;
    val -= std::log(s3);
    if (g) {
      double inv = 1.0 / s3;
      (*g)[zi] -= inv;
      for (int a = 0; a < a_count; ++a) (*g)[a] += inv;
      if (h) {
        double inv2 = inv * inv;
        std::vector<std::pair<int, double>> ds;
        ds.emplace_back(zi, 1.0);
        for (int a = 0; a < a_count; ++a) ds.emplace_back(a, -1.0);
        for (auto [i, vi] : ds)
          for (auto [j, vj] : ds) (*h)(i, j) += inv2 * vi * vj;
      }
    }
    return val;
  }
};

}  // namespace

PowerSolveResult solve_p3(const PowerSubproblem& sub, const Eigen::VectorXd& p_init,
                          const Eigen::VectorXd& chi_init, const SolverOptions& opts) {
  int a_count = sub.layout.count();
  PowerSolveResult res;
  if (a_count == 0) {
    res.p.resize(0);
    res.chi.resize(0);
    return res;
  }

  // Objective scale from a rough upper bound on the total throughput.
  double chi_cap = 0.0;
  for (int a = 0; a < a_count; ++a)
    chi_cap = std::max(chi_cap, sub.p_max / std::max(sub.nu[a], 1e-300));
  double scale = std::max(1.0, a_count * std::log1p(chi_cap) / kLn2);
  P3Model model{sub, a_count, scale};

  VectorXd x(2 * a_count);
  bool have_start = false;
  if (p_init.size() == a_count && chi_init.size() == a_count) {
    x.head(a_count) = p_init;
    x.tail(a_count) = chi_init;
    have_start = p3_strictly_feasible(model, x);
  }
  if (!have_start) {
    VectorXd p0, chi0;
    if (!p3_chain_point(sub, &p0, &chi0)) {
      res.status = SolveStatus::infeasible;
      res.p = p_init;
      res.chi = chi_init;
      return res;
    }
    x.head(a_count) = p0;
    x.tail(a_count) = chi0;
  }

  EngineOutcome out = barrier_minimize(model, std::move(x), opts);
  res.status = out.status;
  res.newton_steps = out.newton_steps;
  res.p = out.x.head(a_count);
  res.chi = out.x.tail(a_count);
  res.objective = 0.0;
  for (int a = 0; a < a_count; ++a) res.objective += std::log1p(res.chi[a]) / kLn2;

  // Stationarity residual of the barrier optimality condition, scaled back
  // to the natural objective units.
  if (out.final_t > 0.0) {
    VectorXd g(model.dim());
    MatrixXd h(model.dim(), model.dim());
    model.barrier(out.x, out.final_t, &g, &h);
    res.kkt_residual = g.lpNorm<Eigen::Infinity>() / out.final_t * scale;
  }
  return res;
}

FeasSolveResult solve_p4(const PowerSubproblem& sub, const Eigen::VectorXd& p_init,
                         const Eigen::VectorXd& chi_init, const SolverOptions& opts) {
  int a_count = sub.layout.count();
  FeasSolveResult res;
  if (a_count == 0) {
    res.p.resize(0);
    res.chi.resize(0);
    return res;
  }
  double r_min = std::log1p(sub.chi_min) / kLn2;
  P4Model model{sub, a_count, r_min};

  VectorXd x(2 * a_count + 1);
  double p_floor = 1e-12 * (1.0 + sub.p_max);
  for (int a = 0; a < a_count; ++a) {
    x[a] = (a < p_init.size()) ? std::max(p_init[a], p_floor) : p_floor;
    x[a_count + a] = (a < chi_init.size()) ? std::max(chi_init[a], 1e-9) : 1e-9;
  }
  // Start z strictly above every violation.
  double worst = 0.0;
  for (int a = 0; a < a_count; ++a) {
    double chi = x[a_count + a];
    worst = std::max(worst, r_min - std::log1p(chi) / kLn2);
    double need = sub.nu[a] * chi;
    if (!sub.layout.is_last_in_channel(a)) {
      double s = 0.0;
      for (int b = a + 1; b < sub.channel_end(a); ++b) s += x[b];
      need += s * s / (2.0 * sub.alpha[a]) + 0.5 * sub.alpha[a] * chi * chi;
    }
    worst = std::max(worst, need - x[a]);
  }
  worst = std::max(worst, x.head(a_count).sum() - sub.p_max);
  x[2 * a_count] = worst + 1.0;

  EngineOutcome out = barrier_minimize(model, std::move(x), opts);
  res.status = out.status;
  res.newton_steps = out.newton_steps;
  res.p = out.x.head(a_count);
  res.chi = out.x.segment(a_count, a_count);
  res.z = out.x[2 * a_count];
  return res;
}

// ----- reflection step ------------------------------------------------------

namespace {

// Variables x = [Re e (M), Im e (M), s]; all gain quantities normalized by the
// largest linearized gain so tolerances are scale-free.
struct P6Model {
  MatrixXd zre, zim;   // A x M
  VectorXd hre, him;   // A
  VectorXd beta, rhs;  // A
  VectorXd kap_t, xi_t;
  std::vector<std::pair<int, int>> pairs;
  double margin = 0.0;
  int a_count = 0;
  int m_count = 0;

  int dim() const { return 2 * m_count + 1; }
  int constraint_count() const {
    return a_count + static_cast<int>(pairs.size()) + m_count;
  }
  double objective(const VectorXd& x) const { return -x[dim() - 1]; }

  double kappa(const VectorXd& x, int a) const {
    double v = hre[a];
    for (int m = 0; m < m_count; ++m)
      v += zre(a, m) * x[m] - zim(a, m) * x[m_count + m];
    return v;
  }
  double xi(const VectorXd& x, int a) const {
    double v = him[a];
    for (int m = 0; m < m_count; ++m)
      v += zim(a, m) * x[m] + zre(a, m) * x[m_count + m];
    return v;
  }
  double phi(const VectorXd& x, int a) const {
    return 2.0 * kap_t[a] * kappa(x, a) + 2.0 * xi_t[a] * xi(x, a) -
           (kap_t[a] * kap_t[a] + xi_t[a] * xi_t[a]);
  }

  // Accumulates -(w) * grad(kappa_a) style terms.
  void add_kappa_grad(VectorXd* g, int a, double w) const {
    for (int m = 0; m < m_count; ++m) {
      (*g)[m] += w * zre(a, m);
      (*g)[m_count + m] += w * -zim(a, m);
    }
  }
  void add_xi_grad(VectorXd* g, int a, double w) const {
    for (int m = 0; m < m_count; ++m) {
      (*g)[m] += w * zim(a, m);
      (*g)[m_count + m] += w * zre(a, m);
    }
  }
  void grad_gain(const VectorXd& x, int a, VectorXd* g) const {
    // gradient of kappa^2 + xi^2
    g->setZero();
    add_kappa_grad(g, a, 2.0 * kappa(x, a));
    add_xi_grad(g, a, 2.0 * xi(x, a));
  }
  void grad_phi(int a, VectorXd* g) const {
    g->setZero();
    add_kappa_grad(g, a, 2.0 * kap_t[a]);
    add_xi_grad(g, a, 2.0 * xi_t[a]);
  }
  void gain_hess(int a, MatrixXd* h, double w) const {
    // w * 2 (gk gk^T + gx gx^T) done entrywise from the z rows
    for (int m1 = 0; m1 < m_count; ++m1)
      for (int m2 = 0; m2 < m_count; ++m2) {
        double rr = zre(a, m1) * zre(a, m2) + zim(a, m1) * zim(a, m2);
        double ri = -zre(a, m1) * zim(a, m2) + zim(a, m1) * zre(a, m2);
        (*h)(m1, m2) += 2.0 * w * rr;
        (*h)(m_count + m1, m_count + m2) += 2.0 * w * rr;
        (*h)(m1, m_count + m2) += 2.0 * w * ri;
        (*h)(m_count + m2, m1) += 2.0 * w * ri;
      }
  }

  double barrier(const VectorXd& x, double t, VectorXd* g, MatrixXd* h) const {
    if (g) g->setZero();
    if (h) h->setZero();
    int si = dim() - 1;
    double s_var = x[si];
    double val = -t * s_var;
    if (g) (*g)[si] -= t;

    VectorXd tmp(dim());
    for (int a = 0; a < a_count; ++a) {
      double ka = kappa(x, a);
      double xa = xi(x, a);
      double gain = ka * ka + xa * xa;
      double slack = phi(x, a) - beta[a] * gain - rhs[a] - s_var;
      if (slack <= 0.0) return kInf;
      val -= std::log(slack);
      if (g) {
        double inv = 1.0 / slack;
        tmp.setZero();
        add_kappa_grad(&tmp, a, 2.0 * kap_t[a] - beta[a] * 2.0 * ka);
        add_xi_grad(&tmp, a, 2.0 * xi_t[a] - beta[a] * 2.0 * xa);
        tmp[si] = -1.0;
        for (int i = 0; i < dim(); ++i) (*g)[i] -= inv * tmp[i];
        if (h) {
          double inv2 = inv * inv;
          for (int i = 0; i < dim(); ++i) {
            if (tmp[i] == 0.0) continue;
            for (int j = 0; j < dim(); ++j)
              if (tmp[j] != 0.0) (*h)(i, j) += inv2 * tmp[i] * tmp[j];
          }
          if (beta[a] != 0.0) gain_hess(a, h, inv * beta[a]);
        }
      }
    }

    for (const auto& [lo, hi] : pairs) {
      double ka = kappa(x, lo);
      double xa = xi(x, lo);
      double slack = phi(x, hi) - (ka * ka + xa * xa) - margin - s_var;
      if (slack <= 0.0) return kInf;
      val -= std::log(slack);
      if (g) {
        double inv = 1.0 / slack;
        tmp.setZero();
        add_kappa_grad(&tmp, hi, 2.0 * kap_t[hi]);
        add_xi_grad(&tmp, hi, 2.0 * xi_t[hi]);
        add_kappa_grad(&tmp, lo, -2.0 * ka);
        add_xi_grad(&tmp, lo, -2.0 * xa);
        tmp[si] = -1.0;
        for (int i = 0; i < dim(); ++i) (*g)[i] -= inv * tmp[i];
        if (h) {
          double inv2 = inv * inv;
          for (int i = 0; i < dim(); ++i) {
            if (tmp[i] == 0.0) continue;
            for (int j = 0; j < dim(); ++j)
              if (tmp[j] != 0.0) (*h)(i, j) += inv2 * tmp[i] * tmp[j];
          }
          gain_hess(lo, h, inv);
        }
      }
    }

    for (int m = 0; m < m_count; ++m) {
      double re = x[m], im = x[m_count + m];
      double slack = 1.0 - re * re - im * im;
      if (slack <= 0.0) return kInf;
      val -= std::log(slack);
      if (g) {
        double inv = 1.0 / slack;
        (*g)[m] += inv * 2.0 * re;
        (*g)[m_count + m] += inv * 2.0 * im;
        if (h) {
          double inv2 = inv * inv;
          (*h)(m, m) += inv2 * 4.0 * re * re + inv * 2.0;
          (*h)(m_count + m, m_count + m) += inv2 * 4.0 * im * im + inv * 2.0;
          (*h)(m, m_count + m) += inv2 * 4.0 * re * im;
          (*h)(m_count + m, m) += inv2 * 4.0 * re * im;
        }
      }
    }
    return val;
  }
};

}  // namespace

ReflectionSolveResult solve_p6(const ReflectionSubproblem& sub,
                               const Eigen::VectorXcd& e_start, const SolverOptions& opts) {
  ReflectionSolveResult res;
  int a_count = static_cast<int>(sub.zr.rows());
  int m_count = static_cast<int>(sub.zr.cols());
  if (a_count == 0) {
    res.e = e_start;
    res.feasible = true;
    res.slack = kInf;
    return res;
  }

  // Normalize by the largest linearized gain.
  double c2 = 0.0;
  for (int a = 0; a < a_count; ++a)
    c2 = std::max(c2, sub.kappa_t[a] * sub.kappa_t[a] + sub.xi_t[a] * sub.xi_t[a]);
  if (c2 <= 0.0) c2 = 1.0;
  double c = std::sqrt(c2);
  res.scale = c2;

  P6Model model;
  model.a_count = a_count;
  model.m_count = m_count;
  model.zre = sub.zr.real() / c;
  model.zim = sub.zr.imag() / c;
  model.hre = sub.h.real() / c;
  model.him = sub.h.imag() / c;
  model.beta = sub.beta;
  model.rhs = sub.rhs / c2;
  model.kap_t = sub.kappa_t / c;
  model.xi_t = sub.xi_t / c;
  model.pairs = sub.pairs;
  model.margin = sub.order_margin;

  // Strictly interior start: shrink into the unit balls, then put the shared
  // slack below every constraint's cap.
  VectorXd x = VectorXd::Zero(model.dim());
  double max_mod = 0.0;
  for (int m = 0; m < m_count; ++m) max_mod = std::max(max_mod, std::abs(e_start[m]));
  double shrink = (max_mod >= 1.0) ? 0.999 / max_mod : 1.0;
  for (int m = 0; m < m_count; ++m) {
    x[m] = e_start[m].real() * shrink;
    x[m_count + m] = e_start[m].imag() * shrink;
  }
  double cap = kInf;
  for (int a = 0; a < a_count; ++a) {
    double ka = model.kappa(x, a);
    double xa = model.xi(x, a);
    cap = std::min(cap, model.phi(x, a) - model.beta[a] * (ka * ka + xa * xa) - model.rhs[a]);
  }
  for (const auto& [lo, hi] : model.pairs) {
    double ka = model.kappa(x, lo);
    double xa = model.xi(x, lo);
    cap = std::min(cap, model.phi(x, hi) - (ka * ka + xa * xa) - model.margin);
  }
  x[model.dim() - 1] = cap - std::max(1.0, 0.1 * std::abs(cap));

  EngineOutcome out = barrier_minimize(model, std::move(x), opts);
  res.status = out.status;
  res.newton_steps = out.newton_steps;
  res.e.resize(m_count);
  for (int m = 0; m < m_count; ++m)
    res.e[m] = std::complex<double>(out.x[m], out.x[m_count + m]);
  res.slack = out.x[model.dim() - 1];
  res.feasible = res.slack > 0.0;
  return res;
}

// ----- decoding-order SDP ---------------------------------------------------

namespace {

// Dual of the diagonally-capped SDP: minimize sum(y) with Diag(y) - C >= 0
// and y_m >= 0 for all but the last entry. The log-det barrier keeps the
// Newton system at dim real variables; the primal matrix is recovered from
// the slack inverse on the central path.
struct P9Model {
  MatrixXcd cn;
  int n = 0;

  int dim() const { return n; }
  int constraint_count() const { return 2 * n - 1; }  // log-det degree n plus n-1 signs
  double objective(const VectorXd& y) const { return y.sum(); }

  bool chol(const VectorXd& y, Eigen::LLT<MatrixXcd>* llt) const {
    MatrixXcd s = -cn;
    s.diagonal() += y.cast<std::complex<double>>();
    llt->compute(s);
    return llt->info() == Eigen::Success;
  }

  double barrier(const VectorXd& y, double t, VectorXd* g, MatrixXd* h) const {
    for (int m = 0; m + 1 < n; ++m)
      if (y[m] <= 0.0) return kInf;
    Eigen::LLT<MatrixXcd> llt;
    if (!chol(y, &llt)) return kInf;
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
    double val = t * y.sum() - logdet;
    for (int m = 0; m + 1 < n; ++m) val -= std::log(y[m]);
    if (g) {
      MatrixXcd sinv = llt.solve(MatrixXcd::Identity(n, n));
      for (int i = 0; i < n; ++i) {
        (*g)[i] = t - sinv(i, i).real();
        if (i + 1 < n) (*g)[i] -= 1.0 / y[i];
        if (h) {
          for (int j = 0; j < n; ++j) (*h)(i, j) = std::norm(sinv(i, j));
          if (i + 1 < n) (*h)(i, i) += 1.0 / (y[i] * y[i]);
        }
      }
    }
    return val;
  }
};

}  // namespace

SdpResult solve_p9(const Eigen::MatrixXcd& c, const SolverOptions& opts) {
  SdpResult res;
  int dim = static_cast<int>(c.rows());
  if (dim == 0 || c.cols() != dim) throw std::invalid_argument("solve_p9: square input required");

  MatrixXcd csym = 0.5 * (c + c.adjoint());
  double scale = csym.real().trace() / dim;
  if (scale <= 0.0) {
    // Degenerate objective: any feasible point is optimal.
    res.E = MatrixXcd::Identity(dim, dim);
    res.objective = csym.real().trace();
    return res;
  }

  P9Model model{csym / scale, dim};
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(model.cn);
  VectorXd y0 = VectorXd::Constant(dim, es.eigenvalues().maxCoeff() + 1.0);

  EngineOutcome out = barrier_minimize(model, std::move(y0), opts);
  res.status = out.status;
  res.newton_steps = out.newton_steps;

  Eigen::LLT<MatrixXcd> llt;
  if (out.final_t <= 0.0 || !model.chol(out.x, &llt)) {
    res.status = SolveStatus::infeasible;
    res.E = MatrixXcd::Identity(dim, dim);
    return res;
  }
  MatrixXcd e_mat = llt.solve(MatrixXcd::Identity(dim, dim)) / out.final_t;
  res.E = 0.5 * (e_mat + e_mat.adjoint());
  res.objective = scale * (model.cn * e_mat).real().trace();
  res.gap = model.constraint_count() / out.final_t;
  return res;
}

}  // namespace irsalloc
