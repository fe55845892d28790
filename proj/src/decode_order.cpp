#include "irsalloc/decode_order.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace irsalloc {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

MatrixXcd build_v(const ChannelRealization& chan, const Assignment& assign) {
  int m_count = chan.n_elements;
  MatrixXcd v = MatrixXcd::Zero(m_count + 1, m_count + 1);
  Eigen::RowVectorXcd w(m_count + 1);
  for (int n = 0; n < chan.n_channels; ++n)
    for (int k : assign.members[n]) {
      w.head(m_count) = chan.zrow(n, k);
      w[m_count] = chan.h(n, k);
      v += w.adjoint() * w;
    }
  return v;
}

VectorXcd lifted_to_phases(const VectorXcd& lifted) {
  int m_count = static_cast<int>(lifted.size()) - 1;
  std::complex<double> ref = lifted[m_count];
  double ref_arg = (std::abs(ref) > 1e-300) ? std::arg(ref) : 0.0;
  VectorXcd e(m_count);
  for (int m = 0; m < m_count; ++m) {
    double a = (std::abs(lifted[m]) > 1e-300) ? std::arg(lifted[m]) : 0.0;
    e[m] = std::polar(1.0, a - ref_arg);
  }
  return e;
}

VectorXcd randomized_lifted(const MatrixXcd& u, const VectorXd& lambda, Rng& rng) {
  VectorXcd r(lambda.size());
  for (int i = 0; i < lambda.size(); ++i) r[i] = std::polar(1.0, rng.phase());
  return u * (lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() * r);
}

DecodingOrder order_by_gain(const ChannelRealization& chan, const Assignment& assign,
                            const VectorXcd& e) {
  DecodingOrder order;
  order.seq.resize(assign.members.size());
  for (int n = 0; n < static_cast<int>(assign.members.size()); ++n) {
    order.seq[n] = assign.members[n];
    std::sort(order.seq[n].begin(), order.seq[n].end(), [&](int a, int b) {
      double ga = combined_gain(chan, n, a, e);
      double gb = combined_gain(chan, n, b, e);
      if (ga != gb) return ga < gb;
      return a < b;
    });
  }
  return order;
}

namespace {

double total_gain(const ChannelRealization& chan, const Assignment& assign,
                  const VectorXcd& e) {
  double v = 0.0;
  for (int n = 0; n < chan.n_channels; ++n)
    for (int k : assign.members[n]) v += combined_gain(chan, n, k, e);
  return v;
}

}  // namespace

OrderSelection optimize_decoding_order(const ChannelRealization& chan,
                                       const Assignment& assign, const SystemConfig& cfg,
                                       Rng& rng) {
  OrderSelection sel;
  int m_count = chan.n_elements;

  if (assign.assigned_count() == 0) {
    sel.e = VectorXcd::Ones(m_count);
    sel.order.seq.assign(chan.n_channels, {});
    sel.rank_one = true;
    return sel;
  }
  if (m_count == 0) {
    sel.e = VectorXcd();
    sel.order = order_by_gain(chan, assign, sel.e);
    sel.objective = total_gain(chan, assign, sel.e);
    sel.rank_one = true;
    return sel;
  }

  MatrixXcd v = build_v(chan, assign);
  SdpResult sdp = solve_p9(v, cfg.solver);
  sel.status = sdp.status;

  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(sdp.E);
  const VectorXd& lambda = eig.eigenvalues();  // ascending
  int last = m_count;                          // index of the largest
  VectorXcd dominant = eig.eigenvectors().col(last);
  double l1 = lambda[last];
  double l2 = (last > 0) ? std::max(lambda[last - 1], 0.0) : 0.0;

  sel.e = lifted_to_phases(dominant);
  sel.objective = total_gain(chan, assign, sel.e);
  if (l2 <= cfg.solver.rank_one_tol * l1) {
    sel.rank_one = true;
  } else {
    for (int draw = 0; draw < cfg.solver.randomization_count; ++draw) {
      VectorXcd cand = lifted_to_phases(randomized_lifted(eig.eigenvectors(), lambda, rng));
      double g = total_gain(chan, assign, cand);
      if (g > sel.objective) {
        sel.objective = g;
        sel.e = cand;
      }
    }
    sel.randomized = cfg.solver.randomization_count;
  }

  sel.order = order_by_gain(chan, assign, sel.e);
  return sel;
}

}  // namespace irsalloc
