#include "irsalloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "irsalloc/rng.hpp"

namespace irsalloc {

namespace {
// Half-wavelength element spacing: phase step of pi per element.
constexpr double kPiSteer = 3.141592653589793238462643383279502884;
}  // namespace

Assignment Assignment::empty(int n_channels, int n_users) {
  Assignment a;
  a.members.resize(n_channels);
  a.channel_of.assign(n_users, -1);
  return a;
}

void Assignment::add(int channel, int user) {
  if (channel_of[user] != -1) throw std::logic_error("assignment: user already placed");
  members[channel].push_back(user);
  channel_of[user] = channel;
}

void Assignment::remove(int channel, int user) {
  auto& v = members[channel];
  auto it = std::find(v.begin(), v.end(), user);
  if (it == v.end() || channel_of[user] != channel)
    throw std::logic_error("assignment: user not on channel");
  v.erase(it);
  channel_of[user] = -1;
}

int Assignment::assigned_count() const {
  int c = 0;
  for (int ch : channel_of)
    if (ch >= 0) ++c;
  return c;
}

int DecodingOrder::position(int n, int k) const {
  const auto& s = seq[n];
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (s[i] == k) return i;
  throw std::domain_error("decoding order: user not in channel sequence");
}

bool reflection_valid(const Eigen::VectorXcd& e, double tol) {
  for (Eigen::Index m = 0; m < e.size(); ++m)
    if (std::abs(e[m]) > 1.0 + tol) return false;
  return true;
}

double path_loss(double distance_m, double exponent) {
  if (distance_m <= 0.0) throw std::domain_error("path_loss: distance must be positive");
  return 1e-3 * std::pow(distance_m, -exponent);
}

ChannelRealization sample_channels(const SystemConfig& cfg, std::uint64_t seed) {
  const int n = cfg.n_channels;
  const int k = cfg.n_users;
  const int m = cfg.n_elements;

  ChannelRealization chan;
  chan.n_channels = n;
  chan.n_users = k;
  chan.n_elements = m;

  Rng rng(seed);

  // User drop: uniform on a disc around the hotspot center.
  chan.user_pos.resize(k);
  for (int u = 0; u < k; ++u) {
    double r = cfg.user_radius * std::sqrt(rng.uniform());
    double a = rng.phase();
    chan.user_pos[u] = {cfg.user_center.x + r * std::cos(a),
                        cfg.user_center.y + r * std::sin(a), cfg.user_center.z};
  }

  // Direct links: Rayleigh with distance-based variance.
  chan.h.resize(n, k);
  for (int c = 0; c < n; ++c)
    for (int u = 0; u < k; ++u) {
      double pl = path_loss(distance(cfg.bs_pos, chan.user_pos[u]), cfg.alpha_bs_user);
      chan.h(c, u) = rng.cnormal(1.0) * std::sqrt(pl);
    }

  // Surface->user links: Rayleigh per element.
  chan.g.resize(n);
  for (int c = 0; c < n; ++c) {
    chan.g[c].resize(m, k);
    for (int u = 0; u < k; ++u) {
      double pl = path_loss(distance(cfg.irs_pos, chan.user_pos[u]), cfg.alpha_irs_user);
      double s = std::sqrt(pl);
      for (int el = 0; el < m; ++el) chan.g[c](el, u) = rng.cnormal(1.0) * s;
    }
  }

  // BS->surface links: Rician mix of a steering-vector LoS part and a
  // scattered part, both scaled to the link's path loss.
  chan.f.resize(n);
  chan.f_los.resize(n);
  chan.f_nlos.resize(n);
  double d_bi = distance(cfg.bs_pos, cfg.irs_pos);
  double pl_bi = path_loss(d_bi, cfg.alpha_bs_irs);
  double cos_aoa = (cfg.bs_pos.x - cfg.irs_pos.x) / d_bi;  // array lies along x
  double kappa = cfg.rician_factor;
  double w_los = std::sqrt(kappa / (1.0 + kappa));
  double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
  for (int c = 0; c < n; ++c) {
    chan.f_los[c].resize(m);
    chan.f_nlos[c].resize(m);
    chan.f[c].resize(m);
    for (int el = 0; el < m; ++el) {
      double phi = kPiSteer * el * cos_aoa;
      chan.f_los[c][el] = std::sqrt(pl_bi) * std::complex<double>(std::cos(phi), std::sin(phi));
    }
    for (int el = 0; el < m; ++el) chan.f_nlos[c][el] = rng.cnormal(1.0) * std::sqrt(pl_bi);
    chan.f[c] = w_los * chan.f_los[c] + w_nlos * chan.f_nlos[c];
  }

  chan.zrows.resize(n);
  for (int c = 0; c < n; ++c) {
    chan.zrows[c].resize(k, m);
    for (int u = 0; u < k; ++u)
      chan.zrows[c].row(u) = chan.g[c].col(u).adjoint() * chan.f[c].asDiagonal();
  }
  return chan;
}

double combined_gain(const ChannelRealization& chan, int n, int k,
                     const Eigen::VectorXcd& e) {
  if (chan.n_elements == 0) return std::norm(chan.h(n, k));
  if (e.size() != chan.n_elements)
    throw std::invalid_argument("combined_gain: reflection vector has wrong length");
  std::complex<double> amp = chan.zrow(n, k) * e;
  return std::norm(amp + chan.h(n, k));
}

namespace {

// Interference power seen when decoding user at position `pos` of channel
// n's sequence: the sum of powers of all later-decoded users.
double later_power(const DecodingOrder& order, const Eigen::MatrixXd& p, int n, int pos) {
  const auto& s = order.seq[n];
  double sum = 0.0;
  for (int i = pos + 1; i < static_cast<int>(s.size()); ++i) sum += p(n, s[i]);
  return sum;
}

}  // namespace

Eigen::MatrixXd rate_matrix(const ChannelRealization& chan, const Assignment& assign,
                            const DecodingOrder& order, const Eigen::MatrixXd& p,
                            const Eigen::VectorXcd& e, double noise_w) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(chan.n_channels, chan.n_users);
  for (int n = 0; n < chan.n_channels; ++n) {
    const auto& s = order.seq[n];
    for (int pos = 0; pos < static_cast<int>(s.size()); ++pos) {
      int k = s[pos];
      if (assign.channel_of[k] != n)
        throw std::domain_error("rate_matrix: order lists a user not assigned to the channel");
      double gain = combined_gain(chan, n, k, e);
      double interf = gain * later_power(order, p, n, pos);
      double sinr = p(n, k) * gain / (interf + noise_w);
      r(n, k) = std::log2(1.0 + sinr);
    }
  }
  return r;
}

double cross_rate(const ChannelRealization& chan, const Assignment& assign,
                  const DecodingOrder& order, const Eigen::MatrixXd& p,
                  const Eigen::VectorXcd& e, double noise_w, int n, int decoder,
                  int target) {
  if (assign.channel_of[decoder] != n || assign.channel_of[target] != n)
    throw std::domain_error("cross_rate: both users must be assigned to channel n");
  double gain = combined_gain(chan, n, decoder, e);
  double interf = gain * later_power(order, p, n, order.position(n, target));
  double sinr = p(n, target) * gain / (interf + noise_w);
  return std::log2(1.0 + sinr);
}

bool sic_feasible(const ChannelRealization& chan, const Assignment& assign,
                  const DecodingOrder& order, const Eigen::VectorXcd& e,
                  double margin) {
  for (int n = 0; n < chan.n_channels; ++n) {
    const auto& s = order.seq[n];
    double prev = 0.0;
    for (int pos = 0; pos < static_cast<int>(s.size()); ++pos) {
      if (assign.channel_of[s[pos]] != n)
        throw std::domain_error("sic_feasible: order lists a user not assigned to the channel");
      double gain = combined_gain(chan, n, s[pos], e);
      if (pos > 0 && gain - prev < margin) return false;
      prev = gain;
    }
  }
  return true;
}

}  // namespace irsalloc
