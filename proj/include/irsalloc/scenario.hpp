#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "irsalloc/config.hpp"

namespace irsalloc {

// One fading realization. h holds the direct BS->user links, g the
// surface->user links and f the BS->surface links (per channel). The LoS and
// scattered parts of f are kept so tests can check the Rician mix. zrows
// caches g_k^H diag(f_n), the row vector that maps a reflection vector e to
// the reflected-path amplitude.
struct ChannelRealization {
  int n_channels = 0;
  int n_users = 0;
  int n_elements = 0;
  std::vector<Vec3> user_pos;           // K entries
  Eigen::MatrixXcd h;                   // N x K
  std::vector<Eigen::MatrixXcd> g;      // per channel: M x K
  std::vector<Eigen::VectorXcd> f;      // per channel: M
  std::vector<Eigen::VectorXcd> f_los;  // per channel: M, constant modulus
  std::vector<Eigen::VectorXcd> f_nlos; // per channel: M
  std::vector<Eigen::MatrixXcd> zrows;  // per channel: K x M

  Eigen::RowVectorXcd zrow(int n, int k) const { return zrows[n].row(k); }
};

// Channel assignment. members[n] lists the users multiplexed on channel n
// (unordered); channel_of[k] is the channel of user k or -1.
struct Assignment {
  std::vector<std::vector<int>> members;
  std::vector<int> channel_of;

  static Assignment empty(int n_channels, int n_users);
  void add(int channel, int user);
  void remove(int channel, int user);
  int load(int channel) const { return static_cast<int>(members[channel].size()); }
  int assigned_count() const;
};

// Successive decoding order. seq[n] lists channel n's users in the order the
// receiver decodes them: seq[n].front() is decoded (and cancelled) first, so
// seq[n].back() sees no intra-channel interference.
struct DecodingOrder {
  std::vector<std::vector<int>> seq;

  // Position of user k in its channel's sequence, 0-based.
  int position(int n, int k) const;
};

// True when every reflection coefficient magnitude is at most 1 + tol.
bool reflection_valid(const Eigen::VectorXcd& e, double tol = 1e-9);

// Distance-based average power gain 1e-3 * d^-exponent. Throws
// std::domain_error for nonpositive distance.
double path_loss(double distance_m, double exponent);

// Draws user positions and all fading links. Deterministic in (cfg, seed);
// raw unit-variance draws are made first and scaled by sqrt(path loss), so
// realizations at equal seeds stay paired across geometry or power sweeps.
ChannelRealization sample_channels(const SystemConfig& cfg, std::uint64_t seed);

// |z_{n,k} e + h_{n,k}|^2, the effective power gain of user k on channel n
// under reflection vector e (length M; e is ignored when M == 0).
double combined_gain(const ChannelRealization& chan, int n, int k,
                     const Eigen::VectorXcd& e);

// Achieved rate of every user under successive decoding, bit/s/Hz. p is the
// N x K transmit power matrix; entries of unassigned users are ignored.
Eigen::MatrixXd rate_matrix(const ChannelRealization& chan, const Assignment& assign,
                            const DecodingOrder& order, const Eigen::MatrixXd& p,
                            const Eigen::VectorXcd& e, double noise_w);

// Rate at which user `decoder` can decode the signal intended for user
// `target` on channel n (both assigned there). Equals the target's own rate
// when decoder == target. Throws std::domain_error if either user is not
// assigned to channel n.
double cross_rate(const ChannelRealization& chan, const Assignment& assign,
                  const DecodingOrder& order, const Eigen::MatrixXd& p,
                  const Eigen::VectorXcd& e, double noise_w, int n, int decoder,
                  int target);

// True when combined gains are ascending along every channel's decoding
// sequence with at least `margin` between neighbours (margin may be negative
// to allow tolerance). This is the condition under which every later-decoded
// user can decode the earlier users' signals at their intended rates.
bool sic_feasible(const ChannelRealization& chan, const Assignment& assign,
                  const DecodingOrder& order, const Eigen::VectorXcd& e,
                  double margin = 0.0);

}  // namespace irsalloc
