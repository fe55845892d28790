#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "irsalloc/config.hpp"
#include "irsalloc/scenario.hpp"

namespace irsalloc {

enum class SolveStatus { ok, infeasible, iteration_limit };

// Flat enumeration of the assigned (channel, user) pairs in decoding order.
// Channels occupy contiguous index ranges, so the users whose power
// interferes with flat index a are exactly a+1 .. end of a's channel.
struct LinkLayout {
  std::vector<int> channel;  // flat index -> channel
  std::vector<int> user;     // flat index -> user
  std::vector<int> begin;    // channel -> first flat index; begin[N] = count

  int count() const { return static_cast<int>(channel.size()); }
  int channel_count() const { return static_cast<int>(begin.size()) - 1; }
  int channel_end(int n) const { return begin[n + 1]; }
  bool is_last_in_channel(int a) const { return a + 1 == begin[channel[a] + 1]; }

  static LinkLayout from(const Assignment& assign, const DecodingOrder& order);
};

// Data of one surrogate power problem: noise-over-gain nu per link, the
// surrogate slopes alpha (unused for the last-decoded link of a channel),
// the common SINR floor chi_min and the power budget.
struct PowerSubproblem {
  LinkLayout layout;
  Eigen::VectorXd nu;
  Eigen::VectorXd alpha;
  double chi_min = 0.0;
  double p_max = 0.0;

  // Interference seen by flat index a under powers p: sum over later-decoded
  // links of the same channel.
  double later_sum(const Eigen::VectorXd& p, int a) const {
    double s = 0.0;
    for (int b = a + 1; b < channel_end(a); ++b) s += p[b];
    return s;
  }
  int channel_end(int a) const { return layout.begin[layout.channel[a] + 1]; }
};

struct PowerSolveResult {
  Eigen::VectorXd p;
  Eigen::VectorXd chi;
  double objective = 0.0;      // sum of log2(1 + chi)
  double kkt_residual = 0.0;   // stationarity residual on the normalized problem
  SolveStatus status = SolveStatus::ok;
  int newton_steps = 0;
};

struct FeasSolveResult {
  Eigen::VectorXd p;
  Eigen::VectorXd chi;
  double z = 0.0;              // minimized shared constraint slack
  SolveStatus status = SolveStatus::ok;
  int newton_steps = 0;
};

// Throughput-maximizing power/SINR update at fixed surrogate slopes.
// Starts from (p_init, chi_init) when that point is strictly feasible and
// otherwise builds an interior point from the minimal-power chain; reports
// infeasible when no interior point exists for this alpha.
PowerSolveResult solve_p3(const PowerSubproblem& sub, const Eigen::VectorXd& p_init,
                          const Eigen::VectorXd& chi_init, const SolverOptions& opts);

// Feasibility form: minimizes the single slack z added to every constraint.
// Any nonnegative starting point is accepted; z near zero certifies that the
// constraint set is (almost) satisfiable at these alpha.
FeasSolveResult solve_p4(const PowerSubproblem& sub, const Eigen::VectorXd& p_init,
                         const Eigen::VectorXd& chi_init, const SolverOptions& opts);

// Data of one linearized reflection-design step. Row a of zr maps the
// reflection vector to link a's reflected amplitude; kappa_t/xi_t hold the
// linearization point in real/imaginary parts. Ordering pairs (lo, hi)
// require the gain of hi to exceed the gain of lo by the margin. All gains
// are normalized internally before solving, so order_margin and the reported
// slack live on the scale of the largest linearized gain.
struct ReflectionSubproblem {
  Eigen::MatrixXcd zr;        // A x M
  Eigen::VectorXcd h;         // A
  Eigen::VectorXd beta;       // A, interference-to-power ratios times chi
  Eigen::VectorXd rhs;        // A, chi * noise / power
  Eigen::VectorXd kappa_t;    // A, Re of linearization point
  Eigen::VectorXd xi_t;       // A, Im of linearization point
  std::vector<std::pair<int, int>> pairs;  // (lower, higher) decode-order pairs
  double order_margin = 0.0;  // relative to the largest linearized gain
};

struct ReflectionSolveResult {
  Eigen::VectorXcd e;
  double slack = 0.0;          // optimal shared slack, normalized units
  double scale = 1.0;          // gain normalization constant; slack * scale is absolute
  bool feasible = false;       // slack > 0
  SolveStatus status = SolveStatus::ok;
  int newton_steps = 0;
};

// Maximizes the shared slack of the linearized SINR and ordering constraints
// over the unit-modulus-bounded reflection vector.
ReflectionSolveResult solve_p6(const ReflectionSubproblem& sub,
                               const Eigen::VectorXcd& e_start, const SolverOptions& opts);

struct SdpResult {
  Eigen::MatrixXcd E;
  double objective = 0.0;      // Tr(C E) in the caller's units
  double gap = 0.0;            // duality gap on the trace-normalized problem
  SolveStatus status = SolveStatus::ok;
  int newton_steps = 0;
};

// Semidefinite relaxation with unit diagonal caps and a fixed last diagonal
// entry: maximize Tr(C E) over E >= 0, E_mm <= 1 (m < dim-1), E_last = 1.
// Solved through the dual with a log-det barrier; the diagonal structure
// keeps the Newton system at dim variables.
SdpResult solve_p9(const Eigen::MatrixXcd& c, const SolverOptions& opts);

}  // namespace irsalloc
