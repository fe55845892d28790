#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsalloc/config.hpp"
#include "irsalloc/pipeline.hpp"

namespace irsalloc {

// One experiment: a sweep axis, its values, and the algorithms to run at
// every (value, trial) cell. Parsed from a flat key = value document.
struct ExperimentSpec {
  SystemConfig base;
  std::string sweep = "n_elements";  // n_elements | p_max_dbm | n_channels | irs_x_coordinate
  std::vector<double> values{8.0};
  std::vector<std::string> algorithms{"ThreeStep-IRS-NOMA"};
  int trials = 50;
  std::uint64_t base_seed = 1;
  std::string output = "records.jsonl";
};

// One algorithm run at one sweep cell.
struct TrialRecord {
  std::string sweep;
  double value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  double throughput = 0.0;
  bool feasible = false;
  int outer_rounds = 0;
  double wall_ms = 0.0;     // measured, so not part of the determinism contract
  Eigen::MatrixXd rates;    // N x K
};

// Labels accepted in experiment.algorithms, in reference order.
const std::vector<std::string>& algorithm_labels();

// Reads a flat dotted-key document (# starts a comment, one key = value per
// line). Unknown keys or malformed values throw std::runtime_error naming
// the line. Power keys are in dBm and converted on the spot.
ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec parse_spec_file(const std::string& path);

// Invariant checks beyond parsing: known sweep axis, strictly increasing
// values, trials >= 1, known algorithm labels, and a sane base scenario.
// Throws std::runtime_error on the first violation.
void validate_spec(const ExperimentSpec& spec);

// Base config adjusted to one sweep value. The channel-count axis scales the
// user count to keep every channel at capacity; the surface-position axis
// switches to the line geometry (BS at the origin, surface at (x, 0, 0),
// users around (50, 0, 0), both reflected-path exponents 2.5).
SystemConfig apply_sweep(const SystemConfig& base, const std::string& sweep, double value);

// Runs the labelled algorithm on one realization.
Solution run_algorithm(const std::string& label, const ChannelRealization& chan,
                       const SystemConfig& cfg, std::uint64_t seed);

// Full sweep: for every value and trial, one realization sampled at
// base_seed + trial is shared by all algorithms. Emits one JSON line per
// record to sink (when given) as soon as it exists, and returns all records.
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, std::ostream* sink);

// JSONL round trip.
std::string record_to_json(const TrialRecord& rec);
std::vector<TrialRecord> read_records(std::istream& in);

// Comma-separated per-(value, algorithm) table: trial counts, infeasibility
// rate, mean and population stddev of throughput over the feasible trials,
// and their mean outer-iteration count. All-infeasible cells keep their rate
// but leave the statistics empty.
std::string summarize(const std::vector<TrialRecord>& records);

}  // namespace irsalloc
