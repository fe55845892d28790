#include "irsalloc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "irsalloc/scenario.hpp"

namespace irsalloc {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void bad_line(int line_no, const std::string& msg) {
  throw std::runtime_error("spec line " + std::to_string(line_no) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line_no) {
  size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (...) {
    bad_line(line_no, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) bad_line(line_no, "trailing characters in number '" + v + "'");
  return x;
}

int parse_int(const std::string& v, int line_no) {
  double x = parse_double(v, line_no);
  if (std::abs(x - std::llround(x)) > 1e-9) bad_line(line_no, "expected an integer, got '" + v + "'");
  return static_cast<int>(std::llround(x));
}

std::uint64_t parse_u64(const std::string& v, int line_no) {
  size_t used = 0;
  std::uint64_t x = 0;
  try {
    x = std::stoull(v, &used);
  } catch (...) {
    bad_line(line_no, "expected a nonnegative integer, got '" + v + "'");
  }
  if (used != v.size()) bad_line(line_no, "trailing characters in '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, int line_no) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_line(line_no, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_names(const std::string& v) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= v.size()) {
    size_t comma = v.find(',', pos);
    if (comma == std::string::npos) comma = v.size();
    std::string item = trim(v.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_values(const std::string& v, int line_no) {
  std::vector<double> out;
  std::string cur;
  for (char ch : v + " ") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(parse_double(cur, line_no));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (out.empty()) bad_line(line_no, "empty value list");
  return out;
}

void apply_key(ExperimentSpec& spec, const std::string& key, const std::string& val,
               int line_no) {
  SystemConfig& c = spec.base;
  SolverOptions& s = c.solver;
  if (key == "experiment.sweep") spec.sweep = val;
  else if (key == "experiment.values") spec.values = parse_values(val, line_no);
  else if (key == "experiment.trials") spec.trials = parse_int(val, line_no);
  else if (key == "experiment.base_seed") spec.base_seed = parse_u64(val, line_no);
  else if (key == "experiment.algorithms") spec.algorithms = split_names(val);
  else if (key == "experiment.output") spec.output = val;
  else if (key == "scenario.n_channels") c.n_channels = parse_int(val, line_no);
  else if (key == "scenario.n_users") c.n_users = parse_int(val, line_no);
  else if (key == "scenario.per_channel_cap") c.per_channel_cap = parse_int(val, line_no);
  else if (key == "scenario.n_elements") c.n_elements = parse_int(val, line_no);
  else if (key == "scenario.p_max_dbm") c.p_max_w = dbm_to_watts(parse_double(val, line_no));
  else if (key == "scenario.noise_dbm") c.noise_w = dbm_to_watts(parse_double(val, line_no));
  else if (key == "scenario.min_rate") c.min_rate = parse_double(val, line_no);
  else if (key == "scenario.total_bandwidth_hz") c.total_bandwidth_hz = parse_double(val, line_no);
  else if (key == "scenario.user_radius") c.user_radius = parse_double(val, line_no);
  else if (key == "scenario.rician_db") c.rician_factor = db_to_linear(parse_double(val, line_no));
  else if (key == "scenario.alpha_bs_user") c.alpha_bs_user = parse_double(val, line_no);
  else if (key == "scenario.alpha_bs_irs") c.alpha_bs_irs = parse_double(val, line_no);
  else if (key == "scenario.alpha_irs_user") c.alpha_irs_user = parse_double(val, line_no);
  else if (key == "scenario.bs_x") c.bs_pos.x = parse_double(val, line_no);
  else if (key == "scenario.bs_y") c.bs_pos.y = parse_double(val, line_no);
  else if (key == "scenario.bs_z") c.bs_pos.z = parse_double(val, line_no);
  else if (key == "scenario.irs_x") c.irs_pos.x = parse_double(val, line_no);
  else if (key == "scenario.irs_y") c.irs_pos.y = parse_double(val, line_no);
  else if (key == "scenario.irs_z") c.irs_pos.z = parse_double(val, line_no);
  else if (key == "scenario.user_x") c.user_center.x = parse_double(val, line_no);
  else if (key == "scenario.user_y") c.user_center.y = parse_double(val, line_no);
  else if (key == "scenario.user_z") c.user_center.z = parse_double(val, line_no);
  else if (key == "solver.gap_tol") s.gap_tol = parse_double(val, line_no);
  else if (key == "solver.barrier_increase") s.barrier_increase = parse_double(val, line_no);
  else if (key == "solver.newton_cap") s.newton_cap = parse_int(val, line_no);
  else if (key == "solver.newton_tol") s.newton_tol = parse_double(val, line_no);
  else if (key == "solver.constraint_tol") s.constraint_tol = parse_double(val, line_no);
  else if (key == "solver.order_margin") s.order_margin = parse_double(val, line_no);
  else if (key == "solver.rank_one_tol") s.rank_one_tol = parse_double(val, line_no);
  else if (key == "solver.randomization_count") s.randomization_count = parse_int(val, line_no);
  else if (key == "solver.chi_floor") s.chi_floor = parse_double(val, line_no);
  else if (key == "solver.feas_threshold") s.feas_threshold = parse_double(val, line_no);
  else if (key == "solver.tol_sca") s.tol_sca = parse_double(val, line_no);
  else if (key == "solver.tol_outer") s.tol_outer = parse_double(val, line_no);
  else if (key == "solver.max_power_rounds") s.max_power_rounds = parse_int(val, line_no);
  else if (key == "solver.max_feas_rounds") s.max_feas_rounds = parse_int(val, line_no);
  else if (key == "solver.max_reflect_rounds") s.max_reflect_rounds = parse_int(val, line_no);
  else if (key == "solver.max_outer_rounds") s.max_outer_rounds = parse_int(val, line_no);
  else if (key == "solver.assignment_cap") s.assignment_cap = parse_int(val, line_no);
  else if (key == "solver.order_cap") s.order_cap = parse_int(val, line_no);
  else if (key == "solver.warm_start_reflection") s.warm_start_reflection = parse_bool(val, line_no);
  else bad_line(line_no, "unknown key '" + key + "'");
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& algorithm_labels() {
  static const std::vector<std::string> labels = {
      "Exhaust-IRS-NOMA", "ThreeStep-IRS-NOMA", "Random-IRS-NOMA", "Exhaust-IRS-OMA",
      "TwoStep-IRS-OMA",  "NOMA-noIRS",         "OMA-noIRS"};
  return labels;
}

ExperimentSpec parse_spec(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) bad_line(line_no, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) bad_line(line_no, "missing key");
    if (val.empty()) bad_line(line_no, "missing value for '" + key + "'");
    apply_key(spec, key, val, line_no);
  }
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  return parse_spec(in);
}

void validate_spec(const ExperimentSpec& spec) {
  static const std::vector<std::string> axes = {"n_elements", "p_max_dbm", "n_channels",
                                                "irs_x_coordinate"};
  if (std::find(axes.begin(), axes.end(), spec.sweep) == axes.end())
    throw std::runtime_error("unknown sweep axis '" + spec.sweep + "'");
  if (spec.values.empty()) throw std::runtime_error("no sweep values");
  for (size_t i = 1; i < spec.values.size(); ++i)
    if (!(spec.values[i] > spec.values[i - 1]))
      throw std::runtime_error("sweep values must be strictly increasing");
  if (spec.trials < 1) throw std::runtime_error("trials must be at least 1");
  if (spec.algorithms.empty()) throw std::runtime_error("no algorithms selected");
  const auto& known = algorithm_labels();
  for (size_t i = 0; i < spec.algorithms.size(); ++i) {
    const std::string& a = spec.algorithms[i];
    if (std::find(known.begin(), known.end(), a) == known.end())
      throw std::runtime_error("unknown algorithm label '" + a + "'");
    for (size_t j = 0; j < i; ++j)
      if (spec.algorithms[j] == a)
        throw std::runtime_error("duplicate algorithm label '" + a + "'");
  }
  if (spec.output.empty()) throw std::runtime_error("empty output path");
  for (double v : spec.values) {
    if (spec.sweep == "n_elements" && (v < 0 || std::abs(v - std::llround(v)) > 1e-9))
      throw std::runtime_error("n_elements values must be nonnegative integers");
    if (spec.sweep == "n_channels" && (v < 1 || std::abs(v - std::llround(v)) > 1e-9))
      throw std::runtime_error("n_channels values must be positive integers");
    if (spec.sweep == "irs_x_coordinate" && !(v > 0.0))
      throw std::runtime_error("irs_x_coordinate values must be positive");
    apply_sweep(spec.base, spec.sweep, v).validate();
  }
}

SystemConfig apply_sweep(const SystemConfig& base, const std::string& sweep, double value) {
  SystemConfig cfg = base;
  if (sweep == "n_elements") {
    cfg.n_elements = static_cast<int>(std::llround(value));
  } else if (sweep == "p_max_dbm") {
    cfg.p_max_w = dbm_to_watts(value);
  } else if (sweep == "n_channels") {
    cfg.n_channels = static_cast<int>(std::llround(value));
    cfg.n_users = cfg.n_channels * cfg.per_channel_cap;  // keep every channel at capacity
  } else if (sweep == "irs_x_coordinate") {
    cfg.bs_pos = {0.0, 0.0, 0.0};
    cfg.irs_pos = {value, 0.0, 0.0};
    cfg.user_center = {50.0, 0.0, 0.0};
    cfg.alpha_bs_irs = 2.5;
    cfg.alpha_irs_user = 2.5;
  } else {
    throw std::runtime_error("unknown sweep axis '" + sweep + "'");
  }
  return cfg;
}

Solution run_algorithm(const std::string& label, const ChannelRealization& chan,
                       const SystemConfig& cfg, std::uint64_t seed) {
  if (label == "ThreeStep-IRS-NOMA") return three_step(chan, cfg, seed);
  if (label == "TwoStep-IRS-OMA") return oma_waterfill(chan, cfg, seed);
  if (label == "Random-IRS-NOMA") return random_order_variant(chan, cfg, seed);
  if (label == "NOMA-noIRS") return no_irs_variant(chan, cfg, AccessMode::noma, seed);
  if (label == "OMA-noIRS") return no_irs_variant(chan, cfg, AccessMode::oma, seed);
  if (label == "Exhaust-IRS-NOMA") return exhaustive_assignment(chan, cfg, AccessMode::noma, seed);
  if (label == "Exhaust-IRS-OMA") return exhaustive_assignment(chan, cfg, AccessMode::oma, seed);
  throw std::runtime_error("unknown algorithm label '" + label + "'");
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, std::ostream* sink) {
  validate_spec(spec);
  std::vector<TrialRecord> out;
  for (double value : spec.values) {
    SystemConfig cfg = apply_sweep(spec.base, spec.sweep, value);
    for (int trial = 0; trial < spec.trials; ++trial) {
      std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(trial);
      ChannelRealization chan = sample_channels(cfg, seed);
      for (const std::string& label : spec.algorithms) {
        auto t0 = std::chrono::steady_clock::now();
        Solution sol = run_algorithm(label, chan, cfg, seed);
        auto t1 = std::chrono::steady_clock::now();
        TrialRecord rec;
        rec.sweep = spec.sweep;
        rec.value = value;
        rec.trial = trial;
        rec.seed = seed;
        rec.algorithm = label;
        rec.throughput = sol.throughput;
        rec.feasible = sol.feasible;
        rec.outer_rounds = sol.outer_rounds;
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.rates = sol.rates;
        if (sink) *sink << record_to_json(rec) << '\n' << std::flush;
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::string record_to_json(const TrialRecord& rec) {
  ordered_json j;
  j["sweep"] = rec.sweep;
  j["value"] = rec.value;
  j["trial"] = rec.trial;
  j["seed"] = rec.seed;
  j["algorithm"] = rec.algorithm;
  j["throughput"] = rec.throughput;
  j["feasible"] = rec.feasible;
  j["outer_rounds"] = rec.outer_rounds;
  j["wall_ms"] = rec.wall_ms;
  ordered_json rows = ordered_json::array();
  for (int n = 0; n < rec.rates.rows(); ++n) {
    ordered_json row = ordered_json::array();
    for (int k = 0; k < rec.rates.cols(); ++k) row.push_back(rec.rates(n, k));
    rows.push_back(std::move(row));
  }
  j["rates"] = std::move(rows);
  return j.dump();
}

std::vector<TrialRecord> read_records(std::istream& in) {
  std::vector<TrialRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& err) {
      throw std::runtime_error("records line " + std::to_string(line_no) + ": " + err.what());
    }
    TrialRecord rec;
    rec.sweep = j.at("sweep").get<std::string>();
    rec.value = j.at("value").get<double>();
    rec.trial = j.at("trial").get<int>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.algorithm = j.at("algorithm").get<std::string>();
    rec.throughput = j.at("throughput").get<double>();
    rec.feasible = j.at("feasible").get<bool>();
    rec.outer_rounds = j.at("outer_rounds").get<int>();
    rec.wall_ms = j.at("wall_ms").get<double>();
    const auto& rows = j.at("rates");
    int n_rows = static_cast<int>(rows.size());
    int n_cols = n_rows > 0 ? static_cast<int>(rows[0].size()) : 0;
    rec.rates.resize(n_rows, n_cols);
    for (int n = 0; n < n_rows; ++n)
      for (int k = 0; k < n_cols; ++k) rec.rates(n, k) = rows[n][k].get<double>();
    out.push_back(std::move(rec));
  }
  return out;
}

std::string summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::runtime_error("no records to summarize");
  struct Cell {
    std::string sweep;
    double value = 0.0;
    std::string algorithm;
    int trials = 0;
    int feasible = 0;
    double sum = 0.0, sumsq = 0.0, outer_sum = 0.0;
  };
  std::vector<Cell> cells;
  std::map<std::string, size_t> index;  // first-appearance order
  for (const TrialRecord& rec : records) {
    std::string key = rec.sweep + '\0' + format_g(rec.value) + '\0' + rec.algorithm;
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, cells.size()).first;
      cells.push_back({rec.sweep, rec.value, rec.algorithm});
    }
    Cell& c = cells[it->second];
    ++c.trials;
    if (rec.feasible) {
      ++c.feasible;
      c.sum += rec.throughput;
      c.sumsq += rec.throughput * rec.throughput;
      c.outer_sum += rec.outer_rounds;
    }
  }
  std::string out =
      "sweep,value,algorithm,trials,feasible,infeasibility_rate,"
      "mean_throughput,stddev_throughput,mean_outer_rounds\n";
  for (const Cell& c : cells) {
    double rate = c.trials > 0 ? 1.0 - static_cast<double>(c.feasible) / c.trials : 1.0;
    out += c.sweep + ',' + format_g(c.value) + ',' + c.algorithm + ',' +
           std::to_string(c.trials) + ',' + std::to_string(c.feasible) + ',' + format_g(rate);
    if (c.feasible > 0) {
      double mean = c.sum / c.feasible;
      double var = std::max(0.0, c.sumsq / c.feasible - mean * mean);  // population
      out += ',' + format_g(mean) + ',' + format_g(std::sqrt(var)) + ',' +
             format_g(c.outer_sum / c.feasible);
    } else {
      out += ",,,";  // no feasible trials: statistics left empty
    }
    out += '\n';
  }
  return out;
}

}  // namespace irsalloc
