#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "irsalloc/experiment.hpp"
#include "irsalloc/scenario.hpp"

using namespace irsalloc;

namespace {

std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& err) {
    return err.what();
  }
  return "";
}

TrialRecord make_record(const std::string& sweep, double value, int trial,
                        const std::string& algorithm, double throughput, bool feasible,
                        int outer_rounds) {
  TrialRecord rec;
  rec.sweep = sweep;
  rec.value = value;
  rec.trial = trial;
  rec.seed = 100 + trial;
  rec.algorithm = algorithm;
  rec.throughput = throughput;
  rec.feasible = feasible;
  rec.outer_rounds = outer_rounds;
  rec.wall_ms = 1.5;
  rec.rates = Eigen::MatrixXd::Zero(1, 1);
  return rec;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("spec parsing reads keys, lists, comments, and unit conversions") {
  std::istringstream in(
      "# sweep over surface sizes\n"
      "experiment.sweep = n_elements\n"
      "experiment.values = 4, 8, 16\n"
      "experiment.trials = 3\n"
      "experiment.base_seed = 7\n"
      "experiment.algorithms = ThreeStep-IRS-NOMA, NOMA-noIRS\n"
      "experiment.output = out.jsonl\n"
      "\n"
      "scenario.p_max_dbm = 10   # converted to watts\n"
      "scenario.noise_dbm = -80\n"
      "scenario.min_rate = 0.02\n"
      "scenario.rician_db = 3\n"
      "solver.tol_outer = 1e-4\n"
      "solver.warm_start_reflection = true\n");
  ExperimentSpec spec = parse_spec(in);
  CHECK(spec.sweep == "n_elements");
  CHECK(spec.values == std::vector<double>{4.0, 8.0, 16.0});
  CHECK(spec.trials == 3);
  CHECK(spec.base_seed == 7);
  CHECK(spec.algorithms == std::vector<std::string>{"ThreeStep-IRS-NOMA", "NOMA-noIRS"});
  CHECK(spec.output == "out.jsonl");
  CHECK(spec.base.p_max_w == doctest::Approx(dbm_to_watts(10.0)).epsilon(1e-12));
  CHECK(spec.base.noise_w == doctest::Approx(dbm_to_watts(-80.0)).epsilon(1e-12));
  CHECK(spec.base.min_rate == 0.02);
  CHECK(spec.base.rician_factor == doctest::Approx(db_to_linear(3.0)).epsilon(1e-12));
  CHECK(spec.base.solver.tol_outer == 1e-4);
  CHECK(spec.base.solver.warm_start_reflection);
  validate_spec(spec);
}

TEST_CASE("spec parsing rejects malformed lines with the line number") {
  auto parse_text = [](const std::string& text) {
    std::istringstream in(text);
    return parse_spec(in);
  };
  std::string msg = thrown_message([&] { parse_text("scenario.bogus = 1\n"); });
  CHECK(msg.find("line 1") != std::string::npos);
  CHECK(msg.find("unknown key 'scenario.bogus'") != std::string::npos);
  msg = thrown_message([&] { parse_text("# fine\nno equals sign here\n"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("key = value") != std::string::npos);
  msg = thrown_message([&] { parse_text("experiment.trials = abc\n"); });
  CHECK(msg.find("expected a number") != std::string::npos);
  msg = thrown_message([&] { parse_text("experiment.trials = 2.5\n"); });
  CHECK(msg.find("expected an integer") != std::string::npos);
  msg = thrown_message([&] { parse_text("experiment.sweep =\n"); });
  CHECK(msg.find("missing value") != std::string::npos);
}

TEST_CASE("spec validation rejects bad sweeps, values, trials, and labels") {
  ExperimentSpec spec;  // defaults are valid
  validate_spec(spec);

  ExperimentSpec bad = spec;
  bad.sweep = "bandwidth";
  CHECK(thrown_message([&] { validate_spec(bad); }).find("unknown sweep") != std::string::npos);

  bad = spec;
  bad.values = {8.0, 8.0};
  CHECK(thrown_message([&] { validate_spec(bad); }).find("strictly increasing") !=
        std::string::npos);

  bad = spec;
  bad.values.clear();
  CHECK(thrown_message([&] { validate_spec(bad); }).find("no sweep values") != std::string::npos);

  bad = spec;
  bad.trials = 0;
  CHECK(thrown_message([&] { validate_spec(bad); }).find("at least 1") != std::string::npos);

  bad = spec;
  bad.algorithms = {"ThreeStep-IRS-NOMA", "FancyPants"};
  CHECK(thrown_message([&] { validate_spec(bad); }).find("unknown algorithm label") !=
        std::string::npos);

  bad = spec;
  bad.algorithms = {"NOMA-noIRS", "NOMA-noIRS"};
  CHECK(thrown_message([&] { validate_spec(bad); }).find("duplicate") != std::string::npos);

  bad = spec;
  bad.sweep = "n_channels";
  bad.values = {1.5};
  CHECK(thrown_message([&] { validate_spec(bad); }).find("positive integers") !=
        std::string::npos);

  bad = spec;
  bad.sweep = "irs_x_coordinate";
  bad.values = {-5.0};
  CHECK(thrown_message([&] { validate_spec(bad); }).find("positive") != std::string::npos);
}

TEST_CASE("algorithm label list covers every dispatchable variant") {
  const auto& labels = algorithm_labels();
  CHECK(labels.size() == 7);
  SystemConfig cfg;
  cfg.n_elements = 0;  // keep the exhaustive labels cheap
  cfg.validate();
  ChannelRealization chan = sample_channels(cfg, 3);
  for (const std::string& label : labels) {
    Solution sol = run_algorithm(label, chan, cfg, 3);
    CHECK(sol.label == label);
  }
  CHECK(thrown_message([&] { run_algorithm("NOMA", chan, cfg, 3); })
            .find("unknown algorithm label") != std::string::npos);
}

TEST_CASE("sweep application changes exactly the advertised knobs") {
  SystemConfig base;

  SystemConfig m = apply_sweep(base, "n_elements", 16);
  CHECK(m.n_elements == 16);
  CHECK(m.p_max_w == base.p_max_w);

  SystemConfig p = apply_sweep(base, "p_max_dbm", 5.0);
  CHECK(p.p_max_w == doctest::Approx(dbm_to_watts(5.0)).epsilon(1e-12));
  CHECK(p.n_elements == base.n_elements);

  SystemConfig n = apply_sweep(base, "n_channels", 3);
  CHECK(n.n_channels == 3);
  CHECK(n.n_users == 3 * base.per_channel_cap);

  SystemConfig x = apply_sweep(base, "irs_x_coordinate", 25.0);
  CHECK(x.bs_pos.x == 0.0);
  CHECK(x.bs_pos.z == 0.0);
  CHECK(x.irs_pos.x == 25.0);
  CHECK(x.irs_pos.y == 0.0);
  CHECK(x.user_center.x == 50.0);
  CHECK(x.user_center.z == 0.0);
  CHECK(x.alpha_bs_irs == 2.5);
  CHECK(x.alpha_irs_user == 2.5);
  CHECK(x.alpha_bs_user == base.alpha_bs_user);
  x.validate();

  CHECK(thrown_message([&] { apply_sweep(base, "bandwidth", 1.0); }).find("unknown sweep") !=
        std::string::npos);
}

TEST_CASE("a minimal experiment yields one record per value, trial, and algorithm") {
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {4.0};
  spec.trials = 1;
  spec.base_seed = 11;
  spec.algorithms = {"ThreeStep-IRS-NOMA"};
  std::ostringstream sink;
  std::vector<TrialRecord> recs = run_experiment(spec, &sink);
  REQUIRE(recs.size() == 1);
  const TrialRecord& r = recs[0];
  CHECK(r.sweep == "n_elements");
  CHECK(r.value == 4.0);
  CHECK(r.trial == 0);
  CHECK(r.seed == 11);
  CHECK(r.algorithm == "ThreeStep-IRS-NOMA");
  CHECK(r.feasible);
  CHECK(r.outer_rounds >= 1);
  CHECK(r.wall_ms > 0.0);
  REQUIRE(r.rates.rows() == 2);
  REQUIRE(r.rates.cols() == 4);
  CHECK(r.throughput == doctest::Approx(r.rates.sum()).epsilon(1e-12));
  CHECK(lines_of(sink.str()).size() == 1);
}

TEST_CASE("records in the sink round trip through json unchanged") {
  ExperimentSpec spec;
  spec.sweep = "p_max_dbm";
  spec.values = {5.0, 10.0};
  spec.trials = 2;
  spec.base_seed = 21;
  spec.algorithms = {"ThreeStep-IRS-NOMA", "NOMA-noIRS"};
  std::ostringstream sink;
  std::vector<TrialRecord> recs = run_experiment(spec, &sink);
  REQUIRE(recs.size() == 8);
  std::istringstream back(sink.str());
  std::vector<TrialRecord> loaded = read_records(back);
  REQUIRE(loaded.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].sweep == recs[i].sweep);
    CHECK(loaded[i].value == recs[i].value);
    CHECK(loaded[i].trial == recs[i].trial);
    CHECK(loaded[i].seed == recs[i].seed);
    CHECK(loaded[i].algorithm == recs[i].algorithm);
    CHECK(loaded[i].throughput == recs[i].throughput);
    CHECK(loaded[i].feasible == recs[i].feasible);
    CHECK(loaded[i].outer_rounds == recs[i].outer_rounds);
    CHECK(loaded[i].rates == recs[i].rates);
  }
}

TEST_CASE("reruns reproduce every numeric field except wall time") {
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {4.0, 8.0};
  spec.trials = 2;
  spec.base_seed = 31;
  spec.algorithms = {"ThreeStep-IRS-NOMA", "TwoStep-IRS-OMA"};
  std::vector<TrialRecord> a = run_experiment(spec, nullptr);
  std::vector<TrialRecord> b = run_experiment(spec, nullptr);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].throughput == b[i].throughput);  // bitwise
    CHECK(a[i].feasible == b[i].feasible);
    CHECK(a[i].outer_rounds == b[i].outer_rounds);
    CHECK(a[i].rates == b[i].rates);
  }
}

TEST_CASE("algorithms inside one trial share the channel realization") {
  // without a surface the two labels run the same code path, so identical
  // inputs must give identical outputs
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {0.0};
  spec.trials = 3;
  spec.base_seed = 41;
  spec.algorithms = {"ThreeStep-IRS-NOMA", "NOMA-noIRS"};
  std::vector<TrialRecord> recs = run_experiment(spec, nullptr);
  REQUIRE(recs.size() == 6);
  for (int t = 0; t < 3; ++t) {
    const TrialRecord& ts = recs[2 * t];
    const TrialRecord& nn = recs[2 * t + 1];
    CHECK(ts.algorithm == "ThreeStep-IRS-NOMA");
    CHECK(nn.algorithm == "NOMA-noIRS");
    CHECK(ts.seed == nn.seed);
    CHECK(ts.throughput == nn.throughput);  // bitwise
    CHECK(ts.rates == nn.rates);
  }
}

TEST_CASE("json serialization survives awkward field values") {
  TrialRecord rec = make_record("irs_x_coordinate", 12.5, 4, "OMA-noIRS", 0.0, false, 0);
  rec.seed = 1234567890123ull;
  rec.rates.resize(2, 3);
  rec.rates << 0.0, 1.25, 3.5e-7, 2.0, 0.125, 9.75;
  std::istringstream back(record_to_json(rec) + "\n\n");
  std::vector<TrialRecord> loaded = read_records(back);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].seed == rec.seed);
  CHECK(loaded[0].value == rec.value);
  CHECK_FALSE(loaded[0].feasible);
  CHECK(loaded[0].rates == rec.rates);
  CHECK(loaded[0].wall_ms == rec.wall_ms);
  std::istringstream garbage("not json\n");
  CHECK(thrown_message([&] { read_records(garbage); }).find("records line 1") !=
        std::string::npos);
}

TEST_CASE("summaries aggregate feasible trials with population statistics") {
  std::vector<TrialRecord> recs;
  recs.push_back(make_record("s", 1.0, 0, "A", 2.0, true, 7));
  recs.push_back(make_record("s", 1.0, 1, "A", 4.0, true, 9));
  recs.push_back(make_record("s", 1.0, 2, "A", 100.0, false, 30));
  recs.push_back(make_record("s", 1.0, 0, "B", 50.0, false, 30));
  recs.push_back(make_record("s", 2.0, 0, "A", 5.0, true, 3));
  std::vector<std::string> lines = lines_of(summarize(recs));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] ==
        "sweep,value,algorithm,trials,feasible,infeasibility_rate,"
        "mean_throughput,stddev_throughput,mean_outer_rounds");
  CHECK(lines[1] == "s,1,A,3,2,0.3333333333,3,1,8");
  CHECK(lines[2] == "s,1,B,1,0,1,,,");
  CHECK(lines[3] == "s,2,A,1,1,0,5,0,3");
  CHECK(thrown_message([&] { summarize({}); }).find("no records") != std::string::npos);
}

TEST_CASE("mean throughput does not drop as the surface grows") {
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {8.0, 12.0, 16.0};
  spec.trials = 50;
  spec.base_seed = 1;
  spec.algorithms = {"ThreeStep-IRS-NOMA"};
  std::vector<TrialRecord> recs = run_experiment(spec, nullptr);
  double prev = -1.0;
  for (double value : spec.values) {
    double sum = 0.0;
    int feas = 0;
    for (const TrialRecord& r : recs)
      if (r.value == value && r.feasible) {
        sum += r.throughput;
        ++feas;
      }
    REQUIRE(feas >= 45);
    double mean = sum / feas;
    CHECK(mean >= prev);
    prev = mean;
  }
}

TEST_CASE("records written before a mid-run failure survive in the sink") {
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {0.0};
  spec.trials = 1;
  spec.base_seed = 61;
  spec.algorithms = {"ThreeStep-IRS-NOMA", "Exhaust-IRS-NOMA"};
  spec.base.solver.assignment_cap = 1;  // forces the exhaustive search to refuse
  std::ostringstream sink;
  std::string msg = thrown_message([&] { run_experiment(spec, &sink); });
  CHECK(msg.find("refused") != std::string::npos);
  std::istringstream back(sink.str());
  std::vector<TrialRecord> kept = read_records(back);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].algorithm == "ThreeStep-IRS-NOMA");
}

TEST_CASE("summaries of a real run count infeasible trials per cell") {
  ExperimentSpec spec;
  spec.sweep = "n_elements";
  spec.values = {8.0};
  spec.trials = 4;
  spec.base_seed = 51;
  spec.algorithms = {"ThreeStep-IRS-NOMA", "Random-IRS-NOMA"};
  std::vector<TrialRecord> recs = run_experiment(spec, nullptr);
  std::vector<std::string> lines = lines_of(summarize(recs));
  REQUIRE(lines.size() == 3);
  CHECK(lines[1].find("n_elements,8,ThreeStep-IRS-NOMA,4,") == 0);
  CHECK(lines[2].find("n_elements,8,Random-IRS-NOMA,4,") == 0);
  int feasible_random = 0;
  for (const TrialRecord& r : recs)
    if (r.algorithm == "Random-IRS-NOMA" && r.feasible) ++feasible_random;
  CHECK(lines[2].find(",4," + std::to_string(feasible_random) + ",") != std::string::npos);
}
