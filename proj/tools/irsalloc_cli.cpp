#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "irsalloc/experiment.hpp"

using namespace irsalloc;

namespace {

std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= v.size()) {
    size_t comma = v.find(',', pos);
    if (comma == std::string::npos) comma = v.size();
    std::string item = v.substr(pos, comma - pos);
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    pos = comma + 1;
  }
  return out;
}

int cmd_run(const std::string& spec_path, long long seed, int trials,
            const std::string& algorithms, const std::string& out_path) {
  ExperimentSpec spec = parse_spec_file(spec_path);
  if (seed >= 0) spec.base_seed = static_cast<std::uint64_t>(seed);
  if (trials > 0) spec.trials = trials;
  if (!algorithms.empty()) spec.algorithms = split_csv(algorithms);
  if (!out_path.empty()) spec.output = out_path;
  validate_spec(spec);
  std::ofstream sink(spec.output);
  if (!sink) throw std::runtime_error("cannot open output file '" + spec.output + "'");
  std::vector<TrialRecord> records = run_experiment(spec, &sink);
  std::cout << records.size() << " records written to " << spec.output << '\n';
  return 0;
}

int cmd_summarize(const std::string& records_path, const std::string& out_path) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open records file '" + records_path + "'");
  std::string table = summarize(read_records(in));
  if (out_path.empty()) {
    std::cout << table;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
    out << table;
    std::cout << "summary written to " << out_path << '\n';
  }
  return 0;
}

int cmd_validate(const std::string& spec_path) {
  ExperimentSpec spec = parse_spec_file(spec_path);
  validate_spec(spec);
  std::cout << "spec ok: sweep " << spec.sweep << " over " << spec.values.size()
            << " values, " << spec.trials << " trials, " << spec.algorithms.size()
            << " algorithms, output " << spec.output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"resource allocation sweeps for a reflecting-surface downlink"};
  app.require_subcommand(1);

  std::string spec_path, records_path, out_path, algorithms;
  long long seed = -1;
  int trials = 0;

  CLI::App* run = app.add_subcommand("run", "run the sweep described by a spec file");
  run->add_option("spec", spec_path, "experiment spec file")->required();
  run->add_option("--seed", seed, "override the base seed");
  run->add_option("--trials", trials, "override the number of trials per sweep value");
  run->add_option("--algorithms", algorithms, "comma-separated algorithm labels");
  run->add_option("--out", out_path, "override the records output path");

  CLI::App* summ = app.add_subcommand("summarize", "aggregate a records file into a csv table");
  summ->add_option("records", records_path, "records file, one json object per line")->required();
  summ->add_option("--out", out_path, "write the table to a file instead of stdout");

  CLI::App* val = app.add_subcommand("validate", "parse and check a spec file");
  val->add_option("spec", spec_path, "experiment spec file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(spec_path, seed, trials, algorithms, out_path);
    if (summ->parsed()) return cmd_summarize(records_path, out_path);
    return cmd_validate(spec_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
