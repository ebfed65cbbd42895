// motforge: batch front door for the MOT / SEP laboratory. One subcommand per
// scenario kind plus `suite` for manifests; exit code 0 iff every scenario
// assertion passed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include "motforge/scenario.hpp"

namespace fs = std::filesystem;
using namespace motforge;

namespace {

struct Options {
  std::string input;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  std::string format = "json";
};

struct Outcome {
  std::string scenario;
  bool loaded = false;
  bool passed = false;
  std::string error;
  std::vector<Assertion> assertions;
};

Outcome run_one(const fs::path& path, const Options& opt,
                const std::string& expected_kind = "") {
  Outcome out;
  out.scenario = path.stem().string();
  try {
    Scenario s = load_problem(path);
    if (!expected_kind.empty() && expected_kind != to_string(s.kind))
      throw std::runtime_error("scenario kind is " + std::string(to_string(s.kind)) +
                               ", invoked as " + expected_kind);
    if (opt.seed_set) s.seed = opt.seed;
    out.loaded = true;
    out.scenario = s.name;
    if (log_level() >= 1)
      std::fprintf(stderr, "[motforge] running %s (%s)\n", s.name.c_str(),
                   to_string(s.kind));
    const Report rep = run_scenario(s);
    out.passed = rep.all_passed();
    out.assertions = rep.assertions;
    const ReportFormat fmt =
        opt.format == "csv" ? ReportFormat::csv : ReportFormat::json;
    emit_report(rep, opt.output_dir, fmt);
    if (opt.format == "both") emit_report(rep, opt.output_dir, ReportFormat::csv);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Machine-readable failure list on stdout; human lines on stderr.
int finish(const std::vector<Outcome>& outcomes) {
  ojson failures = ojson::array();
  bool load_error = false;
  for (const Outcome& o : outcomes) {
    if (!o.error.empty()) {
      failures.push_back(ojson{{"scenario", o.scenario}, {"error", o.error}});
      load_error = load_error || !o.loaded;
      continue;
    }
    for (const Assertion& a : o.assertions)
      if (!a.pass)
        failures.push_back(ojson{{"scenario", o.scenario},
                                 {"assertion", a.name},
                                 {"detail", a.detail}});
  }
  if (!failures.empty()) {
    std::cout << dump17(ojson{{"failures", failures}});
    return load_error ? 2 : 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motforge: discrete martingale optimal transport, competitor "
               "calculus and lattice Skorokhod embeddings"};
  app.require_subcommand(1);

  Options opt;
  std::vector<CLI::App*> subs;
  for (const char* kind :
       {"mot_solve", "monotone_check", "transform_apply", "transform_classify",
        "sep_fit", "sep_compare", "stop_go", "symmetry_suite", "suite"}) {
    CLI::App* sub = app.add_subcommand(
        kind, std::string("run a ") + kind +
                  (std::string(kind) == "suite" ? " manifest" : " scenario"));
    sub->add_option("--input", opt.input, "scenario JSON file")->required();
    sub->add_option("--output-dir", opt.output_dir, "report directory");
    sub->add_option("--seed", opt.seed, "override the scenario seed")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->add_option("--jobs", opt.jobs, "parallel scenarios (suite only)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", opt.format, "json, csv or both")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string chosen = app.get_subcommands().front()->get_name();

  std::vector<Outcome> outcomes;
  if (chosen == "suite") {
    ojson manifest;
    try {
      std::ifstream in(opt.input);
      if (!in) throw std::runtime_error("cannot open " + opt.input);
      in >> manifest;
    } catch (const std::exception& e) {
      std::cout << dump17(ojson{{"failures", ojson::array({ojson{
                              {"scenario", opt.input}, {"error", e.what()}}})}});
      return 2;
    }
    std::vector<fs::path> paths;
    const fs::path base = fs::path(opt.input).parent_path();
    for (const auto& p : manifest.at("scenarios"))
      paths.push_back(base / p.get<std::string>());

    // Scenarios run concurrently up to --jobs; each writes its own files, so
    // reports are identical regardless of the thread count.
    outcomes.resize(paths.size());
    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next >= paths.size()) return;
          i = next++;
        }
        outcomes[i] = run_one(paths[i], opt);
      }
    };
    std::vector<std::future<void>> pool;
    for (int j = 0; j < std::max(1, opt.jobs); ++j)
      pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  } else {
    outcomes.push_back(run_one(opt.input, opt, chosen));
  }
  return finish(outcomes);
}
