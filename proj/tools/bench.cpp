// Command-line driver: single runs, matrix sweeps and the signal probe.
#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include "reclaim/bench/csv.hpp"
#include "reclaim/bench/matrix.hpp"
#include "reclaim/bench/sigprobe.hpp"
#include "reclaim/bench/trial.hpp"

namespace rb = reclaim::bench;

namespace {

void print_summary(const rb::TrialRecord& r, int index) {
  const auto& c = r.config;
  std::cerr << reclaim::to_string(c.structure) << '/' << reclaim::to_string(c.scheme)
            << " threads=" << c.threads << " workload=" << c.workload.str()
            << " trial=" << index << " ops=" << r.ops_total << " tput=" << std::fixed
            << std::setprecision(0) << r.throughput_ops_per_s
            << " peak_retired=" << r.peak_retired_nodes << " signals=" << r.signals_sent
            << " violations=" << r.violations;
  if (r.hit_memory_cap) std::cerr << " (memory cap)";
  std::cerr << '\n';
  if (!r.first_violation.empty()) std::cerr << "  first violation: " << r.first_violation << '\n';
}

void print_latency(const char* label, const rb::LatencySummary& ns,
                   const rb::LatencySummary& cyc, bool have_cycles) {
  std::cout << std::fixed << std::setprecision(0) << label << " ns: min=" << ns.min
            << " median=" << ns.median << " p99=" << ns.p99;
  if (have_cycles)
    std::cout << " | cycles: min=" << cyc.min << " median=" << cyc.median << " p99=" << cyc.p99;
  std::cout << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe memory reclamation benchmark"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run one configuration");
  std::string ds = "hm_list";
  std::string smr = "ebr";
  std::string workload = "50:50:0";
  std::string stall = "none";
  std::string alloc = "release";
  std::string out;
  bool append = false;
  rb::TrialConfig cfg;
  std::uint64_t key_range = 0;
  run->add_option("--ds", ds, "lazy_list|harris_list|hm_list|hash_table|ext_bst")
      ->capture_default_str();
  run->add_option("--smr", smr, "none|ebr|hp|he|pophp|pophe|epochpop|nbr|nbrplus")
      ->capture_default_str();
  run->add_option("--threads", cfg.threads)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--duration", cfg.duration, "seconds")->capture_default_str();
  run->add_option("--workload", workload, "insert:delete:contains percentages")
      ->capture_default_str();
  run->add_option("--key-range", key_range, "default depends on the structure");
  run->add_option("--trials", cfg.trials)->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--prefill", cfg.prefill)->capture_default_str();
  run->add_option("--stall", stall, "none|one")->capture_default_str();
  run->add_option("--alloc", alloc, "release|validate (default from RECLAIM_ALLOC_MODE)");
  run->add_option("--seed", cfg.seed)->capture_default_str();
  run->add_option("--out", out, "CSV file (stdout if omitted)");
  run->add_flag("--append", append, "append to --out instead of truncating");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run every configuration in a matrix file");
  std::string matrix_path;
  std::string out_dir;
  sweep->add_option("--matrix", matrix_path)->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "output directory")->required();

  // sigprobe
  auto* probe = app.add_subcommand("sigprobe", "measure signal delivery latency");
  std::size_t samples = 10000;
  probe->add_option("--samples", samples)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cfg.structure = reclaim::parse_structure(ds);
      cfg.scheme = reclaim::parse_scheme(smr);
      cfg.workload = rb::parse_workload(workload);
      cfg.stall = rb::parse_stall(stall);
      cfg.alloc_mode = run->count("--alloc") ? reclaim::parse_alloc_mode(alloc)
                                             : reclaim::alloc_mode_from_env();
      cfg.key_range = key_range != 0 ? key_range : reclaim::default_key_range(cfg.structure);
      rb::validate(cfg);
      std::vector<rb::TrialRecord> records;
      for (int i = 0; i < cfg.trials; ++i) {
        records.push_back(rb::run_trial(cfg, i));
        print_summary(records.back(), i);
      }
      if (out.empty()) {
        rb::write_csv_row(std::cout, rb::csv_columns());
        for (auto& r : records) rb::write_csv_row(std::cout, rb::csv_fields(r));
      } else {
        rb::emit_csv(records, out, append);
      }
      for (auto& r : records)
        if (r.violations != 0) return 3;
      return 0;
    }

    if (*sweep) {
      rb::SweepMatrix m = rb::load_matrix(matrix_path);
      std::filesystem::create_directories(out_dir);
      std::set<std::string> started;
      int failures = 0;
      for (const rb::TrialConfig& c : rb::expand(m)) {
        std::string path =
            (std::filesystem::path(out_dir) / (std::string(reclaim::to_string(c.structure)) + ".csv"))
                .string();
        bool fresh = started.insert(path).second;
        for (int i = 0; i < c.trials; ++i) {
          rb::TrialRecord r = rb::run_trial(c, i);
          print_summary(r, i);
          if (r.violations != 0) ++failures;
          rb::emit_csv({r}, path, !fresh);
          fresh = false;
        }
      }
      return failures == 0 ? 0 : 3;
    }

    if (*probe) {
      rb::SigprobeResult r = rb::sigprobe(samples);
      if (!r.warning.empty()) std::cerr << "warning: " << r.warning << '\n';
      std::cout << "samples=" << r.samples << " pinned=" << (r.pinned ? "yes" : "no")
                << std::setprecision(3) << " cycles_per_ns=" << r.cycles_per_ns << '\n';
      const bool cyc = r.cycles_per_ns > 0;
      print_latency("send call     ", r.send_ns, r.send_cycles, cyc);
      print_latency("send-to-handler", r.latency_ns, r.latency_cycles, cyc);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
