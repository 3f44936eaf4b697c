#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wrsn/simulation.hpp"

namespace wrsn {

/// Thrown for configuration problems; `key()` names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  std::vector<int> node_counts{100, 200, 300, 400, 500};
  int mcv_count = 4;
  std::vector<std::uint64_t> seeds = default_seeds();
  double horizon = 86400.0;
  std::vector<Scheduler> schedulers{Scheduler::Poised, Scheduler::Nearest, Scheduler::Fcfs};
  bool isac = true;
  std::string output_path = "results.csv";
  /// Physical and protocol parameters shared by every run of the sweep.
  SimConfig base;

  static std::vector<std::uint64_t> default_seeds();

  void validate() const;
  SimConfig run_config(int node_count, std::uint64_t seed, Scheduler scheduler) const;
};

/// Applies one `key = value` setting. Throws ConfigError for unknown keys or
/// unparsable values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` text; blank lines and `#` comments are ignored.
/// Unset keys keep their defaults. The result is validated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config_file(const std::string& path);

/// Comma list of seeds where an item may be an inclusive range `a..b`.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

struct SweepRow {
  Scheduler scheduler = Scheduler::Poised;
  int node_count = 0;
  int mcv_count = 0;
  bool is_mean = false;
  std::uint64_t seed = 0;
  bool ok = true;
  double efficiency_pct = 0.0;
  double mean_delay_s = 0.0;
  double survival_pct = 0.0;
  double travel_m = 0.0;
};

struct SweepAudit {
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  std::size_t duplicated_requests = 0;  // across all runs
  bool logs_causal = true;
  bool logs_sorted = true;
  double max_conservation_error = 0.0;  // relative, per MCV
};

struct SweepResult {
  std::vector<SweepRow> runs;   // (node_count, seed, scheduler) order
  std::vector<SweepRow> means;  // (node_count, scheduler) order
  SweepAudit audit;
};

inline constexpr std::string_view kCsvHeader =
    "scheduler,node_count,mcv_count,seed,efficiency_pct,mean_delay_s,survival_pct,travel_m";

/// Runs every (node_count, seed, scheduler) cell; a failing cell is kept as a
/// row of NaN metrics and the sweep continues.
SweepResult run_sweep(const ExperimentConfig& cfg,
                      const std::function<void(const SweepRow&)>& on_row = {});

/// Relative error of E_refill = E_transferred + cost * travel + (E_end - E_start).
double conservation_error(const McvLedger& l, double travel_cost);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
std::string sweep_csv(const SweepResult& result);

/// Parses a CSV produced by write_sweep_csv. Throws std::invalid_argument
/// on an empty or malformed table.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

struct TrendCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Summary {
  std::vector<SweepRow> means;  // recomputed from per-run rows
  std::vector<TrendCheck> checks;
  bool all_passed() const;
};

/// Metric means per scheduler and the directional checks: survival
/// non-increasing and delay non-decreasing over node counts for every
/// scheduler, poised travel at most nearest-job-next travel per node count,
/// and stored mean rows matching the recomputation.
Summary summarize(const std::vector<SweepRow>& rows);
void write_summary(std::ostream& out, const Summary& summary);

}  // namespace wrsn
