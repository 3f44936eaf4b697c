// Command-line runner for charging sweeps, single runs and CSV summaries.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wrsn/experiment.hpp"
#include "wrsn/network.hpp"
#include "wrsn/simulation.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> nodes, mcvs, seeds, scheduler, isac, horizon, out;
  std::vector<std::string> sets;  // raw key=value
};

wrsn::ExperimentConfig resolve(const Overrides& o) {
  wrsn::ExperimentConfig cfg = o.config_path ? wrsn::parse_config_file(*o.config_path) : wrsn::ExperimentConfig{};
  const auto apply = [&](const char* key, const std::optional<std::string>& v) {
    if (v) wrsn::apply_setting(cfg, key, *v);
  };
  apply("nodes", o.nodes);
  apply("mcvs", o.mcvs);
  apply("seeds", o.seeds);
  apply("scheduler", o.scheduler);
  apply("isac", o.isac);
  apply("horizon", o.horizon);
  apply("out", o.out);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw wrsn::ConfigError(s, "expected key=value");
    wrsn::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int do_sweep(const wrsn::ExperimentConfig& cfg, bool quiet) {
  const auto result = wrsn::run_sweep(cfg, [&](const wrsn::SweepRow& r) {
    if (!quiet)
      std::fprintf(stderr, "%s n=%d seed=%llu %s\n", std::string(wrsn::to_string(r.scheduler)).c_str(),
                   r.node_count, static_cast<unsigned long long>(r.seed), r.ok ? "ok" : "FAILED");
  });
  if (cfg.output_path == "-") {
    wrsn::write_sweep_csv(std::cout, result);
  } else {
    std::ofstream out(cfg.output_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << cfg.output_path << '\n';
      return 1;
    }
    wrsn::write_sweep_csv(out, result);
  }
  const auto& a = result.audit;
  std::fprintf(stderr, "runs=%zu failed=%zu duplicated_requests=%zu causal=%d max_conservation_error=%.3g\n",
               a.runs, a.failed_runs, a.duplicated_requests, a.logs_causal ? 1 : 0, a.max_conservation_error);
  return a.failed_runs == 0 ? 0 : 3;
}

int do_run(const wrsn::ExperimentConfig& cfg, const std::string& log_path) {
  const auto sim = cfg.run_config(cfg.node_counts.front(), cfg.seeds.front(), cfg.schedulers.front());
  const auto r = wrsn::run(sim);
  if (!log_path.empty()) {
    std::ofstream out(log_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << log_path << '\n';
      return 1;
    }
    wrsn::write_event_log(out, r.log);
  }
  const auto& m = r.metrics;
  std::printf("scheduler=%s nodes=%d mcvs=%d seed=%llu\n", std::string(wrsn::to_string(sim.scheduler)).c_str(),
              sim.topology.node_count, sim.mcv_count, static_cast<unsigned long long>(sim.topology.seed));
  std::printf("efficiency_pct=%.4f mean_delay_s=%.3f survival_pct=%.3f travel_m=%.2f\n",
              m.energy_usage_efficiency, m.mean_charging_delay, m.survival_rate, m.travel_distance_total);
  std::printf("requests_emitted=%zu requests_served=%zu duplicate_services=%zu\n", m.requests_emitted,
              m.requests_served, m.duplicate_services);
  for (std::size_t k = 0; k < m.per_mcv.size(); ++k) {
    const auto& l = m.per_mcv[k];
    std::printf("mcv %zu: charges=%d depot_visits=%d transferred=%.4f travel=%.1f conservation_error=%.3g\n", k,
                l.charges, l.depot_visits, l.energy_transferred, l.travel_distance,
                wrsn::conservation_error(l, sim.mcv.travel_cost));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WRSN multi-vehicle charging simulator"};
  app.require_subcommand(0, 1);

  Overrides o;
  const auto add_common = [&](CLI::App* a) {
    a->add_option_function<std::string>("--config", [&](const std::string& v) { o.config_path = v; },
                                        "flat key = value config file");
    a->add_option_function<std::string>("--nodes", [&](const std::string& v) { o.nodes = v; },
                                        "node counts, comma separated");
    a->add_option_function<std::string>("--mcvs", [&](const std::string& v) { o.mcvs = v; }, "number of MCVs");
    a->add_option_function<std::string>("--seeds", [&](const std::string& v) { o.seeds = v; },
                                        "seed list, e.g. 1..20 or 3,5,7");
    a->add_option_function<std::string>("--scheduler", [&](const std::string& v) { o.scheduler = v; },
                                        "poised, nearest, fcfs (comma separated)");
    a->add_option_function<std::string>("--isac", [&](const std::string& v) { o.isac = v; }, "on or off");
    a->add_option_function<std::string>("--horizon", [&](const std::string& v) { o.horizon = v; },
                                        "simulated seconds");
    a->add_option_function<std::string>("--out", [&](const std::string& v) { o.out = v; },
                                        "CSV output path, - for stdout");
    a->add_option("--set", o.sets, "extra key=value settings")->take_all();
  };
  add_common(&app);

  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no per-run progress");

  auto* sweep = app.add_subcommand("sweep", "run the full sweep and write the CSV (default)");
  add_common(sweep);
  sweep->add_flag("-q,--quiet", quiet, "no per-run progress");

  std::string log_path;
  auto* single = app.add_subcommand("run", "single run using the first node count, seed and scheduler");
  add_common(single);
  single->add_option("--log", log_path, "event log output path");

  std::string csv_path;
  auto* summarize = app.add_subcommand("summarize", "per-scheduler means and trend checks for a sweep CSV");
  summarize->add_option("csv", csv_path, "sweep CSV")->required();

  std::string topo_out;
  auto* topology = app.add_subcommand("topology", "write the topology for the first node count and seed");
  add_common(topology);
  topology->add_option("--file", topo_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*summarize) {
      std::ifstream in(csv_path, std::ios::binary);
      if (!in) {
        std::cerr << "error: cannot read " << csv_path << '\n';
        return 1;
      }
      const auto summary = wrsn::summarize(wrsn::read_sweep_csv(in));
      wrsn::write_summary(std::cout, summary);
      return summary.all_passed() ? 0 : 4;
    }
    const auto cfg = resolve(o);
    if (*single) return do_run(cfg, log_path);
    if (*topology) {
      auto tc = cfg.base.topology;
      tc.node_count = cfg.node_counts.front();
      tc.seed = cfg.seeds.front();
      const auto net = wrsn::build_topology(tc);
      if (topo_out.empty()) {
        wrsn::write_topology(std::cout, net);
      } else {
        std::ofstream out(topo_out, std::ios::binary);
        wrsn::write_topology(out, net);
      }
      return 0;
    }
    return do_sweep(cfg, quiet);
  } catch (const wrsn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
