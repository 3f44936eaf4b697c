#include "wrsn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "wrsn/text_format.hpp"

namespace wrsn {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key), "expected on/off, got '" + std::string(v) + "'");
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::default_seeds() {
  std::vector<std::uint64_t> s(20);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i + 1;
  return s;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (auto item : split(text, ',')) {
    if (item.empty()) throw std::invalid_argument("empty seed entry");
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      const auto v = parse_integer(item);
      if (v < 0) throw std::invalid_argument("negative seed");
      seeds.push_back(static_cast<std::uint64_t>(v));
      continue;
    }
    const auto lo = parse_integer(trim(item.substr(0, dots)));
    const auto hi = parse_integer(trim(item.substr(dots + 2)));
    if (lo < 0 || hi < lo) throw std::invalid_argument("bad seed range '" + std::string(item) + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  return seeds;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key_view, std::string_view raw) {
  const std::string key(trim(key_view));
  const std::string_view value = trim(raw);
  const auto number = [&]() {
    try {
      return parse_double(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  };
  const auto integer = [&]() {
    try {
      return parse_integer(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  };
  auto& sim = cfg.base;

  if (key == "nodes" || key == "node_counts") {
    cfg.node_counts.clear();
    try {
      for (auto item : split(value, ',')) cfg.node_counts.push_back(static_cast<int>(parse_integer(item)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  } else if (key == "mcvs" || key == "mcv_count") {
    cfg.mcv_count = static_cast<int>(integer());
  } else if (key == "seeds") {
    try {
      cfg.seeds = parse_seed_list(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  } else if (key == "horizon") {
    cfg.horizon = number();
  } else if (key == "scheduler" || key == "schedulers") {
    cfg.schedulers.clear();
    try {
      for (auto item : split(value, ',')) cfg.schedulers.push_back(parse_scheduler(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  } else if (key == "isac") {
    cfg.isac = parse_bool(key, value);
  } else if (key == "out" || key == "output_path") {
    cfg.output_path = std::string(value);
  } else if (key == "area_side") {
    sim.topology.area_side = number();
  } else if (key == "comm_range") {
    sim.topology.comm_range = number();
  } else if (key == "sensing_range") {
    sim.topology.sensing_range = number();
  } else if (key == "battery_capacity") {
    sim.topology.capacity = number();
  } else if (key == "threshold_fraction") {
    sim.topology.threshold_fraction = number();
  } else if (key == "min_consumption") {
    sim.topology.min_consumption = number();
  } else if (key == "max_consumption") {
    sim.topology.max_consumption = number();
  } else if (key == "mcv_capacity") {
    sim.mcv.capacity = number();
  } else if (key == "mcv_speed") {
    sim.mcv.speed = number();
  } else if (key == "travel_cost") {
    sim.mcv.travel_cost = number();
  } else if (key == "charge_rate") {
    sim.mcv.charge_rate = number();
  } else if (key == "reserve_fraction") {
    sim.mcv.reserve_fraction = number();
  } else if (key == "circum_radius") {
    sim.circum_radius = number();
  } else if (key == "recheck_interval") {
    sim.recheck_interval = number();
  } else if (key == "detection_step") {
    sim.detection_step = number();
  } else if (key == "rerequest_below_threshold") {
    sim.rerequest_below_threshold = parse_bool(key, value);
  } else if (key == "idle_roam") {
    sim.idle_roam = parse_bool(key, value);
  } else if (key == "snr_db") {
    sim.isac_cfg.snr_db = value == "inf" ? std::numeric_limits<double>::infinity() : number();
  } else if (key == "sample_rate") {
    sim.isac_cfg.sample_rate = number();
  } else if (key == "pulse_duration") {
    sim.isac_cfg.pulse_duration = number();
  } else if (key == "chirp_start") {
    sim.isac_cfg.start_frequency = number();
  } else if (key == "chirp_stop") {
    sim.isac_cfg.stop_frequency = number();
  } else {
    throw ConfigError(key, "unknown key");
  }
}

void ExperimentConfig::validate() const {
  if (node_counts.empty()) throw ConfigError("nodes", "at least one node count required");
  for (int n : node_counts)
    if (n < 1) throw ConfigError("nodes", "node counts must be at least 1");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  if (schedulers.empty()) throw ConfigError("scheduler", "at least one scheduler required");
  if (mcv_count < 1) throw ConfigError("mcvs", "must be at least 1");
  if (!(horizon > 0.0)) throw ConfigError("horizon", "must be positive");
  SimConfig probe = run_config(node_counts.front(), seeds.front(), schedulers.front());
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(colon == std::string::npos ? "config" : msg.substr(0, colon),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
}

SimConfig ExperimentConfig::run_config(int node_count, std::uint64_t seed, Scheduler scheduler) const {
  SimConfig c = base;
  c.topology.node_count = node_count;
  c.topology.seed = seed;
  c.mcv_count = mcv_count;
  c.horizon = horizon;
  c.scheduler = scheduler;
  c.isac = isac;
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

double conservation_error(const McvLedger& l, double travel_cost) {
  const double lhs = l.refill_total;
  const double rhs = l.energy_transferred + travel_cost * l.travel_distance + (l.battery_end - l.battery_start);
  const double scale = std::max({std::abs(lhs), std::abs(l.battery_start), 1.0});
  return std::abs(lhs - rhs) / scale;
}

namespace {

std::vector<SweepRow> compute_means(const std::vector<SweepRow>& runs) {
  // Keyed by first appearance so the order follows the run order.
  std::vector<std::pair<int, Scheduler>> keys;
  std::map<std::pair<int, int>, std::vector<const SweepRow*>> groups;
  for (const auto& r : runs) {
    if (r.is_mean) continue;
    const std::pair<int, int> k{r.node_count, static_cast<int>(r.scheduler)};
    if (!groups.count(k)) keys.emplace_back(r.node_count, r.scheduler);
    groups[k].push_back(&r);
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<SweepRow> means;
  for (const auto& [n, sched] : keys) {
    const auto& g = groups[{n, static_cast<int>(sched)}];
    SweepRow m;
    m.scheduler = sched;
    m.node_count = n;
    m.mcv_count = g.front()->mcv_count;
    m.is_mean = true;
    std::size_t count = 0;
    for (const auto* r : g) {
      if (!r->ok) continue;
      ++count;
      m.efficiency_pct += r->efficiency_pct;
      m.mean_delay_s += r->mean_delay_s;
      m.survival_pct += r->survival_pct;
      m.travel_m += r->travel_m;
    }
    if (count == 0) {
      m.ok = false;
    } else {
      m.efficiency_pct /= count;
      m.mean_delay_s /= count;
      m.survival_pct /= count;
      m.travel_m /= count;
    }
    means.push_back(m);
  }
  return means;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const std::function<void(const SweepRow&)>& on_row) {
  cfg.validate();
  SweepResult result;
  for (int n : cfg.node_counts) {
    for (auto seed : cfg.seeds) {
      for (auto sched : cfg.schedulers) {
        SweepRow row;
        row.scheduler = sched;
        row.node_count = n;
        row.mcv_count = cfg.mcv_count;
        row.seed = seed;
        ++result.audit.runs;
        try {
          const auto sim_cfg = cfg.run_config(n, seed, sched);
          const auto r = run(sim_cfg);
          row.efficiency_pct = r.metrics.energy_usage_efficiency;
          row.mean_delay_s = r.metrics.mean_charging_delay;
          row.survival_pct = r.metrics.survival_rate;
          row.travel_m = r.metrics.travel_distance_total;
          const auto audit = audit_log(r.log);
          result.audit.duplicated_requests += audit.duplicated_requests;
          result.audit.logs_causal = result.audit.logs_causal && audit.causal;
          result.audit.logs_sorted = result.audit.logs_sorted && audit.time_sorted;
          for (const auto& l : r.ledger.mcvs)
            result.audit.max_conservation_error =
                std::max(result.audit.max_conservation_error, conservation_error(l, sim_cfg.mcv.travel_cost));
        } catch (const std::exception&) {
          row.ok = false;
          ++result.audit.failed_runs;
        }
        if (on_row) on_row(row);
        result.runs.push_back(row);
      }
    }
  }
  result.means = compute_means(result.runs);
  return result;
}

namespace {

std::string metric_text(const SweepRow& r, double v) { return r.ok ? format_double(v) : "nan"; }

void write_row(std::ostream& out, const SweepRow& r) {
  out << to_string(r.scheduler) << ',' << r.node_count << ',' << r.mcv_count << ','
      << (r.is_mean ? std::string("mean") : std::to_string(r.seed)) << ','
      << metric_text(r, r.efficiency_pct) << ',' << metric_text(r, r.mean_delay_s) << ','
      << metric_text(r, r.survival_pct) << ',' << metric_text(r, r.travel_m) << '\n';
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << kCsvHeader << '\n';
  for (const auto& r : result.runs) write_row(out, r);
  for (const auto& r : result.means) write_row(out, r);
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream out;
  write_sweep_csv(out, result);
  return out.str();
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  if (trim(line) != kCsvHeader) throw std::invalid_argument("csv: unexpected header");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    const auto where = "csv line " + std::to_string(lineno) + ": ";
    if (f.size() != 8) throw std::invalid_argument(where + "expected 8 fields");
    SweepRow r;
    try {
      r.scheduler = parse_scheduler(f[0]);
      r.node_count = static_cast<int>(parse_integer(f[1]));
      r.mcv_count = static_cast<int>(parse_integer(f[2]));
      if (f[3] == "mean") {
        r.is_mean = true;
      } else {
        r.seed = static_cast<std::uint64_t>(parse_integer(f[3]));
      }
      double* targets[4] = {&r.efficiency_pct, &r.mean_delay_s, &r.survival_pct, &r.travel_m};
      for (int k = 0; k < 4; ++k) {
        if (f[4 + k] == "nan") {
          r.ok = false;
        } else {
          *targets[k] = parse_double(f[4 + k]);
        }
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");
  return rows;
}

bool Summary::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const TrendCheck& c) { return c.passed; });
}

Summary summarize(const std::vector<SweepRow>& rows) {
  Summary s;
  s.means = compute_means(rows);
  if (s.means.empty()) throw std::invalid_argument("summarize: no per-run rows");

  constexpr double kTol = 1e-9;
  {
    TrendCheck c{"stored means match per-run rows", true, ""};
    std::size_t stored = 0;
    for (const auto& r : rows) {
      if (!r.is_mean) continue;
      ++stored;
      const auto it = std::find_if(s.means.begin(), s.means.end(), [&](const SweepRow& m) {
        return m.node_count == r.node_count && m.scheduler == r.scheduler;
      });
      const auto close = [&](double a, double b) { return std::abs(a - b) <= kTol * std::max(1.0, std::abs(b)); };
      if (it == s.means.end() || !close(r.efficiency_pct, it->efficiency_pct) ||
          !close(r.mean_delay_s, it->mean_delay_s) || !close(r.survival_pct, it->survival_pct) ||
          !close(r.travel_m, it->travel_m)) {
        c.passed = false;
        c.detail = std::string(to_string(r.scheduler)) + " n=" + std::to_string(r.node_count);
      }
    }
    if (stored > 0) s.checks.push_back(c);
  }

  std::vector<Scheduler> schedulers;
  for (const auto& m : s.means)
    if (std::find(schedulers.begin(), schedulers.end(), m.scheduler) == schedulers.end())
      schedulers.push_back(m.scheduler);

  const auto series = [&](Scheduler sched) {
    std::vector<SweepRow> out;
    for (const auto& m : s.means)
      if (m.scheduler == sched && m.ok) out.push_back(m);
    return out;
  };

  for (auto sched : schedulers) {
    const auto pts = series(sched);
    const std::string name(to_string(sched));
    TrendCheck surv{name + " survival non-increasing in node count", true, ""};
    TrendCheck delay{name + " charging delay non-decreasing in node count", true, ""};
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (pts[k].survival_pct > pts[k - 1].survival_pct + kTol) {
        surv.passed = false;
        surv.detail += " n=" + std::to_string(pts[k].node_count) + ": " + format_double(pts[k].survival_pct) +
                       " > " + format_double(pts[k - 1].survival_pct);
      }
      if (pts[k].mean_delay_s + kTol < pts[k - 1].mean_delay_s) {
        delay.passed = false;
        delay.detail += " n=" + std::to_string(pts[k].node_count) + ": " + format_double(pts[k].mean_delay_s) +
                        " < " + format_double(pts[k - 1].mean_delay_s);
      }
    }
    s.checks.push_back(surv);
    s.checks.push_back(delay);
  }

  const auto poised = series(Scheduler::Poised);
  const auto nearest = series(Scheduler::Nearest);
  if (!poised.empty() && !nearest.empty()) {
    TrendCheck travel{"poised travel <= nearest travel at every node count", true, ""};
    for (const auto& p : poised) {
      const auto it = std::find_if(nearest.begin(), nearest.end(),
                                   [&](const SweepRow& q) { return q.node_count == p.node_count; });
      if (it == nearest.end()) continue;
      if (p.travel_m > it->travel_m + kTol) {
        travel.passed = false;
        travel.detail += " n=" + std::to_string(p.node_count) + ": " + format_double(p.travel_m) + " > " +
                         format_double(it->travel_m);
      }
    }
    s.checks.push_back(travel);
  }
  return s;
}

void write_summary(std::ostream& out, const Summary& summary) {
  out << "scheduler node_count efficiency_pct mean_delay_s survival_pct travel_m\n";
  for (const auto& m : summary.means) {
    out << to_string(m.scheduler) << ' ' << m.node_count << ' ';
    if (!m.ok) {
      out << "failed\n";
      continue;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.3f %.3f %.3f %.1f", m.efficiency_pct, m.mean_delay_s,
                  m.survival_pct, m.travel_m);
    out << buf << '\n';
  }
  for (const auto& c : summary.checks)
    out << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " |") << c.detail << '\n';
}

}  // namespace wrsn
