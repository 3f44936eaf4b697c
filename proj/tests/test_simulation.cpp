#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "wrsn/experiment.hpp"
#include "wrsn/simulation.hpp"

using namespace wrsn;

namespace {

Network custom_net(const std::vector<Point>& pts, Point sink, double rate = 1e-4, double residual = 0.5) {
  std::vector<SensorNode> nodes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    SensorNode n;
    n.id = static_cast<NodeId>(i);
    n.position = pts[i];
    n.consumption_rate = rate;
    n.residual = residual;
    nodes.push_back(n);
  }
  return Network(std::move(nodes), sink, 50.0, 25.0, 200.0);
}

std::vector<LogRecord> of_kind(const std::vector<LogRecord>& log, LogKind k) {
  std::vector<LogRecord> out;
  for (const auto& r : log)
    if (r.kind == k) out.push_back(r);
  return out;
}

// Residual-priority curve and charging factor written out independently.
double phi(double normalized) { return 4.1997 - 3.16759 * std::exp(0.27897 * normalized * normalized); }
int cfs_singleton(double residual, double threshold) {
  const double p = phi(residual / threshold);
  const double pwf = std::min(p, 1.0);
  return static_cast<int>(std::clamp(std::ceil((std::sqrt(p * p * pwf) - 0.1 * p) * 100.0 - 1e-9), 0.0, 100.0));
}

SimConfig small_config(int mcvs, double horizon) {
  SimConfig cfg;
  cfg.mcv_count = mcvs;
  cfg.horizon = horizon;
  cfg.topology.node_count = 1;
  return cfg;
}

}  // namespace

TEST_CASE("drain step") {
  SensorNode n;
  n.residual = 0.16;
  n.consumption_rate = 1e-4;
  n.request_threshold = 0.15;
  auto out = drain_step(n, 100.0);
  CHECK(n.residual == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(out.request_emitted);
  CHECK_FALSE(out.died);
  out = drain_step(n, 100.0);
  CHECK_FALSE(out.request_emitted);  // still the same excursion

  n.residual = 0.001;
  out = drain_step(n, 100.0);
  CHECK(n.residual == 0.0);
  CHECK(out.died);
  out = drain_step(n, 100.0);
  CHECK(n.residual == 0.0);
  CHECK_FALSE(out.died);
  CHECK_THROWS_AS(drain_step(n, 0.0), std::invalid_argument);
}

TEST_CASE("no requests within the horizon") {
  TopologyConfig tc;
  tc.node_count = 30;
  SimConfig cfg;
  cfg.topology = tc;
  cfg.horizon = 100.0;
  const auto r = run(cfg);
  CHECK(r.metrics.requests_emitted == 0);
  CHECK(r.metrics.energy_usage_efficiency == 100.0);
  CHECK_FALSE(r.metrics.efficiency_defined);
  CHECK(r.metrics.travel_distance_total == 0.0);
  CHECK(r.metrics.survival_rate == 100.0);
}

TEST_CASE("single node hand trace") {
  // One node 60 m east of the sink, one vehicle starting 70.7 m west of it.
  const Point sink{100, 100};
  const auto net = custom_net({{160, 100}}, sink);
  auto cfg = small_config(1, 6000.0);
  const auto r = run(cfg, net);

  const auto requests = of_kind(r.log, LogKind::RequestEmitted);
  const auto departures = of_kind(r.log, LogKind::McvDeparted);
  const auto charges = of_kind(r.log, LogKind::ChargeCompleted);
  REQUIRE(!requests.empty());
  REQUIRE(!departures.empty());
  REQUIRE(!charges.empty());

  // The request fires when 0.35 J have drained at 1e-4 J/s.
  CHECK(requests[0].time == doctest::Approx(3500.0).epsilon(1e-12));
  CHECK(requests[0].node == 0);
  int before_first_charge = 0;
  for (const auto& q : requests)
    if (q.time < charges[0].time && q.request != charges[0].request) ++before_first_charge;
  CHECK(before_first_charge == 0);
  CHECK(charges[0].request == requests[0].request);

  // The sink re-plans every 10 s; the vehicle leaves at the first check whose
  // charging factor lifts the target above the residual.
  double t = 3500.0;
  int pct = 0;
  for (;; t += 10.0) {
    const double residual = 0.5 - 1e-4 * t;
    pct = cfs_singleton(residual, 0.15);
    if (pct / 100.0 * 0.5 > residual + 1e-9) break;
    REQUIRE(t < 6000.0);
  }
  CHECK(departures[0].time == doctest::Approx(t).epsilon(1e-9));

  const double radius = 200.0 / std::sqrt(2.0) / 2.0;
  const Point start{sink.x - radius, sink.y};
  const double leg = euclidean_distance(start, {160, 100});
  CHECK(departures[0].value == doctest::Approx(leg).epsilon(1e-12));
  const double arrival = t + leg / 5.0;
  const auto arrivals = of_kind(r.log, LogKind::McvArrived);
  REQUIRE(!arrivals.empty());
  CHECK(arrivals[0].time == doctest::Approx(arrival).epsilon(1e-12));

  const double residual_at_arrival = 0.5 - 1e-4 * arrival;
  const double target = pct / 100.0 * 0.5;
  CHECK(charges[0].value == doctest::Approx(target - residual_at_arrival).epsilon(1e-9));
  CHECK(charges[0].time == doctest::Approx(arrival + (target - residual_at_arrival) / 0.05).epsilon(1e-12));

  const auto detections = of_kind(r.log, LogKind::McvDetectedByNode);
  REQUIRE(!detections.empty());
  CHECK(detections[0].flag == 1);
  CHECK(detections[0].time < arrivals[0].time);
  CHECK(detections[0].time == doctest::Approx(t + (leg - 25.0) / 5.0).epsilon(1e-9));
}

TEST_CASE("runs are deterministic") {
  SimConfig cfg;
  cfg.topology.node_count = 60;
  cfg.topology.seed = 5;
  cfg.horizon = 20000.0;
  for (auto sched : {Scheduler::Poised, Scheduler::Nearest, Scheduler::Fcfs}) {
    cfg.scheduler = sched;
    const auto a = run(cfg);
    const auto b = run(cfg);
    std::ostringstream la, lb;
    write_event_log(la, a.log);
    write_event_log(lb, b.log);
    CHECK(la.str() == lb.str());
    CHECK(a.metrics.travel_distance_total == b.metrics.travel_distance_total);
    CHECK(a.metrics.energy_usage_efficiency == b.metrics.energy_usage_efficiency);
    CHECK(a.metrics.mean_charging_delay == b.metrics.mean_charging_delay);
  }
}

TEST_CASE("energy ledgers close and logs are consistent") {
  SimConfig cfg;
  cfg.topology.node_count = 120;
  cfg.topology.seed = 2;
  cfg.horizon = 30000.0;
  for (auto sched : {Scheduler::Poised, Scheduler::Nearest, Scheduler::Fcfs}) {
    cfg.scheduler = sched;
    const auto r = run(cfg);
    CHECK(r.metrics.requests_served > 0);
    for (const auto& l : r.ledger.mcvs) {
      CHECK(conservation_error(l, cfg.mcv.travel_cost) <= 1e-9);
      CHECK(l.battery_end >= 0.0);
      CHECK(l.battery_end <= cfg.mcv.capacity);
      CHECK(l.travel_energy == doctest::Approx(cfg.mcv.travel_cost * l.travel_distance).epsilon(1e-12));
    }
    const auto audit = audit_log(r.log);
    CHECK(audit.time_sorted);
    CHECK(audit.causal);
    CHECK(audit.duplicated_requests == 0);
    CHECK(audit.max_services_per_request <= 1);
    CHECK(r.metrics.duplicate_services == 0);
    CHECK(r.metrics.energy_usage_efficiency <= 100.0);
    CHECK(r.metrics.survival_rate >= 0.0);
    for (const auto& e : of_kind(r.log, LogKind::RequestEmitted)) CHECK(e.value <= 0.15 + 1e-9);
  }
}

TEST_CASE("detection dedups the other vehicle and truncates its leg") {
  // Two vehicles start at (100, 170.7) and (100, 29.3); the node sits close
  // to the upper one but outside its sensing range, so the lower one is still
  // on its way when the upper one is detected.
  const auto net = custom_net({{100, 130}}, {100, 100}, 1e-4, 0.2);
  auto cfg = small_config(2, 2000.0);
  cfg.scheduler = Scheduler::Nearest;
  const auto r = run(cfg, net);
  const auto departures = of_kind(r.log, LogKind::McvDeparted);
  REQUIRE(departures.size() >= 2);
  CHECK(departures[0].node == 0);
  CHECK(departures[1].node == 0);
  CHECK(departures[0].mcv != departures[1].mcv);

  const auto detections = of_kind(r.log, LogKind::McvDetectedByNode);
  REQUIRE(!detections.empty());
  CHECK(detections[0].mcv == 0);
  const auto truncations = of_kind(r.log, LogKind::TravelTruncated);
  REQUIRE(!truncations.empty());
  CHECK(truncations[0].mcv == 1);
  CHECK(truncations[0].time == detections[0].time);
  CHECK(truncations[0].value == doctest::Approx(5.0 * (detections[0].time - departures[1].time)).epsilon(1e-9));
  CHECK(truncations[0].value > 0.0);

  const auto charges = of_kind(r.log, LogKind::ChargeCompleted);
  REQUIRE(charges.size() == 1);
  CHECK(charges[0].mcv == 0);
  CHECK(audit_log(r.log).duplicated_requests == 0);
}

TEST_CASE("without sensing a contrived pair charges the same request twice") {
  // Node on the bisector of the two starting points: both vehicles commit.
  const auto net = custom_net({{110, 100}}, {100, 100}, 1e-4, 0.2);
  for (auto sched : {Scheduler::Poised, Scheduler::Nearest}) {
    auto cfg = small_config(2, 3000.0);
    cfg.scheduler = sched;
    cfg.isac = false;
    const auto off = run(cfg, net);
    const auto audit = audit_log(off.log);
    CHECK(audit.duplicated_requests >= 1);
    CHECK(off.metrics.duplicate_services >= 1);
    CHECK(audit.causal);

    cfg.isac = true;
    const auto on = run(cfg, net);
    CHECK(audit_log(on.log).duplicated_requests == 0);
    CHECK(on.metrics.travel_distance_total <= off.metrics.travel_distance_total);
  }
}

TEST_CASE("sensing never increases travel on identical seeds") {
  SimConfig cfg;
  cfg.topology.node_count = 60;
  cfg.horizon = 15000.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    cfg.topology.seed = seed;
    cfg.isac = true;
    const auto on = run(cfg);
    cfg.isac = false;
    const auto off = run(cfg);
    CHECK(on.metrics.travel_distance_total <= off.metrics.travel_distance_total);
  }
}

TEST_CASE("unreachable node is skipped") {
  // 5 J/m with a 10 kJ battery cannot reach a node 1.5 km away and come back.
  const auto net = custom_net({{1600, 100}}, {100, 100}, 1e-4, 0.2);
  auto cfg = small_config(1, 3000.0);
  cfg.scheduler = Scheduler::Nearest;
  const auto r = run(cfg, net);
  CHECK(!of_kind(r.log, LogKind::NodeSkipped).empty());
  CHECK(of_kind(r.log, LogKind::ChargeCompleted).empty());
  CHECK(r.metrics.requests_served == 0);
}

TEST_CASE("nodes die when nobody serves them") {
  const auto net = custom_net({{1600, 100}, {1700, 100}}, {100, 100}, 2e-4, 0.2);
  auto cfg = small_config(1, 1500.0);
  cfg.scheduler = Scheduler::Fcfs;
  const auto r = run(cfg, net);
  CHECK(of_kind(r.log, LogKind::NodeDied).size() == 2);
  CHECK(r.metrics.survival_rate == 0.0);
}

TEST_CASE("metric aggregation") {
  RunLedger l;
  l.node_count = 10;
  l.alive_count = 8;
  McvLedger v;
  v.battery_start = 100.0;
  v.battery_end = 100.0;
  v.refill_total = 50.0;
  v.energy_transferred = 50.0;
  l.mcvs.push_back(v);
  l.requests.push_back({0, 1, 10.0, true, 50.0, 1});
  l.requests.push_back({1, 2, 20.0, false, 0.0, 0});
  const auto m = collect_metrics(l);
  CHECK(m.survival_rate == doctest::Approx(80.0));
  CHECK(m.energy_usage_efficiency == doctest::Approx(100.0));
  CHECK(m.efficiency_defined);
  CHECK(m.mean_charging_delay == doctest::Approx(40.0));
  CHECK(m.requests_served == 1);
  CHECK(m.requests_emitted == 2);
}

TEST_CASE("invalid configurations are rejected") {
  SimConfig cfg;
  cfg.mcv.speed = -5.0;
  CHECK_THROWS_WITH_AS(run(cfg), doctest::Contains("mcv_speed"), std::invalid_argument);
  cfg = SimConfig{};
  cfg.mcv_count = 0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg = SimConfig{};
  cfg.topology.min_consumption = 0.0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg = SimConfig{};
  cfg.mcv.charge_rate = 1e-5;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  CHECK_THROWS_AS(parse_scheduler("greedy"), std::invalid_argument);
  CHECK(parse_scheduler("fcfs") == Scheduler::Fcfs);
}

TEST_CASE("event log format") {
  LogRecord r{12.5, LogKind::ChargeCompleted, 1, 7, 3, 0.25, 0};
  CHECK(format_log_record(r) == "12.5 ChargeCompleted mcv=1 node=7 request=3 energy=0.25");
  LogRecord q{1.0, LogKind::QueueResort, -1, -1, -1, 0.0, 0};
  CHECK(format_log_record(q) == "1 QueueResort");
}

TEST_CASE("idle roaming") {
  SimConfig cfg;
  cfg.topology.node_count = 40;
  cfg.horizon = 8000.0;
  cfg.idle_roam = true;
  const auto r = run(cfg);
  std::size_t roam_legs = 0;
  for (const auto& e : of_kind(r.log, LogKind::McvDeparted))
    if (e.node < 0) ++roam_legs;
  CHECK(roam_legs > 0);
  // Roaming before the first request already costs travel.
  CHECK(r.metrics.travel_distance_total > 0.0);
  for (const auto& l : r.ledger.mcvs) CHECK(conservation_error(l, cfg.mcv.travel_cost) <= 1e-9);
  const auto audit = audit_log(r.log);
  CHECK(audit.causal);
  CHECK(audit.time_sorted);
  CHECK(audit.duplicated_requests == 0);
  CHECK(r.metrics.requests_served > 0);

  const auto again = run(cfg);
  CHECK(again.metrics.travel_distance_total == r.metrics.travel_distance_total);
  cfg.idle_roam = false;
  CHECK(run(cfg).metrics.travel_distance_total < r.metrics.travel_distance_total);
}
