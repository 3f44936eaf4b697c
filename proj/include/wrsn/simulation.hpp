#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wrsn/charge_plan.hpp"
#include "wrsn/isac.hpp"
#include "wrsn/network.hpp"
#include "wrsn/priority.hpp"

namespace wrsn {

enum class Scheduler {
  Poised,   // per-MCV priority queues with partial charging
  Nearest,  // nearest pending request, full recharge (generic baseline)
  Fcfs,     // oldest pending request, full recharge (generic baseline)
};

std::string_view to_string(Scheduler s);
/// Accepts "poised", "nearest", "fcfs"; throws std::invalid_argument otherwise.
Scheduler parse_scheduler(std::string_view text);

struct McvParams {
  double capacity = 10000.0;      // J
  double speed = 5.0;             // m/s
  double travel_cost = 5.0;       // J/m
  double charge_rate = 0.05;      // J/s
  double reserve_fraction = 0.10; // of capacity, kept on top of the trip home
};

/// Mobile charging vehicle as seen by the scheduler.
struct Mcv {
  int id = 0;
  Point position;
  double battery = 0.0;
  McvParams params;
  /// Last queue the sink built for this vehicle (Poised only).
  std::vector<QueueEntry> queue;

  /// CE_th for a vehicle at `from`: reserve plus the energy to reach the depot.
  double min_working_threshold(Point from, Point depot) const;
};

struct SimConfig {
  TopologyConfig topology;
  int mcv_count = 4;
  McvParams mcv;
  double horizon = 86400.0;  // s
  Scheduler scheduler = Scheduler::Poised;
  bool isac = true;
  IsacConfig isac_cfg;
  PriorityParams priority;
  /// Circumradius used for initial placement; <= 0 means that of the area.
  double circum_radius = 0.0;
  /// Idle vehicles with a non-empty queue but nothing worth charging re-plan
  /// at this period.
  double recheck_interval = 10.0;  // s
  /// Travel between repeated ranging attempts once inside the sensing range.
  double detection_step = 1.0;  // m
  bool record_log = true;
  /// A node left below its threshold by a partial charge requests again at
  /// once; otherwise it waits for the next downward crossing.
  bool rerequest_below_threshold = true;
  /// Vehicles with nothing pending wander between uniform random waypoints
  /// instead of holding position.
  bool idle_roam = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class LogKind {
  RequestEmitted,
  McvArrived,
  ChargeCompleted,
  McvDetectedByNode,
  NodeDied,
  DepotReturn,
  QueueResort,
  McvDeparted,
  TravelTruncated,
  NodeSkipped,
};

std::string_view to_string(LogKind k);

struct LogRecord {
  double time = 0.0;
  LogKind kind = LogKind::QueueResort;
  int mcv = -1;
  NodeId node = -1;
  long request = -1;
  double value = 0.0;  // kind-specific: energy, distance, target, ...
  int flag = 0;        // kind-specific: detection outcome, ...
};

/// Line-delimited `time kind key=value...` records.
void write_event_log(std::ostream& out, const std::vector<LogRecord>& log);
std::string format_log_record(const LogRecord& r);

/// Energy bookkeeping for one vehicle.
struct McvLedger {
  double battery_start = 0.0;
  double battery_end = 0.0;
  double refill_total = 0.0;
  double energy_transferred = 0.0;
  double travel_distance = 0.0;
  double travel_energy = 0.0;
  int charges = 0;
  int depot_visits = 0;
};

struct RequestRecord {
  long id = 0;
  NodeId node = 0;
  double emitted = 0.0;
  bool served = false;
  double served_time = 0.0;
  int services = 0;  // ChargeCompleted records against this request
};

/// Raw quantities collected by a run.
struct RunLedger {
  std::vector<McvLedger> mcvs;
  std::vector<RequestRecord> requests;
  std::size_t node_count = 0;
  std::size_t alive_count = 0;
};

struct MetricsReport {
  double energy_usage_efficiency = 100.0;  // %
  bool efficiency_defined = false;         // false when no energy left the sink
  double mean_charging_delay = 0.0;        // s, over served requests
  double survival_rate = 100.0;            // %
  double travel_distance_total = 0.0;      // m
  std::size_t requests_emitted = 0;
  std::size_t requests_served = 0;
  std::size_t duplicate_services = 0;
  std::vector<McvLedger> per_mcv;
};

MetricsReport collect_metrics(const RunLedger& ledger);

struct RunResult {
  MetricsReport metrics;
  RunLedger ledger;
  std::vector<LogRecord> log;
};

/// Deterministic discrete-event run of one scenario.
RunResult run(const SimConfig& cfg);
/// Same, on an already built network (which is copied).
RunResult run(const SimConfig& cfg, const Network& net);

struct DrainOutcome {
  bool request_emitted = false;
  bool died = false;
};

/// Advances one node by `dt` seconds of consumption. A request fires when
/// the residual crosses down to the threshold; death fires once on reaching 0.
DrainOutcome drain_step(SensorNode& node, double dt);

struct LogAudit {
  bool time_sorted = true;
  bool causal = true;              // every service preceded by request and arrival
  int max_services_per_request = 0;
  std::size_t duplicated_requests = 0;
};

LogAudit audit_log(const std::vector<LogRecord>& log);

}  // namespace wrsn
