#include "wrsn/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wrsn/text_format.hpp"

namespace wrsn {

std::string_view to_string(Scheduler s) {
  switch (s) {
    case Scheduler::Poised: return "poised";
    case Scheduler::Nearest: return "nearest";
    case Scheduler::Fcfs: return "fcfs";
  }
  return "unknown";
}

Scheduler parse_scheduler(std::string_view text) {
  if (text == "poised") return Scheduler::Poised;
  if (text == "nearest") return Scheduler::Nearest;
  if (text == "fcfs") return Scheduler::Fcfs;
  throw std::invalid_argument("unknown scheduler '" + std::string(text) + "'");
}

std::string_view to_string(LogKind k) {
  switch (k) {
    case LogKind::RequestEmitted: return "RequestEmitted";
    case LogKind::McvArrived: return "McvArrived";
    case LogKind::ChargeCompleted: return "ChargeCompleted";
    case LogKind::McvDetectedByNode: return "McvDetectedByNode";
    case LogKind::NodeDied: return "NodeDied";
    case LogKind::DepotReturn: return "DepotReturn";
    case LogKind::QueueResort: return "QueueResort";
    case LogKind::McvDeparted: return "McvDeparted";
    case LogKind::TravelTruncated: return "TravelTruncated";
    case LogKind::NodeSkipped: return "NodeSkipped";
  }
  return "Unknown";
}

double Mcv::min_working_threshold(Point from, Point depot) const {
  return params.reserve_fraction * params.capacity +
         params.travel_cost * euclidean_distance(from, depot);
}

void SimConfig::validate() const {
  const auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument(key + ": " + why);
  };
  if (topology.node_count < 1) fail("node_count", "must be at least 1");
  if (!(topology.area_side > 0.0)) fail("area_side", "must be positive");
  if (!(topology.comm_range > 0.0)) fail("comm_range", "must be positive");
  if (!(topology.sensing_range > 0.0)) fail("sensing_range", "must be positive");
  if (!(topology.capacity > 0.0)) fail("battery_capacity", "must be positive");
  if (!(topology.threshold_fraction > 0.0 && topology.threshold_fraction < 1.0))
    fail("threshold_fraction", "must lie in (0, 1)");
  if (!(topology.min_consumption > 0.0)) fail("min_consumption", "must be positive");
  if (topology.max_consumption < topology.min_consumption)
    fail("max_consumption", "must be >= min_consumption");
  if (mcv_count < 1) fail("mcv_count", "must be at least 1");
  if (!(mcv.capacity > 0.0)) fail("mcv_capacity", "must be positive");
  if (!(mcv.speed > 0.0)) fail("mcv_speed", "must be positive");
  if (mcv.travel_cost < 0.0) fail("travel_cost", "must be non-negative");
  if (!(mcv.charge_rate > topology.max_consumption))
    fail("charge_rate", "must exceed the largest node consumption rate");
  if (mcv.reserve_fraction < 0.0 || mcv.reserve_fraction >= 1.0)
    fail("reserve_fraction", "must lie in [0, 1)");
  if (!(horizon > 0.0)) fail("horizon", "must be positive");
  if (!(recheck_interval > 0.0)) fail("recheck_interval", "must be positive");
  if (!(detection_step > 0.0)) fail("detection_step", "must be positive");
  try {
    priority.validate();
  } catch (const std::invalid_argument& e) {
    fail("priority", e.what());
  }
  try {
    IsacDetector probe(isac_cfg);
  } catch (const std::invalid_argument& e) {
    fail("isac", e.what());
  }
}

std::string format_log_record(const LogRecord& r) {
  std::string s = format_double(r.time);
  s += ' ';
  s += to_string(r.kind);
  if (r.mcv >= 0) s += " mcv=" + std::to_string(r.mcv);
  if (r.node >= 0) s += " node=" + std::to_string(r.node);
  if (r.request >= 0) s += " request=" + std::to_string(r.request);
  switch (r.kind) {
    case LogKind::RequestEmitted: s += " residual=" + format_double(r.value); break;
    case LogKind::ChargeCompleted: s += " energy=" + format_double(r.value); break;
    case LogKind::McvDetectedByNode:
      s += " range=" + format_double(r.value) + " detected=" + std::to_string(r.flag);
      break;
    case LogKind::DepotReturn: s += " refill=" + format_double(r.value); break;
    case LogKind::McvDeparted: s += " distance=" + format_double(r.value); break;
    case LogKind::TravelTruncated: s += " traveled=" + format_double(r.value); break;
    default: break;
  }
  return s;
}

void write_event_log(std::ostream& out, const std::vector<LogRecord>& log) {
  for (const auto& r : log) out << format_log_record(r) << '\n';
}

DrainOutcome drain_step(SensorNode& node, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("drain_step: dt must be positive");
  // Absorbs rounding when the step lands exactly on the threshold.
  constexpr double kSlack = 1e-12;
  DrainOutcome out;
  const double before = node.residual;
  node.residual = std::max(0.0, before - node.consumption_rate * dt);
  if (before > node.request_threshold && node.residual <= node.request_threshold + kSlack)
    out.request_emitted = true;
  if (before > 0.0 && node.residual == 0.0) out.died = true;
  return out;
}

MetricsReport collect_metrics(const RunLedger& ledger) {
  MetricsReport m;
  m.per_mcv = ledger.mcvs;
  double transferred = 0.0;
  double used = 0.0;
  for (const auto& v : ledger.mcvs) {
    transferred += v.energy_transferred;
    used += v.refill_total + v.battery_start - v.battery_end;
    m.travel_distance_total += v.travel_distance;
  }
  if (used > 0.0) {
    m.efficiency_defined = true;
    m.energy_usage_efficiency = std::min(100.0, 100.0 * transferred / used);
  }
  double delay_sum = 0.0;
  for (const auto& r : ledger.requests) {
    if (r.served) {
      ++m.requests_served;
      delay_sum += r.served_time - r.emitted;
    }
    if (r.services > 1) m.duplicate_services += static_cast<std::size_t>(r.services - 1);
  }
  m.requests_emitted = ledger.requests.size();
  m.mean_charging_delay = m.requests_served > 0 ? delay_sum / m.requests_served : 0.0;
  m.survival_rate =
      ledger.node_count > 0 ? 100.0 * static_cast<double>(ledger.alive_count) / ledger.node_count : 100.0;
  return m;
}

LogAudit audit_log(const std::vector<LogRecord>& log) {
  LogAudit a;
  std::set<long> emitted;
  std::map<int, NodeId> last_arrival;
  std::map<long, int> services;
  double prev = -std::numeric_limits<double>::infinity();
  for (const auto& r : log) {
    if (r.time < prev) a.time_sorted = false;
    prev = r.time;
    switch (r.kind) {
      case LogKind::RequestEmitted: emitted.insert(r.request); break;
      case LogKind::McvArrived: last_arrival[r.mcv] = r.node; break;
      case LogKind::McvDeparted:
      case LogKind::TravelTruncated:
      case LogKind::DepotReturn: last_arrival.erase(r.mcv); break;
      case LogKind::ChargeCompleted: {
        const auto it = last_arrival.find(r.mcv);
        if (!emitted.count(r.request) || it == last_arrival.end() || it->second != r.node)
          a.causal = false;
        a.max_services_per_request = std::max(a.max_services_per_request, ++services[r.request]);
        break;
      }
      default: break;
    }
  }
  for (const auto& [req, n] : services)
    if (n > 1) ++a.duplicated_requests;
  return a;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kMinTransfer = 1e-9;  // J

enum class EventType { NodeThreshold, NodeDeath, Arrival, Detection, ChargeDone, DepotArrival, Recheck, Waypoint };

struct Event {
  double time;
  std::uint64_t seq;
  EventType type;
  int mcv;
  NodeId node;
  std::uint64_t token;
};

struct LaterFirst {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

enum class McvState { Idle, Traveling, Charging, Returning, Roaming };

struct NodeState {
  double ref_energy = 0.0;
  double ref_time = 0.0;
  double net_rate = 0.0;
  bool dead = false;
  std::uint64_t token = 0;
  long open_request = -1;
  int serving_mcv = -1;
};

struct Vehicle {
  Mcv mcv;
  McvState state = McvState::Idle;
  Point leg_from;
  Point leg_to;
  double leg_start = 0.0;
  double leg_length = 0.0;
  NodeId target = -1;
  long target_request = -1;
  double target_energy = 0.0;
  double charge_duration = 0.0;
  std::uint64_t token = 0;
  std::uint64_t waypoints = 0;
  std::vector<char> queued;
  McvLedger ledger;
};

struct Target {
  NodeId node = -1;
  double energy = 0.0;
};

class Engine {
 public:
  Engine(const SimConfig& cfg, Network net)
      : cfg_(cfg), net_(std::move(net)), detector_(cfg.isac_cfg) {}

  RunResult run();

 private:
  void push(double time, EventType type, int mcv, NodeId node, std::uint64_t token) {
    events_.push(Event{time, seq_++, type, mcv, node, token});
  }
  void log(LogKind kind, int mcv, NodeId node, long request, double value = 0.0, int flag = 0) {
    if (cfg_.record_log) log_.push_back(LogRecord{now_, kind, mcv, node, request, value, flag});
  }

  double residual(NodeId i) const {
    const auto& s = nodes_[i];
    const double e = s.ref_energy + s.net_rate * (now_ - s.ref_time);
    return std::clamp(e, 0.0, net_.node(i).capacity);
  }
  void rebase(NodeId i) {
    nodes_[i].ref_energy = residual(i);
    nodes_[i].ref_time = now_;
  }

  void schedule_node(NodeId i);
  void emit_request(NodeId i);
  void decide(Vehicle& v);
  bool pick_target(Vehicle& v, const std::vector<NodeId>& candidates, Target& out);
  void depart(Vehicle& v, Target t);
  void go_to_depot(Vehicle& v);
  void roam(Vehicle& v);
  void stop_roaming();
  void debit_travel(Vehicle& v, double dist);
  void truncate(Vehicle& v);
  void claim(Vehicle& v, NodeId i);
  void dedup_on_detection(NodeId i, int detecting_mcv);
  void start_charging(Vehicle& v);
  void close_request(NodeId i, bool served);
  void ensure_recheck();

  void on_threshold(const Event& e);
  void on_death(const Event& e);
  void on_arrival(const Event& e);
  void on_detection(const Event& e);
  void on_charge_done(const Event& e);
  void on_depot(const Event& e);
  void on_recheck(const Event& e);
  void on_waypoint(const Event& e);

  const SimConfig& cfg_;
  Network net_;
  IsacDetector detector_;
  std::priority_queue<Event, std::vector<Event>, LaterFirst> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  std::vector<NodeState> nodes_;
  std::vector<Vehicle> vehicles_;
  std::vector<RequestRecord> requests_;
  std::vector<int> claimed_by_;  // per request
  std::set<NodeId> open_nodes_;
  std::vector<LogRecord> log_;
  bool recheck_pending_ = false;
  std::uint64_t detections_ = 0;
};

void Engine::schedule_node(NodeId i) {
  rebase(i);
  auto& s = nodes_[i];
  ++s.token;
  if (s.dead || s.serving_mcv >= 0) return;
  const auto& node = net_.node(i);
  const double r = s.ref_energy;
  if (s.open_request < 0 && (r > node.request_threshold + 1e-12 || cfg_.rerequest_below_threshold)) {
    const double wait = r > node.request_threshold ? (r - node.request_threshold) / node.consumption_rate : 0.0;
    push(now_ + wait, EventType::NodeThreshold, -1, i, s.token);
  }
  push(now_ + r / node.consumption_rate, EventType::NodeDeath, -1, i, s.token);
}

void Engine::emit_request(NodeId i) {
  const long id = static_cast<long>(requests_.size());
  requests_.push_back(RequestRecord{id, i, now_, false, 0.0, 0});
  claimed_by_.push_back(-1);
  nodes_[i].open_request = id;
  open_nodes_.insert(i);
  for (auto& v : vehicles_) v.queued[i] = 1;
  log(LogKind::RequestEmitted, -1, i, id, residual(i));
  stop_roaming();
  for (auto& v : vehicles_)
    if (v.state == McvState::Idle) decide(v);
}

void Engine::close_request(NodeId i, bool served) {
  auto& s = nodes_[i];
  if (s.open_request < 0) return;
  if (served) {
    requests_[s.open_request].served = true;
    requests_[s.open_request].served_time = now_;
  }
  s.open_request = -1;
  open_nodes_.erase(i);
  for (auto& v : vehicles_) v.queued[i] = 0;
}

bool Engine::pick_target(Vehicle& v, const std::vector<NodeId>& candidates, Target& out) {
  const Point pos = v.mcv.position;
  switch (cfg_.scheduler) {
    case Scheduler::Poised: {
      for (NodeId id : candidates) {
        auto& node = net_.node(id);
        node.residual = std::min(residual(id), node.request_threshold);
      }
      v.mcv.queue = build_queue(pos, candidates, net_, cfg_.priority);
      const auto plan = make_plan(v.mcv.queue, net_, cfg_.mcv.charge_rate);
      for (const auto& item : plan.items) {
        // Deficits at rounding level count as already satisfied.
        if (item.target_energy - residual(item.node_id) > kMinTransfer) {
          out = {item.node_id, item.target_energy};
          return true;
        }
      }
      return false;
    }
    case Scheduler::Nearest: {
      double best = std::numeric_limits<double>::infinity();
      for (NodeId id : candidates) {
        const double d = euclidean_distance(pos, net_.node(id).position);
        if (d < best) {
          best = d;
          out.node = id;
        }
      }
      out.energy = net_.node(out.node).capacity;
      return true;
    }
    case Scheduler::Fcfs: {
      long oldest = std::numeric_limits<long>::max();
      for (NodeId id : candidates) {
        if (nodes_[id].open_request < oldest) {
          oldest = nodes_[id].open_request;
          out.node = id;
        }
      }
      out.energy = net_.node(out.node).capacity;
      return true;
    }
  }
  return false;
}

void Engine::decide(Vehicle& v) {
  const Point depot = net_.sink_position();
  while (v.state == McvState::Idle) {
    std::vector<NodeId> candidates;
    for (NodeId id : open_nodes_) {
      const auto& s = nodes_[id];
      if (!v.queued[id] || s.dead || s.serving_mcv >= 0) continue;
      const int owner = claimed_by_[s.open_request];
      if (owner >= 0 && owner != v.mcv.id) continue;
      if (cfg_.scheduler == Scheduler::Poised && residual(id) > net_.node(id).request_threshold + 1e-12) continue;
      candidates.push_back(id);
    }
    if (candidates.empty()) {
      if (cfg_.idle_roam) roam(v);
      return;
    }

    Target t;
    if (!pick_target(v, candidates, t)) {
      ensure_recheck();
      return;
    }

    const Point dest = net_.node(t.node).position;
    const double cost = cfg_.mcv.travel_cost;
    const double need = cost * euclidean_distance(v.mcv.position, dest) +
                        std::max(0.0, t.energy - residual(t.node)) +
                        v.mcv.min_working_threshold(dest, depot);
    if (v.mcv.battery >= need) {
      depart(v, t);
      return;
    }
    if (v.mcv.position == depot && v.mcv.battery >= cfg_.mcv.capacity) {
      v.queued[t.node] = 0;
      log(LogKind::NodeSkipped, v.mcv.id, t.node, nodes_[t.node].open_request, need);
      continue;
    }
    go_to_depot(v);
  }
}

void Engine::depart(Vehicle& v, Target t) {
  const Point dest = net_.node(t.node).position;
  v.state = McvState::Traveling;
  v.leg_from = v.mcv.position;
  v.leg_to = dest;
  v.leg_start = now_;
  v.leg_length = euclidean_distance(v.leg_from, dest);
  v.target = t.node;
  v.target_request = nodes_[t.node].open_request;
  v.target_energy = t.energy;
  ++v.token;
  const double speed = cfg_.mcv.speed;
  push(now_ + v.leg_length / speed, EventType::Arrival, v.mcv.id, t.node, v.token);
  if (cfg_.isac && claimed_by_[v.target_request] != v.mcv.id) {
    const double until = std::max(0.0, v.leg_length - net_.sensing_range());
    push(now_ + until / speed, EventType::Detection, v.mcv.id, t.node, v.token);
  }
  log(LogKind::McvDeparted, v.mcv.id, t.node, v.target_request, v.leg_length);
}

void Engine::go_to_depot(Vehicle& v) {
  v.state = McvState::Returning;
  v.leg_from = v.mcv.position;
  v.leg_to = net_.sink_position();
  v.leg_start = now_;
  v.leg_length = euclidean_distance(v.leg_from, v.leg_to);
  v.target = -1;
  v.target_request = -1;
  ++v.token;
  push(now_ + v.leg_length / cfg_.mcv.speed, EventType::DepotArrival, v.mcv.id, -1, v.token);
}

void Engine::roam(Vehicle& v) {
  const Point depot = net_.sink_position();
  const double side = net_.area_side();
  const auto unit = [](std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; };
  const std::uint64_t key = splitmix64(cfg_.topology.seed * 0x100000001b3ULL + 0x51ed27ULL * (v.mcv.id + 1) +
                                       v.waypoints++);
  const Point dest{side * unit(key), side * unit(splitmix64(key))};
  const double leg = euclidean_distance(v.mcv.position, dest);
  if (v.mcv.battery < cfg_.mcv.travel_cost * leg + v.mcv.min_working_threshold(dest, depot)) {
    if (!(v.mcv.position == depot)) go_to_depot(v);
    return;
  }
  v.state = McvState::Roaming;
  v.leg_from = v.mcv.position;
  v.leg_to = dest;
  v.leg_start = now_;
  v.leg_length = leg;
  v.target = -1;
  v.target_request = -1;
  ++v.token;
  push(now_ + leg / cfg_.mcv.speed, EventType::Waypoint, v.mcv.id, -1, v.token);
  log(LogKind::McvDeparted, v.mcv.id, -1, -1, leg);
}

// Pending work pulls roaming vehicles back into the scheduler.
void Engine::stop_roaming() {
  for (auto& v : vehicles_)
    if (v.state == McvState::Roaming) truncate(v);
}

void Engine::debit_travel(Vehicle& v, double dist) {
  const double energy = cfg_.mcv.travel_cost * dist;
  v.mcv.battery -= energy;
  v.ledger.travel_distance += dist;
  v.ledger.travel_energy += energy;
}

void Engine::truncate(Vehicle& v) {
  const double traveled = std::min(v.leg_length, (now_ - v.leg_start) * cfg_.mcv.speed);
  v.mcv.position = v.leg_length > 0.0 ? interpolate(v.leg_from, v.leg_to, traveled / v.leg_length)
                                      : v.leg_to;
  debit_travel(v, traveled);
  log(LogKind::TravelTruncated, v.mcv.id, v.target, v.target_request, traveled);
  v.state = McvState::Idle;
  v.target = -1;
  v.target_request = -1;
  ++v.token;
}

void Engine::claim(Vehicle& v, NodeId i) {
  claimed_by_[nodes_[i].open_request] = v.mcv.id;
  dedup_on_detection(i, v.mcv.id);
}

void Engine::dedup_on_detection(NodeId i, int detecting_mcv) {
  for (auto& u : vehicles_) {
    if (u.mcv.id == detecting_mcv) continue;
    u.queued[i] = 0;
  }
  for (auto& u : vehicles_) {
    if (u.mcv.id == detecting_mcv) continue;
    if (u.state == McvState::Traveling && u.target == i) {
      truncate(u);
      decide(u);
    }
  }
}

void Engine::start_charging(Vehicle& v) {
  const NodeId i = v.target;
  const auto& node = net_.node(i);
  const double target = std::min(v.target_energy, node.capacity);
  const double deficit = std::clamp(target - residual(i), 0.0, std::max(0.0, v.mcv.battery));
  v.charge_duration = deficit / cfg_.mcv.charge_rate;
  rebase(i);
  auto& s = nodes_[i];
  s.net_rate = cfg_.mcv.charge_rate - node.consumption_rate;
  s.serving_mcv = v.mcv.id;
  ++s.token;
  v.state = McvState::Charging;
  ++v.token;
  push(now_ + v.charge_duration, EventType::ChargeDone, v.mcv.id, i, v.token);
}

void Engine::ensure_recheck() {
  if (recheck_pending_) return;
  recheck_pending_ = true;
  push(now_ + cfg_.recheck_interval, EventType::Recheck, -1, -1, 0);
}

void Engine::on_threshold(const Event& e) {
  const auto& s = nodes_[e.node];
  if (e.token != s.token || s.dead || s.open_request >= 0) return;
  emit_request(e.node);
}

void Engine::on_death(const Event& e) {
  auto& s = nodes_[e.node];
  if (e.token != s.token || s.dead) return;
  s.dead = true;
  net_.mark_dead(e.node);
  log(LogKind::NodeDied, -1, e.node, s.open_request);
  close_request(e.node, false);
  for (auto& v : vehicles_) v.queued[e.node] = 0;
  for (auto& v : vehicles_) {
    if (v.state == McvState::Traveling && v.target == e.node) {
      truncate(v);
      decide(v);
    }
  }
}

void Engine::on_detection(const Event& e) {
  auto& v = vehicles_[e.mcv];
  if (e.token != v.token || v.state != McvState::Traveling || v.target != e.node) return;
  const auto& s = nodes_[e.node];
  if (s.dead || s.open_request != v.target_request) return;
  if (claimed_by_[s.open_request] >= 0) return;

  const double remaining = std::max(0.0, v.leg_length - (now_ - v.leg_start) * cfg_.mcv.speed);
  const std::uint64_t seed = splitmix64(cfg_.topology.seed * 0x100000001b3ULL + detections_++);
  DetectionResult r;
  try {
    r = detector_.detect(remaining, net_.sensing_range(), seed);
  } catch (const NoSignalError&) {
    r.detected = false;
  }
  log(LogKind::McvDetectedByNode, v.mcv.id, e.node, s.open_request, r.estimated_distance, r.detected ? 1 : 0);
  if (r.detected) {
    claim(v, e.node);
  } else if (remaining > cfg_.detection_step) {
    push(now_ + cfg_.detection_step / cfg_.mcv.speed, EventType::Detection, v.mcv.id, e.node, v.token);
  }
}

void Engine::on_arrival(const Event& e) {
  auto& v = vehicles_[e.mcv];
  if (e.token != v.token || v.state != McvState::Traveling) return;
  debit_travel(v, v.leg_length);
  v.mcv.position = v.leg_to;
  const NodeId i = v.target;
  const long q = v.target_request;
  log(LogKind::McvArrived, v.mcv.id, i, q);
  const auto& s = nodes_[i];

  if (s.dead) {
    v.state = McvState::Idle;
    decide(v);
    return;
  }
  if (cfg_.isac) {
    const bool open = s.open_request == q;
    if (open && (claimed_by_[q] < 0 || claimed_by_[q] == v.mcv.id)) {
      if (claimed_by_[q] < 0) claim(v, i);
      start_charging(v);
    } else {
      v.state = McvState::Idle;
      decide(v);
    }
    return;
  }
  // Without node-side sensing the sink cannot cancel a committed visit.
  if (s.serving_mcv >= 0) {
    ++requests_[q].services;
    ++v.ledger.charges;
    log(LogKind::ChargeCompleted, v.mcv.id, i, q, 0.0);
    v.state = McvState::Idle;
    decide(v);
    return;
  }
  start_charging(v);
}

void Engine::on_charge_done(const Event& e) {
  auto& v = vehicles_[e.mcv];
  if (e.token != v.token || v.state != McvState::Charging) return;
  const NodeId i = v.target;
  const long q = v.target_request;
  const double transferred = cfg_.mcv.charge_rate * v.charge_duration;
  v.mcv.battery -= transferred;
  v.ledger.energy_transferred += transferred;
  ++v.ledger.charges;

  rebase(i);
  auto& s = nodes_[i];
  s.net_rate = -net_.node(i).consumption_rate;
  s.serving_mcv = -1;
  ++requests_[q].services;
  log(LogKind::ChargeCompleted, v.mcv.id, i, q, transferred);
  if (s.open_request == q) close_request(i, true);
  schedule_node(i);

  v.state = McvState::Idle;
  v.target = -1;
  v.target_request = -1;
  decide(v);
}

void Engine::on_depot(const Event& e) {
  auto& v = vehicles_[e.mcv];
  if (e.token != v.token || v.state != McvState::Returning) return;
  debit_travel(v, v.leg_length);
  v.mcv.position = v.leg_to;
  const double refill = cfg_.mcv.capacity - v.mcv.battery;
  v.mcv.battery = cfg_.mcv.capacity;
  v.ledger.refill_total += refill;
  ++v.ledger.depot_visits;
  log(LogKind::DepotReturn, v.mcv.id, -1, -1, refill);
  v.state = McvState::Idle;
  decide(v);
}

void Engine::on_recheck(const Event&) {
  recheck_pending_ = false;
  log(LogKind::QueueResort, -1, -1, -1);
  stop_roaming();
  for (auto& v : vehicles_)
    if (v.state == McvState::Idle) decide(v);
}

void Engine::on_waypoint(const Event& e) {
  auto& v = vehicles_[e.mcv];
  if (e.token != v.token || v.state != McvState::Roaming) return;
  debit_travel(v, v.leg_length);
  v.mcv.position = v.leg_to;
  v.state = McvState::Idle;
  decide(v);
}

RunResult Engine::run() {
  const std::size_t n = net_.size();
  nodes_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    nodes_[i].ref_energy = net_.node(static_cast<NodeId>(i)).residual;
    nodes_[i].net_rate = -net_.node(static_cast<NodeId>(i)).consumption_rate;
  }

  const double circum = cfg_.circum_radius > 0.0 ? cfg_.circum_radius
                                                 : square_circumradius(net_.area_side());
  const auto starts = mcv_initial_positions(cfg_.mcv_count, circum, net_.sink_position());
  vehicles_.resize(cfg_.mcv_count);
  for (int j = 0; j < cfg_.mcv_count; ++j) {
    auto& v = vehicles_[j];
    v.mcv.id = j;
    v.mcv.position = starts[j];
    v.mcv.params = cfg_.mcv;
    v.mcv.battery = cfg_.mcv.capacity;
    v.queued.assign(n, 0);
    v.ledger.battery_start = v.mcv.battery;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (nodes_[i].ref_energy <= 0.0) {
      nodes_[i].dead = true;
      net_.mark_dead(static_cast<NodeId>(i));
    } else {
      schedule_node(static_cast<NodeId>(i));
    }
  }

  if (cfg_.idle_roam)
    for (auto& v : vehicles_) decide(v);

  while (!events_.empty()) {
    const Event e = events_.top();
    if (e.time > cfg_.horizon) break;
    events_.pop();
    now_ = e.time;
    switch (e.type) {
      case EventType::NodeThreshold: on_threshold(e); break;
      case EventType::NodeDeath: on_death(e); break;
      case EventType::Arrival: on_arrival(e); break;
      case EventType::Detection: on_detection(e); break;
      case EventType::ChargeDone: on_charge_done(e); break;
      case EventType::DepotArrival: on_depot(e); break;
      case EventType::Recheck: on_recheck(e); break;
      case EventType::Waypoint: on_waypoint(e); break;
    }
  }

  RunResult result;
  result.ledger.node_count = n;
  result.ledger.alive_count = net_.alive_count();
  for (auto& v : vehicles_) {
    v.ledger.battery_end = v.mcv.battery;
    result.ledger.mcvs.push_back(v.ledger);
  }
  result.ledger.requests = std::move(requests_);
  result.metrics = collect_metrics(result.ledger);
  result.log = std::move(log_);
  return result;
}

}  // namespace

RunResult run(const SimConfig& cfg, const Network& net) {
  cfg.validate();
  return Engine(cfg, net).run();
}

RunResult run(const SimConfig& cfg) {
  cfg.validate();
  return Engine(cfg, build_topology(cfg.topology)).run();
}

}  // namespace wrsn
