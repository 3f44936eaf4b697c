#include "wrsn/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wrsn/text_format.hpp"

namespace wrsn {

std::vector<double> single_target_betweenness(const AdjacencyList& adjacency, int target) {
  const int n = static_cast<int>(adjacency.size());
  if (target < 0 || target >= n) throw std::out_of_range("betweenness target out of range");

  // Brandes accumulation from the target. In an undirected graph the shortest
  // paths s->target are the reversed shortest paths target->s, so the
  // single-source dependency of the target is exactly the sum over sources.
  std::vector<int> dist(n, -1);
  std::vector<double> sigma(n, 0.0);
  std::vector<int> order;
  order.reserve(n);
  std::queue<int> frontier;
  dist[target] = 0;
  sigma[target] = 1.0;
  frontier.push(target);
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    order.push_back(v);
    for (int w : adjacency[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        frontier.push(w);
      }
      if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
    }
  }

  std::vector<double> delta(n, 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int w = *it;
    for (int v : adjacency[w]) {
      if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
    }
  }
  delta[target] = 0.0;
  return delta;
}

Network::Network(std::vector<SensorNode> nodes, Point sink_position, double comm_range,
                 double sensing_range, double area_side, std::uint64_t seed)
    : nodes_(std::move(nodes)),
      alive_(nodes_.size(), true),
      sink_(sink_position),
      comm_range_(comm_range),
      sensing_range_(sensing_range),
      area_side_(area_side),
      seed_(seed) {
  if (!(comm_range_ > 0.0)) throw std::invalid_argument("comm_range must be positive");
  if (!(sensing_range_ > 0.0)) throw std::invalid_argument("sensing_range must be positive");
  if (!(area_side_ > 0.0)) throw std::invalid_argument("area_side must be positive");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id != static_cast<NodeId>(i))
      throw std::invalid_argument("node ids must be 0..n-1 in order");
    if (!(n.capacity > 0.0)) throw std::invalid_argument("node capacity must be positive");
    if (n.residual < 0.0 || n.residual > n.capacity)
      throw std::invalid_argument("node residual outside [0, capacity]");
    if (!(n.consumption_rate > 0.0))
      throw std::invalid_argument("node consumption rate must be positive");
    if (n.request_threshold < 0.0 || n.request_threshold > n.capacity)
      throw std::invalid_argument("node request threshold outside [0, capacity]");
  }
  rebuild();
}

void Network::throw_unknown(NodeId id) { throw std::out_of_range("unknown node id " + std::to_string(id)); }

const SensorNode& Network::node(NodeId id) const {
  check_id(id);
  return nodes_[id];
}

SensorNode& Network::node(NodeId id) {
  check_id(id);
  return nodes_[id];
}

bool Network::adjacent(NodeId a, NodeId b) const {
  check_id(a);
  check_id(b);
  const auto& nb = adjacency_[a];
  return std::find(nb.begin(), nb.end(), b) != nb.end();
}

int Network::degree(NodeId id) const {
  check_id(id);
  return degree_[id];
}

double Network::betweenness(NodeId id) const {
  check_id(id);
  return betweenness_[id];
}

int Network::max_degree() const {
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (alive_[i]) best = std::max(best, degree_[i]);
  return best;
}

bool Network::alive(NodeId id) const {
  check_id(id);
  return alive_[id];
}

std::size_t Network::alive_count() const {
  return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), true));
}

void Network::mark_dead(NodeId id) {
  check_id(id);
  if (!alive_[id]) return;
  alive_[id] = false;
  rebuild();
}

void Network::rebuild() {
  const int n = static_cast<int>(nodes_.size());
  adjacency_.assign(n + 1, {});
  for (int a = 0; a < n; ++a) {
    if (!alive_[a]) continue;
    for (int b = a + 1; b < n; ++b) {
      if (!alive_[b]) continue;
      if (euclidean_distance(nodes_[a].position, nodes_[b].position) <= comm_range_) {
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
      }
    }
    if (euclidean_distance(nodes_[a].position, sink_) <= comm_range_) {
      adjacency_[a].push_back(n);
      adjacency_[n].push_back(a);
    }
  }

  degree_.assign(n, 0);
  for (int a = 0; a < n; ++a) {
    const auto& nb = adjacency_[a];
    degree_[a] = static_cast<int>(std::count_if(nb.begin(), nb.end(), [n](int v) { return v != n; }));
  }
  betweenness_ = single_target_betweenness(adjacency_, n);
  betweenness_.pop_back();
}

Network build_topology(const TopologyConfig& cfg) {
  if (cfg.node_count < 1) throw std::invalid_argument("node_count must be at least 1");
  if (!(cfg.area_side > 0.0)) throw std::invalid_argument("area_side must be positive");
  if (!(cfg.comm_range > 0.0)) throw std::invalid_argument("comm_range must be positive");
  if (!(cfg.capacity > 0.0)) throw std::invalid_argument("capacity must be positive");
  if (cfg.threshold_fraction < 0.0 || cfg.threshold_fraction > 1.0)
    throw std::invalid_argument("threshold_fraction must lie in [0, 1]");
  if (!(cfg.min_consumption > 0.0) || cfg.max_consumption < cfg.min_consumption)
    throw std::invalid_argument("consumption range must be positive and ordered");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coord(0.0, cfg.area_side);
  std::uniform_real_distribution<double> rate(cfg.min_consumption, cfg.max_consumption);

  std::vector<SensorNode> nodes;
  nodes.reserve(cfg.node_count);
  for (int i = 0; i < cfg.node_count; ++i) {
    SensorNode n;
    n.id = i;
    n.position.x = coord(rng);
    n.position.y = coord(rng);
    n.capacity = cfg.capacity;
    n.residual = cfg.capacity;
    n.consumption_rate = rate(rng);
    n.request_threshold = cfg.threshold_fraction * cfg.capacity;
    nodes.push_back(n);
  }
  const Point sink{cfg.area_side / 2.0, cfg.area_side / 2.0};
  return Network(std::move(nodes), sink, cfg.comm_range, cfg.sensing_range, cfg.area_side,
                 cfg.seed);
}

int node_degree(const Network& net, NodeId id) { return net.degree(id); }

double betweenness(const Network& net, NodeId id) { return net.betweenness(id); }

std::vector<Point> mcv_initial_positions(int mcv_count, double circum_radius) {
  if (mcv_count < 1) throw std::invalid_argument("at least one MCV required");
  if (!(circum_radius > 0.0)) throw std::invalid_argument("circum_radius must be positive");
  std::vector<Point> out;
  out.reserve(mcv_count);
  const double r = circum_radius / 2.0;
  for (int j = 1; j <= mcv_count; ++j) {
    const double angle = std::numbers::pi / mcv_count * (2.0 * j - 1.0);
    out.push_back({r * std::cos(angle), r * std::sin(angle)});
  }
  return out;
}

std::vector<Point> mcv_initial_positions(int mcv_count, double circum_radius, Point center) {
  auto pts = mcv_initial_positions(mcv_count, circum_radius);
  for (auto& p : pts) p = p + center;
  return pts;
}

double square_circumradius(double area_side) { return area_side / std::numbers::sqrt2; }

void write_topology(std::ostream& out, const Network& net) {
  const double fraction =
      net.size() > 0 ? net.node(0).request_threshold / net.node(0).capacity : 0.30;
  out << "# wrsn-topology"
      << " area_side=" << format_double(net.area_side())
      << " comm_range=" << format_double(net.comm_range())
      << " sensing_range=" << format_double(net.sensing_range())
      << " seed=" << net.seed()
      << " sink_x=" << format_double(net.sink_position().x)
      << " sink_y=" << format_double(net.sink_position().y)
      << " threshold_fraction=" << format_double(fraction) << '\n';
  for (const auto& n : net.nodes()) {
    out << n.id << ' ' << format_double(n.position.x) << ' ' << format_double(n.position.y) << ' '
        << format_double(n.capacity) << ' ' << format_double(n.residual) << ' '
        << format_double(n.consumption_rate) << '\n';
  }
}

Network read_topology(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("topology: missing header");
  std::istringstream header(line);
  std::string hash, tag;
  header >> hash >> tag;
  if (hash != "#" || tag != "wrsn-topology") throw std::invalid_argument("topology: bad header");

  std::map<std::string, std::string> kv;
  std::string item;
  while (header >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("topology: bad header field " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  const auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("topology: header lacks ") + key);
    return it->second;
  };
  const double side = parse_double(need("area_side"));
  const double rc = parse_double(need("comm_range"));
  const double rs = parse_double(need("sensing_range"));
  const auto seed = static_cast<std::uint64_t>(parse_integer(need("seed")));
  const Point sink{parse_double(need("sink_x")), parse_double(need("sink_y"))};
  const double fraction = kv.count("threshold_fraction") ? parse_double(kv["threshold_fraction"]) : 0.30;

  std::vector<SensorNode> nodes;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::string f[6];
    for (auto& s : f) {
      if (!(row >> s))
        throw std::invalid_argument("topology: line " + std::to_string(lineno) + " needs 6 fields");
    }
    SensorNode n;
    n.id = static_cast<NodeId>(parse_integer(f[0]));
    n.position = {parse_double(f[1]), parse_double(f[2])};
    n.capacity = parse_double(f[3]);
    n.residual = parse_double(f[4]);
    n.consumption_rate = parse_double(f[5]);
    n.request_threshold = fraction * n.capacity;
    nodes.push_back(n);
  }
  return Network(std::move(nodes), sink, rc, rs, side, seed);
}

}  // namespace wrsn
