#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "wrsn/geometry.hpp"

namespace wrsn {

using NodeId = int;

struct SensorNode {
  NodeId id = 0;
  Point position;
  double capacity = 0.5;           // J
  double residual = 0.5;           // J
  double consumption_rate = 1e-4;  // J/s
  double request_threshold = 0.15; // J, E_th
};

/// Parameters for a randomly deployed network on a square area.
struct TopologyConfig {
  std::uint64_t seed = 1;
  int node_count = 100;
  double area_side = 200.0;
  double comm_range = 50.0;
  double sensing_range = 25.0;
  double capacity = 0.5;
  double threshold_fraction = 0.30;
  double min_consumption = 5e-5;
  double max_consumption = 2e-4;
};

/// Undirected adjacency lists; vertex `size()-1`-style conventions are left
/// to the caller.
using AdjacencyList = std::vector<std::vector<int>>;

/// Betweenness of every vertex with respect to a single destination:
/// result[i] = sum over sources s != i, s != target of sigma_st(i) / sigma_st,
/// unit edge weights, disconnected sources contribute 0.
std::vector<double> single_target_betweenness(const AdjacencyList& adjacency, int target);

/// Static sensor field with a central sink.
///
/// The communication graph has one vertex per sensor plus one for the sink
/// (vertex index `size()`). Two vertices are linked iff their distance is at
/// most the communication range. Dead sensors are removed from the graph and
/// the centrality caches are recomputed.
class Network {
 public:
  Network(std::vector<SensorNode> nodes, Point sink_position, double comm_range,
          double sensing_range, double area_side, std::uint64_t seed = 0);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<SensorNode>& nodes() const { return nodes_; }
  const SensorNode& node(NodeId id) const;
  SensorNode& node(NodeId id);

  Point sink_position() const { return sink_; }
  double comm_range() const { return comm_range_; }
  double sensing_range() const { return sensing_range_; }
  double area_side() const { return area_side_; }
  std::uint64_t seed() const { return seed_; }

  /// Vertex index of the sink in `adjacency()`.
  int sink_vertex() const { return static_cast<int>(nodes_.size()); }
  const AdjacencyList& adjacency() const { return adjacency_; }
  bool adjacent(NodeId a, NodeId b) const;

  /// Number of alive sensor neighbors (the sink is not counted).
  int degree(NodeId id) const;
  double betweenness(NodeId id) const;
  /// Largest degree over alive sensors; 0 for an all-isolated field.
  int max_degree() const;

  bool alive(NodeId id) const;
  std::size_t alive_count() const;
  /// Removes a sensor from the graph. Idempotent.
  void mark_dead(NodeId id);

 private:
  void check_id(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw_unknown(id);
  }
  [[noreturn]] static void throw_unknown(NodeId id);
  void rebuild();

  std::vector<SensorNode> nodes_;
  std::vector<bool> alive_;
  Point sink_;
  double comm_range_;
  double sensing_range_;
  double area_side_;
  std::uint64_t seed_;
  AdjacencyList adjacency_;
  std::vector<int> degree_;
  std::vector<double> betweenness_;
};

Network build_topology(const TopologyConfig& cfg);

int node_degree(const Network& net, NodeId id);
double betweenness(const Network& net, NodeId id);

/// MCV starting points on a circle of radius circum_radius/2 about the
/// origin, at angles pi/m * (2j - 1), j = 1..m.
std::vector<Point> mcv_initial_positions(int mcv_count, double circum_radius);
/// Same points translated to absolute coordinates around `center`.
std::vector<Point> mcv_initial_positions(int mcv_count, double circum_radius, Point center);
/// Circumradius of a square whose side is `area_side`.
double square_circumradius(double area_side);

/// Line format: header `# wrsn-topology key=value...`, then one
/// `id x y capacity residual rate` line per node.
void write_topology(std::ostream& out, const Network& net);
Network read_topology(std::istream& in);

}  // namespace wrsn
