#include "wrsn/priority.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "wrsn/text_format.hpp"

namespace wrsn {

void PriorityParams::validate() const {
  if (residual.lambda < 2.0) throw std::invalid_argument("residual lambda must be >= 2");
  if (distance.lambda < 1.0) throw std::invalid_argument("distance lambda must be >= 1");
  if (degree.lambda < 1.0) throw std::invalid_argument("degree lambda must be >= 1");
  if (betweenness.lambda < 1.0) throw std::invalid_argument("betweenness lambda must be >= 1");
  if (distance.mu == 0.0) throw std::invalid_argument("distance mu must be non-zero");
  if (degree.gamma == 0.0) throw std::invalid_argument("degree gamma must be non-zero");
}

namespace {

// pow is correctly rounded for these exponents, so the shortcuts are exact.
double power(double x, double lambda) {
  if (lambda == 2.0) return x * x;
  if (lambda == 1.0) return x;
  return std::pow(x, lambda);
}

}  // namespace

double residual_curve(double x, const DistributionParams& p) {
  return p.alpha + p.beta * std::exp(p.gamma * power(x, p.lambda));
}

double distance_curve(double x, const DistributionParams& p) {
  return p.alpha + p.beta * std::exp((power(x, p.lambda) - p.gamma) / p.mu);
}

double degree_curve_raw(double x, const DistributionParams& p) {
  return p.alpha + p.beta * ((std::exp(p.gamma * power(x, p.lambda)) - p.mu) / p.gamma);
}

double degree_curve(double x, const DistributionParams& p) {
  return std::max(0.0, degree_curve_raw(x, p));
}

double betweenness_curve(double x, const DistributionParams& p) {
  return p.alpha + std::exp(-std::exp(-p.beta * (power(x, p.lambda) - p.gamma)));
}

double residual_priority(double residual_below_threshold, double e_th, const DistributionParams& p) {
  if (!(e_th > 0.0)) throw std::invalid_argument("residual_priority: threshold must be positive");
  if (residual_below_threshold < 0.0)
    throw std::invalid_argument("residual_priority: negative residual energy");
  if (residual_below_threshold > e_th)
    throw std::invalid_argument("residual_priority: residual above request threshold");
  return residual_curve(residual_below_threshold / e_th, p);
}

double distance_priority(double dist, double comm_range, const DistributionParams& p) {
  if (dist < 0.0) throw std::invalid_argument("distance_priority: negative distance");
  if (!(comm_range > 0.0)) throw std::invalid_argument("distance_priority: comm_range must be positive");
  return distance_curve(dist / (dist + comm_range), p);
}

double degree_priority(int degree, int max_degree, const DistributionParams& p) {
  if (max_degree < 1) throw std::invalid_argument("degree_priority: max_degree must be >= 1");
  if (degree < 0 || degree > max_degree)
    throw std::invalid_argument("degree_priority: degree outside [0, max_degree]");
  return degree_curve(static_cast<double>(degree) / max_degree, p);
}

double betweenness_priority(double b, double min_b, double max_b, const DistributionParams& p) {
  if (min_b > max_b || b < min_b || b > max_b)
    throw std::invalid_argument("betweenness_priority: value outside [min, max]");
  const double span = max_b - min_b;
  const double normalized = span > 0.0 ? (b - min_b) / span : 0.0;
  return betweenness_curve(normalized, p);
}

double queue_metric(double residual, double distance, double degree, double betweenness) {
  return (residual + distance + degree + betweenness) / 4.0;
}

bool queue_order(const QueueEntry& a, const QueueEntry& b) {
  if (a.metric != b.metric) return a.metric > b.metric;
  return a.node_id < b.node_id;
}

void sort_queue(std::vector<QueueEntry>& queue) { std::sort(queue.begin(), queue.end(), queue_order); }

std::vector<QueueEntry> build_queue(Point mcv_position, std::span<const NodeId> pending,
                                    const Network& net, const PriorityParams& params) {
  std::vector<QueueEntry> queue;
  if (pending.empty()) return queue;

  double min_b = net.betweenness(pending.front());
  double max_b = min_b;
  for (NodeId id : pending) {
    if (!net.alive(id)) throw std::invalid_argument("build_queue: node " + std::to_string(id) + " is dead");
    min_b = std::min(min_b, net.betweenness(id));
    max_b = std::max(max_b, net.betweenness(id));
  }
  const int max_degree = net.max_degree();

  queue.reserve(pending.size());
  for (NodeId id : pending) {
    const auto& node = net.node(id);
    QueueEntry e;
    e.node_id = id;
    e.residual_priority = residual_priority(node.residual, node.request_threshold, params.residual);
    e.distance_priority = distance_priority(euclidean_distance(mcv_position, node.position),
                                            net.comm_range(), params.distance);
    e.degree_priority = max_degree > 0 ? degree_priority(net.degree(id), max_degree, params.degree)
                                       : degree_curve(0.0, params.degree);
    e.betweenness_priority = betweenness_priority(net.betweenness(id), min_b, max_b, params.betweenness);
    e.metric = queue_metric(e.residual_priority, e.distance_priority, e.degree_priority,
                            e.betweenness_priority);
    queue.push_back(e);
  }
  sort_queue(queue);
  return queue;
}

void write_queue(std::ostream& out, std::span<const QueueEntry> queue) {
  for (const auto& e : queue) {
    out << e.node_id << ' ' << format_double(e.residual_priority) << ' '
        << format_double(e.distance_priority) << ' ' << format_double(e.degree_priority) << ' '
        << format_double(e.betweenness_priority) << ' ' << format_double(e.metric) << '\n';
  }
}

}  // namespace wrsn
