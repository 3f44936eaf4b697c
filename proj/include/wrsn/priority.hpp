#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "wrsn/geometry.hpp"
#include "wrsn/network.hpp"

namespace wrsn {

/// Constants of one fitted priority curve. `mu` is unused by the curves
/// that have no such term.
struct DistributionParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double lambda = 1.0;
};

/// The four curve fits used to rank charging requests, frozen at their
/// published values.
struct PriorityParams {
  DistributionParams residual{4.1997, -3.16759, 0.27897, 0.0, 2.0};
  DistributionParams distance{1.83283, -0.69354, -0.24143, 1.28078, 1.0};
  DistributionParams degree{0.02098, 1.29332, -0.4591, 0.978, 1.0};
  DistributionParams betweenness{1.343494, 2.88956, 0.57881, 0.0, 1.0};

  /// Throws std::invalid_argument unless lambda_residual >= 2 and the other
  /// exponents are >= 1.
  void validate() const;
};

// Curves over a normalized input in [0, 1].
double residual_curve(double normalized, const DistributionParams& p = PriorityParams{}.residual);
double distance_curve(double normalized, const DistributionParams& p = PriorityParams{}.distance);
/// Unclamped degree curve; slightly negative near 0 with the default fit.
double degree_curve_raw(double normalized, const DistributionParams& p = PriorityParams{}.degree);
/// Degree curve clamped below at 0.
double degree_curve(double normalized, const DistributionParams& p = PriorityParams{}.degree);
double betweenness_curve(double normalized,
                         const DistributionParams& p = PriorityParams{}.betweenness);

/// Lower residual energy (relative to the request threshold) ranks higher.
double residual_priority(double residual_below_threshold, double e_th,
                         const DistributionParams& p = PriorityParams{}.residual);
/// Closer nodes rank higher; the distance is softened by the communication range.
double distance_priority(double dist, double comm_range,
                         const DistributionParams& p = PriorityParams{}.distance);
/// Better connected nodes rank higher. Requires max_degree >= 1.
double degree_priority(int degree, int max_degree,
                       const DistributionParams& p = PriorityParams{}.degree);
/// Min-max normalized betweenness; a degenerate range maps to 0.
double betweenness_priority(double b, double min_b, double max_b,
                            const DistributionParams& p = PriorityParams{}.betweenness);

double queue_metric(double residual, double distance, double degree, double betweenness);

struct QueueEntry {
  NodeId node_id = 0;
  double residual_priority = 0.0;
  double distance_priority = 0.0;
  double degree_priority = 0.0;
  double betweenness_priority = 0.0;
  double metric = 0.0;
};

/// Orders by metric descending, ties by ascending node id.
bool queue_order(const QueueEntry& a, const QueueEntry& b);
void sort_queue(std::vector<QueueEntry>& queue);

/// Ranks the pending requests for a charger at `mcv_position`.
///
/// Every pending node must be alive with residual at or below its request
/// threshold. Betweenness is min-max normalized over the pending set, degree
/// over the alive network.
std::vector<QueueEntry> build_queue(Point mcv_position, std::span<const NodeId> pending,
                                    const Network& net, const PriorityParams& params = {});

/// Debug dump, one `node_id residual distance degree betweenness metric` line per entry.
void write_queue(std::ostream& out, std::span<const QueueEntry> queue);

}  // namespace wrsn
