#pragma once

#include <span>
#include <vector>

#include "wrsn/network.hpp"
#include "wrsn/priority.hpp"

namespace wrsn {

struct ChargePlanItem {
  NodeId node_id = 0;
  int charging_factor_pct = 0;     // target as a percentage of full capacity
  double target_energy = 0.0;      // J, never below the residual at planning time
  double estimated_duration = 0.0; // s
};

struct ChargePlan {
  double weighted_factor = 0.0;
  std::vector<ChargePlanItem> items;  // queue order
};

/// Spread of residual priorities across the queue, (max - min) / max. A
/// single-entry queue yields that entry's residual priority; an all-zero
/// queue yields 0. Throws on an empty queue.
double weighted_factor(std::span<const QueueEntry> queue);

/// Integer percent target: ceil((sqrt(p^2 * p_wf) - 0.1 p) * 100), clamped to [0, 100].
int charging_factor(double residual_priority, double p_wf);

/// Partial-charge targets for each queued node, evaluated against the
/// residuals currently stored in `net`. The weighted factor is capped at 1.
ChargePlan make_plan(std::span<const QueueEntry> queue, const Network& net, double charge_rate);

}  // namespace wrsn
