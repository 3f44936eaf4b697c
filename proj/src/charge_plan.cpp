#include "wrsn/charge_plan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrsn {

namespace {
// Absorbs rounding in products that are integral in exact arithmetic,
// e.g. 0.9 * (2/3 - 0.1) * 100 = 51.
constexpr double kCeilSlack = 1e-9;
constexpr double kControlFraction = 0.10;
}  // namespace

double weighted_factor(std::span<const QueueEntry> queue) {
  if (queue.empty()) throw std::invalid_argument("weighted_factor: empty queue");
  if (queue.size() == 1) return queue.front().residual_priority;
  const auto [lo, hi] = std::minmax_element(
      queue.begin(), queue.end(),
      [](const QueueEntry& a, const QueueEntry& b) { return a.residual_priority < b.residual_priority; });
  const double c_max = hi->residual_priority;
  const double c_min = lo->residual_priority;
  if (c_max == 0.0) return 0.0;
  return (c_max - c_min) / c_max;
}

int charging_factor(double residual_priority, double p_wf) {
  if (residual_priority < 0.0) throw std::invalid_argument("charging_factor: negative residual priority");
  if (p_wf < 0.0 || p_wf > 1.0) throw std::invalid_argument("charging_factor: weighted factor outside [0, 1]");
  const double control = kControlFraction * residual_priority;
  const double raw = (std::sqrt(residual_priority * residual_priority * p_wf) - control) * 100.0;
  const double pct = std::ceil(raw - kCeilSlack);
  return static_cast<int>(std::clamp(pct, 0.0, 100.0));
}

ChargePlan make_plan(std::span<const QueueEntry> queue, const Network& net, double charge_rate) {
  if (!(charge_rate > 0.0)) throw std::invalid_argument("make_plan: charge rate must be positive");
  ChargePlan plan;
  if (queue.empty()) return plan;
  plan.weighted_factor = std::min(1.0, weighted_factor(queue));
  plan.items.reserve(queue.size());
  for (const auto& entry : queue) {
    const auto& node = net.node(entry.node_id);
    ChargePlanItem item;
    item.node_id = entry.node_id;
    item.charging_factor_pct = charging_factor(entry.residual_priority, plan.weighted_factor);
    const double target = item.charging_factor_pct / 100.0 * node.capacity;
    item.target_energy = std::max(node.residual, std::min(target, node.capacity));
    item.estimated_duration = (item.target_energy - node.residual) / charge_rate;
    plan.items.push_back(item);
  }
  return plan;
}

}  // namespace wrsn
