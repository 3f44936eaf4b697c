#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "wrsn/priority.hpp"

using namespace wrsn;

namespace {

constexpr double kTight = 1e-12;

Network two_node_net(Point a, Point b, double residual_a, double residual_b) {
  std::vector<SensorNode> nodes(2);
  nodes[0].id = 0;
  nodes[0].position = a;
  nodes[0].residual = residual_a;
  nodes[1].id = 1;
  nodes[1].position = b;
  nodes[1].residual = residual_b;
  return Network(std::move(nodes), {500, 500}, 50.0, 25.0, 1000.0);
}

}  // namespace

TEST_CASE("curves at grid points match high precision values") {
  CHECK(residual_curve(0.0) == doctest::Approx(oracle::kResidual0).epsilon(kTight));
  CHECK(residual_curve(0.2) == doctest::Approx(oracle::kResidual02).epsilon(kTight));
  CHECK(residual_curve(0.5) == doctest::Approx(oracle::kResidual05).epsilon(kTight));
  CHECK(residual_curve(0.8) == doctest::Approx(oracle::kResidual08).epsilon(kTight));
  CHECK(residual_curve(1.0) == doctest::Approx(oracle::kResidual1).epsilon(kTight));

  CHECK(distance_curve(0.0) == doctest::Approx(oracle::kDistance0).epsilon(kTight));
  CHECK(distance_curve(0.2) == doctest::Approx(oracle::kDistance02).epsilon(kTight));
  CHECK(distance_curve(0.5) == doctest::Approx(oracle::kDistance05).epsilon(kTight));
  CHECK(distance_curve(0.8) == doctest::Approx(oracle::kDistance08).epsilon(kTight));
  CHECK(distance_curve(1.0) == doctest::Approx(oracle::kDistance1).epsilon(kTight));

  CHECK(degree_curve_raw(0.0) == doctest::Approx(oracle::kDegreeRaw0).epsilon(kTight));
  CHECK(degree_curve(0.2) == doctest::Approx(oracle::kDegree02).epsilon(kTight));
  CHECK(degree_curve(0.5) == doctest::Approx(oracle::kDegree05).epsilon(kTight));
  CHECK(degree_curve(0.8) == doctest::Approx(oracle::kDegree08).epsilon(kTight));
  CHECK(degree_curve(1.0) == doctest::Approx(oracle::kDegree1).epsilon(kTight));

  CHECK(betweenness_curve(0.0) == doctest::Approx(oracle::kBetweenness0).epsilon(kTight));
  CHECK(betweenness_curve(0.2) == doctest::Approx(oracle::kBetweenness02).epsilon(kTight));
  CHECK(betweenness_curve(0.5) == doctest::Approx(oracle::kBetweenness05).epsilon(kTight));
  CHECK(betweenness_curve(0.8) == doctest::Approx(oracle::kBetweenness08).epsilon(kTight));
  CHECK(betweenness_curve(1.0) == doctest::Approx(oracle::kBetweenness1).epsilon(kTight));
}

TEST_CASE("residual priority normalizes by the threshold") {
  CHECK(residual_priority(0.15, 0.15) == doctest::Approx(oracle::kResidual1).epsilon(kTight));
  CHECK(residual_priority(0.0, 0.15) == doctest::Approx(1.03211).epsilon(kTight));
  CHECK(residual_priority(0.075, 0.15) == doctest::Approx(oracle::kResidual05).epsilon(kTight));
  CHECK_THROWS_AS(residual_priority(-0.01, 0.15), std::invalid_argument);
  CHECK_THROWS_AS(residual_priority(0.16, 0.15), std::invalid_argument);
  CHECK_THROWS_AS(residual_priority(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("distance priority softens by the communication range") {
  CHECK(distance_priority(0.0, 50.0) == doctest::Approx(oracle::kDistance0).epsilon(kTight));
  CHECK(distance_priority(50.0, 50.0) == doctest::Approx(oracle::kDistance05).epsilon(kTight));
  CHECK(distance_priority(1e12, 50.0) == doctest::Approx(oracle::kDistance1).epsilon(1e-9));
  CHECK_THROWS_AS(distance_priority(-1.0, 50.0), std::invalid_argument);
}

TEST_CASE("degree priority") {
  CHECK(degree_priority(7, 7) == doctest::Approx(oracle::kDegree1).epsilon(kTight));
  CHECK(degree_priority(0, 7) == 0.0);
  CHECK(degree_priority(3, 6) == doctest::Approx(oracle::kDegree05).epsilon(kTight));
  CHECK_THROWS_AS(degree_priority(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(degree_priority(8, 7), std::invalid_argument);
}

TEST_CASE("betweenness priority") {
  CHECK(betweenness_priority(2.0, 2.0, 10.0) == doctest::Approx(oracle::kBetweenness0).epsilon(kTight));
  CHECK(betweenness_priority(10.0, 2.0, 10.0) == doctest::Approx(oracle::kBetweenness1).epsilon(kTight));
  CHECK(betweenness_priority(6.0, 2.0, 10.0) == doctest::Approx(oracle::kBetweenness05).epsilon(kTight));
  CHECK(betweenness_priority(4.0, 4.0, 4.0) == doctest::Approx(oracle::kBetweenness0).epsilon(kTight));
  CHECK_THROWS_AS(betweenness_priority(11.0, 2.0, 10.0), std::invalid_argument);
}

TEST_CASE("monotone over a 1000 point grid") {
  int violations = 0;
  for (int k = 1; k < 1000; ++k) {
    const double a = (k - 1) / 999.0;
    const double b = k / 999.0;
    if (!(residual_curve(b) < residual_curve(a))) ++violations;
    if (!(distance_curve(b) < distance_curve(a))) ++violations;
    if (!(degree_curve_raw(b) > degree_curve_raw(a))) ++violations;
    if (!(betweenness_curve(b) > betweenness_curve(a))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("range envelopes") {
  for (int k = 0; k < 1000; ++k) {
    const double x = k / 999.0;
    CHECK(residual_curve(x) >= 0.0127 - 1e-3);
    CHECK(residual_curve(x) <= 1.0321 + 1e-3);
    CHECK(distance_curve(x) >= 0.0047 - 1e-3);
    CHECK(distance_curve(x) <= 0.9953 + 1e-3);
    CHECK(degree_curve_raw(x) >= -0.0410 - 1e-3);
    CHECK(degree_curve_raw(x) <= 0.9961 + 1e-3);
    CHECK(degree_curve(x) >= 0.0);
    CHECK(betweenness_curve(x) >= 1.3484 - 1e-3);
    CHECK(betweenness_curve(x) <= 2.0872 + 1e-3);
  }
}

TEST_CASE("queue metric is the mean") {
  CHECK(queue_metric(1, 1, 1, 1) == 1.0);
  CHECK(queue_metric(0.8, 0.6, 0.4, 2.0) == doctest::Approx(0.95).epsilon(kTight));
  CHECK(queue_metric(2.0, 0.4, 0.8, 0.6) == doctest::Approx(queue_metric(0.8, 0.6, 0.4, 2.0)).epsilon(kTight));
}

TEST_CASE("queue sorting") {
  std::vector<QueueEntry> q(4);
  const double metrics[] = {0.5, 0.9, 0.5, 0.1};
  for (int i = 0; i < 4; ++i) {
    q[i].node_id = 3 - i;
    q[i].metric = metrics[i];
  }
  sort_queue(q);
  CHECK(q[0].node_id == 2);
  CHECK(q[1].node_id == 1);  // tie at 0.5 goes to the smaller id
  CHECK(q[2].node_id == 3);
  CHECK(q[3].node_id == 0);

  SUBCASE("scaling all priorities keeps the order") {
    auto scaled = q;
    for (auto& e : scaled) {
      e.residual_priority = 3.0 * e.metric;
      e.distance_priority = e.degree_priority = e.betweenness_priority = 3.0 * e.metric;
      e.metric = queue_metric(e.residual_priority, e.distance_priority, e.degree_priority,
                              e.betweenness_priority);
    }
    sort_queue(scaled);
    for (int i = 0; i < 4; ++i) CHECK(scaled[i].node_id == q[i].node_id);
  }
}

TEST_CASE("build queue ranks the more depleted node first") {
  // Both nodes 30 m from the charger, same degree and betweenness.
  const auto net = two_node_net({100, 130}, {100, 70}, 0.2 * 0.15, 0.8 * 0.15);
  const std::vector<NodeId> pending{0, 1};
  const auto q = build_queue({100, 100}, pending, net);
  REQUIRE(q.size() == 2);
  CHECK(q[0].node_id == 0);
  CHECK(q[0].metric > q[1].metric);
  CHECK(q[0].residual_priority == doctest::Approx(oracle::kResidual02).epsilon(kTight));
  for (const auto& e : q)
    CHECK(e.metric == doctest::Approx(queue_metric(e.residual_priority, e.distance_priority, e.degree_priority,
                                                   e.betweenness_priority))
                           .epsilon(kTight));
}

TEST_CASE("mirror chargers each see their nearer node first") {
  const auto net = two_node_net({0, 0}, {200, 0}, 0.1, 0.1);
  const std::vector<NodeId> pending{0, 1};
  CHECK(build_queue({20, 0}, pending, net)[0].node_id == 0);
  CHECK(build_queue({180, 0}, pending, net)[0].node_id == 1);
}

TEST_CASE("build queue edge cases") {
  const auto net = two_node_net({0, 0}, {200, 0}, 0.1, 0.4);
  CHECK(build_queue({0, 0}, std::vector<NodeId>{}, net).empty());
  const std::vector<NodeId> one{0};
  const auto q = build_queue({0, 0}, one, net);
  REQUIRE(q.size() == 1);
  // Isolated network: degree term falls back to a normalized degree of 0.
  CHECK(q[0].degree_priority == 0.0);
  const std::vector<NodeId> above{1};
  CHECK_THROWS_AS(build_queue({0, 0}, above, net), std::invalid_argument);
}

TEST_CASE("queue building is pure") {
  TopologyConfig cfg;
  cfg.node_count = 80;
  auto net = build_topology(cfg);
  std::vector<NodeId> pending;
  for (NodeId i = 0; i < 80; i += 3) {
    net.node(i).residual = 0.001 * i;
    pending.push_back(i);
  }
  const auto a = build_queue({50, 50}, pending, net);
  const auto b = build_queue({50, 50}, pending, net);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].node_id == b[k].node_id);
    CHECK(a[k].metric == b[k].metric);
  }
  for (std::size_t k = 1; k < a.size(); ++k) CHECK(queue_order(a[k - 1], a[k]));
  std::ostringstream dump;
  write_queue(dump, a);
  const std::string text = dump.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(a.size()));
}

TEST_CASE("parameter validation") {
  PriorityParams p;
  CHECK_NOTHROW(p.validate());
  p.residual.lambda = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
