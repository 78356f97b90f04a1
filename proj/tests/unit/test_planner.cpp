#include <doctest.h>

#include <cmath>

#include "covert/error.hpp"
#include "covert/planner.hpp"

using namespace covert;

namespace {

PlanRequest cqtustc() {
  PlanRequest req;
  req.b = 35;
  req.epsilon = CovertnessBudget(0.014);
  req.target_error = 0.01;
  req.channel = ChannelModel(0.18, ThermalMean(2.30e-3), ThermalMean(3.18e-3));
  req.rep_rate_hz = 500e6;
  return req;
}

}  // namespace

TEST_CASE("mu grid") {
  MuGrid g;
  const auto v = g.values();
  CHECK(v.size() == 400);
  CHECK(v.front() == 1e-4);
  CHECK(v.back() == 1.0);
  CHECK(std::is_sorted(v.begin(), v.end()));
  CHECK(MuGrid{0.1, 0.1, 1, false}.values() == std::vector<double>{0.1});
  CHECK_THROWS_AS((MuGrid{0.0, 1.0, 10, true}.values()), std::invalid_argument);
}

TEST_CASE("plan meets both targets and passes validation") {
  const PlanRequest req = cqtustc();
  const PlanResult r = plan(req, 1);
  const ProtocolParams& p = r.params;
  CHECK(p.d == p.k * p.b);
  CHECK(p.predicted_epsilon <= 0.014);
  CHECK(p.predicted_error <= 0.01);
  CHECK(p.running_time_s == static_cast<double>(p.bins_total()) / 500e6);
  CHECK(validate_plan(p, req).passed());

  // No grid point does better.
  for (const auto& ev : r.grid) {
    if (ev.params) CHECK(ev.params->n_pairs >= p.n_pairs);
  }
}

TEST_CASE("plan is independent of the thread count") {
  PlanRequest req = cqtustc();
  req.mu_grid.points = 60;
  const auto a = plan(req, 1).params;
  const auto b = plan(req, 3).params;
  CHECK(a.n_pairs == b.n_pairs);
  CHECK(a.mu == b.mu);
  CHECK(a.k == b.k);
}

TEST_CASE("validation catches tampering") {
  const PlanRequest req = cqtustc();
  ProtocolParams p = plan(req).params;
  p.n_pairs /= 2;
  const auto report = validate_plan(p, req);
  CHECK_FALSE(report.passed());
  p = plan(req).params;
  p.k -= 1;
  CHECK_FALSE(validate_plan(p, req).passed());
}

TEST_CASE("infeasible requests name the binding constraint") {
  PlanRequest req = cqtustc();
  req.channel = ChannelModel(0.18, ThermalMean(2.3e-3), ThermalMean(5.0));
  req.mu_grid = MuGrid{1e-4, 1e-3, 5, false};
  try {
    (void)plan(req);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("repetition count") != std::string::npos);
  }
}

TEST_CASE("noise sweep: more noise at Alice allows fewer pairs") {
  PlanRequest req = cqtustc();
  req.mu_grid.points = 40;
  const std::vector<NoiseLevel> levels = {{1e-3, 3.18e-3}, {1e-2, 3.18e-3}};
  const auto sweep = sweep_noise(req, levels);
  REQUIRE(sweep[0].params);
  REQUIRE(sweep[1].params);
  CHECK(sweep[1].params->n_pairs < sweep[0].params->n_pairs);
}

TEST_CASE("request validation") {
  PlanRequest req = cqtustc();
  req.b = 0;
  CHECK_THROWS_AS(plan(req), std::invalid_argument);
  req = cqtustc();
  req.target_error = 1.0;
  CHECK_THROWS_AS(plan(req), std::invalid_argument);
}
