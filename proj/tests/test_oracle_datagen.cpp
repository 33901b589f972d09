#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "srl/corrective.hpp"
#include "srl/datagen.hpp"
#include "srl/safety_oracle.hpp"

using namespace srl;

namespace {

struct Fixture {
  PendulumParams params = PendulumParams::nominal();
  FeedbackGain gain = lqr_gain(linearize(params));
  SimConfig sim;
  StateRanges ranges = StateRanges::defaults();
};

State random_state(const StateRanges& r, Rng& rng) {
  State x;
  for (int d = 0; d < 6; ++d) x(d) = rng.uniform(r.lower(d), r.upper(d));
  return x;
}

}  // namespace

TEST_CASE("normalized distance") {
  const auto r = StateRanges::defaults();
  Rng rng(3);

  State a = random_state(r, rng);
  CHECK(normalized_distance(a, a, r) == 0.0);

  SUBCASE("full range width in one dimension maps to 1") {
    State b = State::Zero(), c = State::Zero();
    b(4) = r.lower(4);
    c(4) = r.upper(4);
    CHECK(normalized_distance(b, c, r) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("symmetry and triangle inequality on random triples") {
    for (int i = 0; i < 200; ++i) {
      const State x = random_state(r, rng), y = random_state(r, rng), z = random_state(r, rng);
      CHECK(normalized_distance(x, y, r) == normalized_distance(y, x, r));
      CHECK(normalized_distance(x, z, r) <=
            normalized_distance(x, y, r) + normalized_distance(y, z, r) + 1e-12);
    }
  }
}

TEST_CASE("label_state") {
  Fixture f;

  CHECK(label_state(State::Zero(), f.params, f.gain, f.sim) == 1);

  State ground = State::Zero();
  ground(0) = kPi / 2;
  CHECK(label_state(ground, f.params, f.gain, f.sim) == 0);

  State small;
  small << 0.05, 0.05, 0.05, 0, 0, 0;
  CHECK(label_state(small, f.params, f.gain, f.sim) == 1);

  SUBCASE("simulation blow-up is conservatively unsafe") {
    State wild;
    wild << 0.3, 0.5, 0.2, 1e200, 0, 0;
    CHECK(label_state(wild, f.params, f.gain, f.sim) == 0);
  }
}

TEST_CASE("label_batch") {
  Fixture f;

  CHECK(label_batch({}, f.params, f.gain, f.sim).empty());

  SUBCASE("copies of the origin are all safe") {
    const std::vector<State> states(5, State::Zero());
    const auto labeled = label_batch(states, f.params, f.gain, f.sim);
    REQUIRE(labeled.size() == 5);
    for (const auto& s : labeled) CHECK(s.label == 1);
  }
  SUBCASE("uniform sample contains both classes") {
    Rng rng(7);
    const auto states = sample_ud(1000, f.ranges, rng);
    const auto labeled = label_batch(states, f.params, f.gain, f.sim);
    long safe = 0;
    for (const auto& s : labeled) safe += s.label;
    CHECK(safe > 0);
    CHECK(safe < 1000);
  }
  SUBCASE("deterministic and order preserving") {
    Rng rng(11);
    const auto states = sample_ud(40, f.ranges, rng);
    const auto a = label_batch(states, f.params, f.gain, f.sim);
    const auto b = label_batch(states, f.params, f.gain, f.sim);
    REQUIRE(a.size() == states.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].state == states[i]);
      CHECK(a[i].label == b[i].label);
    }
  }
}

TEST_CASE("sample_ud") {
  const auto r = StateRanges::defaults();
  Rng rng(1234);

  CHECK(sample_ud(0, r, rng).empty());

  const auto states = sample_ud(10000, r, rng);
  REQUIRE(states.size() == 10000);
  for (const auto& x : states) CHECK(r.contains(x));

  // per-dimension mean within 3 standard errors of the midpoint
  State mean = State::Zero();
  for (const auto& x : states) mean += x;
  mean /= 10000.0;
  for (int d = 0; d < 6; ++d) {
    const double mid = 0.5 * (r.lower(d) + r.upper(d));
    const double se = (r.upper(d) - r.lower(d)) / std::sqrt(12.0 * 10000.0);
    CHECK(std::abs(mean(d) - mid) < 3.0 * se);
  }
}

TEST_CASE("collect_rollouts") {
  Fixture f;
  Rng rng(42);

  CHECK(collect_rollouts(f.params, f.sim, 0, 100, rng).empty());

  const auto x = collect_rollouts(f.params, f.sim, 200, 300, rng);
  REQUIRE(x.size() > 1000);

  SUBCASE("ground states appear at most once per episode") {
    long ground = 0;
    for (const auto& s : x) ground += hits_ground(s) ? 1 : 0;
    CHECK(ground <= 200);
  }
  SUBCASE("density is concentrated near the origin and vanishes in the unreachable corners") {
    // box fractions of the (theta1, dtheta1) plane: each corner box covers
    // 1/64 of the area, the central box 1/16
    long corner = 0, central = 0;
    for (const auto& s : x) {
      if ((s(0) > 0.75 * kPi / 2 && s(3) < -7.5) || (s(0) < -0.75 * kPi / 2 && s(3) > 7.5))
        ++corner;
      if (std::abs(s(0)) < 0.25 * kPi / 2 && std::abs(s(3)) < 2.5) ++central;
    }
    const double n = static_cast<double>(x.size());
    const double corner_density = (corner / n) / (2.0 / 64.0);
    const double central_density = (central / n) / (1.0 / 16.0);
    CHECK(corner_density < 0.2);   // far below uniform
    CHECK(central_density > 2.0);  // well above uniform
  }
}

TEST_CASE("fit_mnd") {
  CHECK_THROWS_AS(fit_mnd({}), InsufficientData);
  CHECK_THROWS_AS(fit_mnd({State::Zero()}), InsufficientData);

  SUBCASE("degenerate duplicate sample leaves only the regularizer") {
    State x0;
    x0 << 0.1, -0.2, 0.3, 1.0, -2.0, 3.0;
    const MndModel m = fit_mnd({x0, x0});
    CHECK(m.mean == x0);
    CHECK(m.covariance == Matrix6d(1e-8 * Matrix6d::Identity()));
  }
  SUBCASE("recovers the generating mean within 3 standard errors") {
    MndModel truth;
    truth.mean << 0.2, -0.5, 1.0, 2.0, -3.0, 0.7;
    truth.covariance = Matrix6d::Identity();
    truth.covariance.diagonal() << 0.04, 0.09, 0.25, 1.0, 2.25, 4.0;

    StateRanges wide;
    wide.lower = State::Constant(-1e6);
    wide.upper = State::Constant(1e6);
    Rng rng(99);
    const auto draws = sample_mnd(truth, 4000, wide, rng);
    const MndModel fitted = fit_mnd(draws);
    for (int d = 0; d < 6; ++d) {
      const double se = std::sqrt(truth.covariance(d, d) / 4000.0);
      CHECK(std::abs(fitted.mean(d) - truth.mean(d)) < 3.0 * se);
    }
  }
  SUBCASE("covariance is symmetric positive definite") {
    Fixture f;
    Rng rng(5);
    const auto x = collect_rollouts(f.params, f.sim, 30, 100, rng);
    const MndModel m = fit_mnd(x);
    CHECK(m.covariance == Matrix6d(m.covariance.transpose()));
    CHECK(Eigen::LLT<Matrix6d>(m.covariance).info() == Eigen::Success);
  }
}

TEST_CASE("sample_mnd") {
  const auto r = StateRanges::defaults();
  MndModel m;  // identity covariance at the origin
  Rng rng(17);

  CHECK(sample_mnd(m, 0, r, rng).empty());

  SUBCASE("all draws respect the ranges") {
    const auto draws = sample_mnd(m, 2000, r, rng);
    for (const auto& x : draws) CHECK(r.contains(x));
  }
  SUBCASE("vanishing covariance clusters at the mean") {
    MndModel tight;
    tight.mean << 0.3, 0.1, -0.2, 1.0, 2.0, -1.0;
    tight.covariance = 1e-8 * Matrix6d::Identity();
    const auto draws = sample_mnd(tight, 500, r, rng);
    for (const auto& x : draws) CHECK((x - tight.mean).cwiseAbs().maxCoeff() < 1e-3);
  }
  SUBCASE("unreachable mean exhausts the rejection budget") {
    MndModel stuck;
    stuck.mean = State::Constant(100.0);
    stuck.covariance = 1e-8 * Matrix6d::Identity();
    CHECK_THROWS_AS(sample_mnd(stuck, 1, r, rng), DegenerateModel);
  }
}

TEST_CASE("dataset composition") {
  DatasetSpec spec;
  spec.k = 1000;
  spec.alpha = 0.0;
  CHECK(ud_count(spec) == 0);
  spec.alpha = 0.5;
  CHECK(ud_count(spec) == 500);
  spec.alpha = 1.0;
  CHECK(ud_count(spec) == 1000);
  spec.k = 5;
  spec.alpha = 0.5;
  CHECK(ud_count(spec) == 3);  // round half up
  spec.k = 3;
  spec.alpha = 1.0 / 3.0;
  CHECK(ud_count(spec) == 1);
}

TEST_CASE("build_dataset") {
  Fixture f;
  Rng rng(21);
  const MndModel mnd = fit_mnd(collect_rollouts(f.params, f.sim, 40, 150, rng));

  DatasetSpec spec;
  spec.k = 60;
  spec.alpha = 0.5;
  spec.seed = 777;

  const auto d = build_dataset(spec, mnd, f.params, f.gain, f.sim);
  REQUIRE(static_cast<int>(d.size()) == spec.k);

  SUBCASE("uniform part comes first and provenance counts match") {
    for (int i = 0; i < 30; ++i) CHECK(d[i].provenance == Provenance::ud);
    for (int i = 30; i < 60; ++i) CHECK(d[i].provenance == Provenance::mnd);
  }
  SUBCASE("identical specs give bit-identical datsets") {
    const auto e = build_dataset(spec, mnd, f.params, f.gain, f.sim);
    for (int i = 0; i < spec.k; ++i) {
      CHECK(d[i].state == e[i].state);
      CHECK(d[i].label == e[i].label);
      CHECK(d[i].provenance == e[i].provenance);
    }
  }
  SUBCASE("alpha extremes") {
    spec.k = 30;
    spec.alpha = 0.0;
    for (const auto& s : build_dataset(spec, mnd, f.params, f.gain, f.sim))
      CHECK(s.provenance == Provenance::mnd);
    spec.alpha = 1.0;
    for (const auto& s : build_dataset(spec, mnd, f.params, f.gain, f.sim))
      CHECK(s.provenance == Provenance::ud);
  }
}

TEST_CASE("safe fraction shrinks when moving from the fitted to the uniform distribution") {
  Fixture f;
  Rng rng(31);
  const MndModel mnd = fit_mnd(collect_rollouts(f.params, f.sim, 100, 300, rng));

  DatasetSpec spec;
  spec.k = 300;
  spec.seed = 4242;

  auto safe_fraction = [&](double alpha) {
    spec.alpha = alpha;
    const auto d = build_dataset(spec, mnd, f.params, f.gain, f.sim);
    long safe = 0;
    for (const auto& s : d) safe += s.label;
    return static_cast<double>(safe) / d.size();
  };
  CHECK(safe_fraction(0.0) > safe_fraction(1.0));
}
