#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gripsim/controller.hpp"
#include "support.hpp"

using namespace gripsim;
using namespace gripsim::control;

TEST(Integrator, InputLaw) {
  EXPECT_EQ(integrator_input(ContactClass::Slip), 1.0);
  EXPECT_EQ(integrator_input(ContactClass::Contact), 0.0);
  EXPECT_EQ(integrator_input(ContactClass::NoContact), 0.0);
}

TEST(Integrator, Arithmetic) {
  EXPECT_DOUBLE_EQ(update_integrator(0.5, 1.0, 0.9), 0.55);
  EXPECT_EQ(update_integrator(0.0, 0.0, 0.95), 0.0);
}

TEST(Integrator, FixpointsAreExact) {
  for (double a : {0.5, 0.8, 0.9, 0.95, 0.99, 0.999}) {
    EXPECT_EQ(update_integrator(0.0, 0.0, a), 0.0) << a;
    EXPECT_EQ(update_integrator(1.0, 1.0, a), 1.0) << a;
  }
}

TEST(Integrator, StaysInUnitInterval) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (int run = 0; run < 200; ++run) {
    const double a = 0.01 + 0.98 * u(rng);
    double y = u(rng);
    for (int k = 0; k < 500; ++k) {
      y = update_integrator(y, coin(rng) ? 1.0 : 0.0, a);
      ASSERT_GE(y, 0.0);
      ASSERT_LE(y, 1.0);
    }
  }
}

TEST(Integrator, GeometricLeakExact) {
  // Powers of two keep every iterate exactly representable.
  double y = 1.0;
  for (int k = 1; k <= 60; ++k) {
    y = update_integrator(y, 0.0, 0.5);
    ASSERT_EQ(y, std::ldexp(1.0, -k));
  }
  y = 0.5;
  double oracle = 0.5;
  for (int k = 1; k <= 200; ++k) {
    const double prev = y;
    y = update_integrator(y, 0.0, 0.95);
    oracle *= 0.95;
    ASSERT_EQ(y, oracle);
    ASSERT_LT(y, prev);
  }
  EXPECT_NEAR(y, 0.5 * std::pow(0.95, 200), 1e-15);
}

TEST(Integrator, SlipRaisesAboveLeak) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = 0.01 + 0.98 * u(rng);
    const double y = u(rng);
    EXPECT_GT(update_integrator(y, 1.0, a), update_integrator(y, 0.0, a));
  }
}

TEST(Integrator, ConstantSlipConvergesMonotonically) {
  double y = 0.5;
  for (int k = 0; k < 2000; ++k) {
    const double next = update_integrator(y, 1.0, 0.95);
    ASSERT_GE(next, y);
    y = next;
  }
  EXPECT_NEAR(y, 1.0, 1e-12);
}

TEST(Integrator, AlternatingInputTwoCycle) {
  // y_hi = a y_lo + (1 - a), y_lo = a y_hi  =>  y_hi = 1/(1+a), y_lo = a/(1+a)
  const double a = 0.95;
  double y = 0.5;
  double prev = y;
  for (int k = 0; k < 4000; ++k) {
    prev = y;
    y = update_integrator(y, k % 2 == 0 ? 1.0 : 0.0, a);
    ASSERT_LE(std::abs(y - prev), 1.0 - a + 1e-15);
  }
  // last step had input 0
  EXPECT_NEAR(prev, 1.0 / (1.0 + a), 1e-12);
  EXPECT_NEAR(y, a / (1.0 + a), 1e-12);
}

TEST(YMin, LearnedOnFirstTransitionOnly) {
  ControllerState s;
  s.seen_stable_period = true;
  s = update_y_min(s, ContactClass::Contact, ContactClass::Slip, 0.3);
  ASSERT_TRUE(s.y_min);
  EXPECT_EQ(*s.y_min, 0.3);
  s = update_y_min(s, ContactClass::Contact, ContactClass::Slip, 0.5);
  EXPECT_EQ(*s.y_min, 0.3);
}

TEST(YMin, NeedsStablePeriodAndTransition) {
  ControllerState s;
  EXPECT_FALSE(update_y_min(s, ContactClass::Contact, ContactClass::Slip, 0.3).y_min);
  s.seen_stable_period = true;
  EXPECT_FALSE(update_y_min(s, ContactClass::Slip, ContactClass::Slip, 0.3).y_min);
  EXPECT_FALSE(update_y_min(s, ContactClass::NoContact, ContactClass::Slip, 0.3).y_min);
  EXPECT_FALSE(update_y_min(s, std::nullopt, ContactClass::Slip, 0.3).y_min);
}

TEST(YMin, WriteOnceUnderRandomSequences) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int run = 0; run < 100; ++run) {
    ControllerState s;
    s.seen_stable_period = true;
    std::optional<ContactClass> prev;
    std::optional<double> first;
    for (int k = 0; k < 300; ++k) {
      const auto c = class_from_index(cls(rng));
      s = update_y_min(s, prev, c, u(rng));
      if (s.y_min && !first) first = s.y_min;
      if (first) {
        ASSERT_EQ(*s.y_min, *first);
      }
      prev = c;
    }
  }
}

TEST(Command, PressesAlongInwardNormal) {
  const Vec2 v = command_velocity(0.5, 0.05, Vec2{1.0, 0.0}, 0.02);
  EXPECT_DOUBLE_EQ(v.x, -0.01);
  EXPECT_EQ(v.y, 0.0);
}

TEST(Command, FloorAndMinimum) {
  EXPECT_EQ(command_velocity(0.0, 0.0, Vec2{0.0, 1.0}, 0.02).norm(), 0.0);
  EXPECT_DOUBLE_EQ(command_velocity(0.1, 0.3, Vec2{0.0, 1.0}, 0.02).norm(), 0.3 * 0.02);
  EXPECT_EQ(command_velocity(0.7, 0.3, std::nullopt, 0.02).norm(), 0.0);
}

TEST(Command, RejectsNonUnitNormal) {
  try {
    command_velocity(0.5, 0.0, Vec2{2.0, 0.0}, 0.02);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Controller, InitialState) {
  ControllerConfig c;
  auto s = init_controller(c);
  EXPECT_EQ(s.y, 0.5);
  EXPECT_FALSE(s.y_min);
  EXPECT_FALSE(s.seen_stable_period);
  c.initial_fraction = 1.0;
  EXPECT_EQ(init_controller(c).y, 1.0);
  c.leakage = 1.0;
  EXPECT_THROW(init_controller(c), Error);
}

namespace {

sensor::SensorFrame frame(std::int64_t tick, double pdc, double ptp) {
  sensor::SensorFrame f;
  f.tick = tick;
  f.values[sensor::kPdc] = pdc;
  f.values[sensor::kPac] = ptp;
  return f;
}

}  // namespace

TEST(Controller, StuckOnContactDecaysGeometrically) {
  ControllerConfig cfg;
  FingerController ctl(cfg, testkit::threshold_classifier());
  ctl.prime(frame(0, 50.0, 0.0));
  double oracle = cfg.initial_fraction;
  for (int k = 1; k <= 50; ++k) {
    const auto out = ctl.tick(frame(k, 50.0, 0.0), Vec2{1.0, 0.0});
    oracle *= cfg.leakage;
    ASSERT_EQ(out.prediction, ContactClass::Contact);
    ASSERT_EQ(out.y, oracle);
    ASSERT_DOUBLE_EQ(out.command.norm(), cfg.max_speed * std::max(oracle, cfg.floor));
  }
  EXPECT_TRUE(ctl.state().seen_stable_period);
}

TEST(Controller, LearnsYMinAfterStablePeriod) {
  ControllerConfig cfg;
  FingerController ctl(cfg, testkit::threshold_classifier());
  ctl.prime(frame(0, 50.0, 0.0));
  int k = 1;
  for (; k <= cfg.stable_period; ++k) ctl.tick(frame(k, 50.0, 0.0), Vec2{1.0, 0.0});
  const double y_before = ctl.state().y;
  const auto out = ctl.tick(frame(k, 50.0, 100.0), Vec2{1.0, 0.0});
  ASSERT_EQ(out.prediction, ContactClass::Slip);
  ASSERT_TRUE(out.y_min);
  EXPECT_EQ(*out.y_min, cfg.leakage * y_before + (1.0 - cfg.leakage));
}

TEST(Controller, SensorGapHoldsCommand) {
  ControllerConfig cfg;
  FingerController ctl(cfg, testkit::threshold_classifier());
  ctl.prime(frame(0, 50.0, 0.0));
  const auto a = ctl.tick(frame(1, 50.0, 0.0), Vec2{1.0, 0.0});
  const auto b = ctl.tick(frame(5, 50.0, 100.0), Vec2{0.0, 1.0});
  EXPECT_TRUE(b.sensor_gap);
  EXPECT_EQ(b.command, a.command);
  EXPECT_EQ(b.y, a.y);
}

TEST(Controller, ControllersShareNothing) {
  // Interleaving two controllers must not change either one's outputs.
  ControllerConfig cfg;
  auto clf = testkit::threshold_classifier();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 120.0);
  std::vector<sensor::SensorFrame> fa, fb;
  for (int k = 0; k < 200; ++k) {
    fa.push_back(frame(k, u(rng), u(rng)));
    fb.push_back(frame(k, u(rng), u(rng)));
  }
  auto run = [&](bool interleave) {
    FingerController a(cfg, clf), b(cfg, clf);
    std::vector<Vec2> ca, cb;
    for (int k = 0; k < 200; ++k) {
      if (interleave && k % 2) {
        cb.push_back(b.tick(fb[k], Vec2{0.0, 1.0}).command);
        ca.push_back(a.tick(fa[k], Vec2{1.0, 0.0}).command);
      } else {
        ca.push_back(a.tick(fa[k], Vec2{1.0, 0.0}).command);
        cb.push_back(b.tick(fb[k], Vec2{0.0, 1.0}).command);
      }
    }
    return std::pair{ca, cb};
  };
  EXPECT_EQ(run(false), run(true));
}
