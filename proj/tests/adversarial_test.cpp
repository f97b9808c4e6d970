#include <gtest/gtest.h>

#include <set>

#include "adversarial.hpp"

TEST(Adversarial, CorpusHasTwentyAnnotatedPrograms) {
  const auto cases = adversarial::load();
  EXPECT_EQ(cases.size(), 20u);
  const std::set<std::string> allowed{"contained", "syntax", "unknown_call", "unbounded_loop", "step_budget", "type_error"};
  for (const auto& c : cases) {
    EXPECT_FALSE(c.kind.empty()) << c.name;
    EXPECT_TRUE(allowed.count(c.expect)) << c.name << ": " << c.expect;
  }
}

TEST(Adversarial, EveryProgramIsRejectedOrContained) {
  for (const auto& c : adversarial::load()) {
    const auto o = adversarial::run(c);
    EXPECT_EQ(o.observed, c.expect) << c.name;
    EXPECT_TRUE(o.state_unchanged) << c.name;
    EXPECT_LT(o.seconds, 5.0) << c.name;
  }
}

TEST(Adversarial, HugeRadiusWritesAtMostTheWholeMap) {
  vxp::ValueMap m = vxp::empty_map(vxp::MapKind::affordance, vxp::GridSpec());
  const auto n = vxp::set_voxel_by_radius(m, {50, 50, 50}, 1e9, vxp::MapValue::of(1.0));
  EXPECT_EQ(n, m.spec().voxel_count());
}
