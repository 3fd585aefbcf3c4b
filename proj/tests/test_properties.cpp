#include <gtest/gtest.h>

#include "properties.hpp"

using namespace mex;

TEST(SimplifyProperty, IdempotentAndSound) {
  auto r = props::simplify_soundness(11, 200, 20);
  EXPECT_EQ(r.cases, 200);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first;
}

TEST(DiffProperty, AgreesWithCentralDifferences) {
  auto r = props::diff_vs_finite_differences(12, 30);
  EXPECT_EQ(r.cases, 30);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first;
}

TEST(BetaProperty, StrategiesAgreeWithoutCapture) {
  auto r = props::beta_confluence(13, 100);
  EXPECT_EQ(r.cases, 100);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first;
}

TEST(PathsProperty, RoundTrips) {
  auto r = props::paths_round_trip(14, 500);
  EXPECT_EQ(r.cases, 500);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first;
}

// Brute-force nested loops over the exact evaluator; also the surface
// re-parse and the loop program round trip.
TEST(ComprehensionProperty, AgreesWithNestedLoops) {
  auto r = props::comprehension_vs_loops(2024, 400);
  EXPECT_EQ(r.cases, 400);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first;
}
