#include "rmgls/errors.hpp"
#include "rmgls/verify.hpp"

#include <gtest/gtest.h>

using namespace rmgls;

class PropertySuite : public ::testing::TestWithParam<int> {};

TEST_P(PropertySuite, AllPropertiesHold) {
  for (std::uint64_t seed : {1u, 7u}) {
    PropertySuiteOptions o;
    o.level = GetParam();
    o.seed = seed;
    const auto results = run_property_suite(o);
    ASSERT_FALSE(results.empty());
    for (const PropertyResult& r : results)
      EXPECT_TRUE(r.pass) << r.name << ": " << r.value << " > " << r.tol << " " << r.detail;
  }
}

INSTANTIATE_TEST_SUITE_P(Levels, PropertySuite, ::testing::Values(3, 4, 5));

TEST(PropertySuite, CorruptedFactorsAreCaught) {
  PropertySuiteOptions o;
  o.level = 4;
  o.corrupt_factors = true;
  int failed = 0;
  for (const PropertyResult& r : run_property_suite(o)) failed += !r.pass;
  EXPECT_GT(failed, 0);
}

TEST(PropertySuite, RejectsUnsupportedLevels) {
  PropertySuiteOptions o;
  o.level = 6;
  EXPECT_THROW(run_property_suite(o), ConfigError);
  o.level = 2;
  EXPECT_THROW(run_property_suite(o), ConfigError);
}
