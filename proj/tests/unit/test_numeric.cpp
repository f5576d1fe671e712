#include <gtest/gtest.h>

#include "ifbound/errors.hpp"
#include "ifbound/numeric.hpp"

using namespace ifbound;

TEST(Numeric, CriticalValues) {
  EXPECT_NEAR(normal_critical_value(0.05), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_critical_value(0.10), 1.6448536269514729, 1e-12);
  EXPECT_THROW(normal_critical_value(0.0), ConfigError);
  EXPECT_THROW(normal_critical_value(1.0), ConfigError);
}

TEST(Numeric, CompensatedSum) {
  KahanSum s;
  s += 1e16;
  for (int i = 0; i < 1000; ++i) s += 1.0;
  s += -1e16;
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(Numeric, Substreams) {
  static_assert(substream_seed(1, 2) == substream_seed(1, 2));
  EXPECT_NE(substream_seed(1, 2), substream_seed(1, 3));
  EXPECT_NE(substream_seed(1, 2, 0), substream_seed(1, 2, 1));
  EXPECT_NE(substream_seed(1, 2), substream_seed(2, 2));
}
