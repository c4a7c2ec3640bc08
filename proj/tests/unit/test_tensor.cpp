#include <gtest/gtest.h>

#include <limits>

#include "tonemap/errors.hpp"
#include "tonemap/tensor.hpp"

using namespace tonemap;

TEST(Tensor, DataLengthMatchesShape) {
  Tensorf t(Shape{2, 3, 4, 5}, 1.5f);
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(t.shape().plane(), 20);
  EXPECT_FLOAT_EQ(t.at(1, 2, 3, 4), 1.5f);
  EXPECT_THROW(Tensorf(Shape{1, 1, 2, 2}, std::vector<float>(3)), DimensionError);
}

TEST(Tensor, RowMajorLayout) {
  std::vector<float> data(24);
  for (int i = 0; i < 24; ++i) data[i] = static_cast<float>(i);
  Tensorf t(Shape{1, 2, 3, 4}, data);
  EXPECT_FLOAT_EQ(t.at(0, 1, 2, 3), 23.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 0, 0), 12.0f);
  EXPECT_EQ(t.plane(0, 1)[5], 17.0f);
}

TEST(Tensor, ReshapeKeepsData) {
  Tensord t(Shape{1, 1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensord r = t.reshaped(Shape{3, 2, 1, 1});
  EXPECT_EQ(r.at(2, 1, 0, 0), 6.0);
  EXPECT_THROW(t.reshaped(Shape{1, 1, 1, 5}), DimensionError);
}

TEST(Tensor, FinitenessChecks) {
  Tensorf t(Shape{1, 1, 1, 3}, 0.0f);
  EXPECT_TRUE(t.all_finite());
  EXPECT_NO_THROW(require_finite(t, "ok"));
  t[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  EXPECT_THROW(require_finite(t, "bad"), NumericError);
}

TEST(Tensor, AxpyAndCast) {
  Tensord a(Shape{1, 1, 1, 2}, std::vector<double>{1, 2});
  Tensord b(Shape{1, 1, 1, 2}, std::vector<double>{10, 20});
  a.axpy(0.5, b);
  EXPECT_EQ(a[0], 6.0);
  EXPECT_EQ(a[1], 12.0);
  const Tensorf f = a.cast<float>();
  EXPECT_EQ(f[1], 12.0f);
  EXPECT_THROW(a.axpy(1.0, Tensord(Shape{1, 1, 1, 3})), DimensionError);
}
