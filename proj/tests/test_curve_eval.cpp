#include <gtest/gtest.h>

#include "eac/curve_eval.hpp"
#include "eac/error.hpp"
#include "eac/explainer.hpp"
#include "support.hpp"

using namespace eac;

namespace {

Curve make_curve(std::vector<double> x, std::vector<double> y) {
  Curve c;
  c.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  c.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return c;
}

struct Scene {
  Image8 image = read_png(test::fixtures() / "scene.png");
  ConceptSet cs = complete_with_background(load_concepts(test::fixtures() / "three_rects.json"));
  ModelBundle bundle = load_bundle(test::fixtures() / "toy_bundle");
};

}  // namespace

TEST(Auc, Constant) { EXPECT_DOUBLE_EQ(auc(make_curve({0, 0.25, 0.5, 0.75, 1}, {0.3, 0.3, 0.3, 0.3, 0.3})), 0.3); }

TEST(Auc, Ramp) { EXPECT_DOUBLE_EQ(auc(make_curve({0, 1}, {0, 1})), 0.5); }

TEST(Auc, ThreePoints) { EXPECT_NEAR(auc(make_curve({0, 0.5, 1}, {0.1, 0.5, 1.0})), 0.525, 1e-15); }

TEST(Auc, WithinRangeOfY) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(10));
    std::vector<double> x, y;
    for (int j = 0; j <= n; ++j) {
      x.push_back(static_cast<double>(j) / n);
      y.push_back(rng.uniform01());
    }
    const Curve c = make_curve(x, y);
    const double a = auc(c);
    EXPECT_GE(a, c.y.minCoeff() - 1e-15);
    EXPECT_LE(a, c.y.maxCoeff() + 1e-15);
  }
}

TEST(Curves, Endpoints) {
  const Scene s;
  const std::vector<int> order{2, 0, 3, 1};
  const auto fill = BaselineFill::channel_mean();
  const Curve ins = insertion_curve(s.bundle, s.image, s.cs, order, 1, fill);
  const Curve del = deletion_curve(s.bundle, s.image, s.cs, order, 1, fill);
  ASSERT_EQ(ins.size(), 5);
  const double empty = utility_direct(s.bundle, s.image, s.cs, Coalition(4), 1, fill);
  const double full = predict(s.bundle, s.image)[1];
  EXPECT_EQ(ins.y[0], empty);
  EXPECT_EQ(ins.y[4], full);
  EXPECT_EQ(del.y[0], full);
  EXPECT_EQ(del.y[4], empty);
  EXPECT_EQ(ins.x[0], 0.0);
  EXPECT_EQ(ins.x[4], 1.0);
  for (int j = 1; j <= 4; ++j) EXPECT_GT(ins.x[j], ins.x[j - 1]);
}

TEST(Curves, PointsAreDirectUtilities) {
  const Scene s;
  const std::vector<int> order{3, 1, 0, 2};
  const auto fill = BaselineFill::zero();
  const Curve ins = insertion_curve(s.bundle, s.image, s.cs, order, 0, fill);
  Coalition c(4);
  for (int j = 0; j <= 4; ++j) {
    EXPECT_EQ(ins.y[j], utility_direct(s.bundle, s.image, s.cs, c, 0, fill));
    if (j < 4) c.set(order[static_cast<std::size_t>(j)]);
  }
}

TEST(Curves, DeletionIsReversedInsertionReadBackwards) {
  const Scene s;
  const std::vector<int> order{1, 3, 2, 0};
  const std::vector<int> reversed(order.rbegin(), order.rend());
  const auto fill = BaselineFill::channel_mean();
  const Curve del = deletion_curve(s.bundle, s.image, s.cs, order, 2, fill);
  const Curve ins = insertion_curve(s.bundle, s.image, s.cs, reversed, 2, fill);
  for (int j = 0; j <= 4; ++j) EXPECT_EQ(del.y[j], ins.y[4 - j]);
}

TEST(Curves, ThreadsDoNotChangeValues) {
  const Scene s;
  const std::vector<int> order{0, 1, 2, 3};
  const Curve a = insertion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::zero(), CurveAxis::concepts, 1);
  const Curve b = insertion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::zero(), CurveAxis::concepts, 3);
  EXPECT_EQ(a.y, b.y);
}

TEST(Curves, PixelAxis) {
  const Scene s;
  const std::vector<int> order{2, 0, 1, 3};
  const Curve ins = insertion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::zero(), CurveAxis::pixels);
  EXPECT_DOUBLE_EQ(ins.x[0], 0.0);
  EXPECT_DOUBLE_EQ(ins.x[1], 864.0 / 4096.0);
  EXPECT_DOUBLE_EQ(ins.x[2], (864.0 + 320.0) / 4096.0);
  EXPECT_DOUBLE_EQ(ins.x[4], 1.0);
  const Curve del = deletion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::zero(), CurveAxis::pixels);
  EXPECT_DOUBLE_EQ(del.x[1], 864.0 / 4096.0);
  EXPECT_DOUBLE_EQ(del.x[4], 1.0);
}

TEST(Curves, InvalidOrder) {
  const Scene s;
  EXPECT_THROW(insertion_curve(s.bundle, s.image, s.cs, {0, 1, 2}, 0, BaselineFill::zero()), Error);
  EXPECT_THROW(insertion_curve(s.bundle, s.image, s.cs, {0, 1, 1, 2}, 0, BaselineFill::zero()), Error);
  EXPECT_THROW(deletion_curve(s.bundle, s.image, s.cs, {0, 1, 2, 4}, 0, BaselineFill::zero()), Error);
}

TEST(Curves, Csv) {
  const Curve c = make_curve({0, 0.5, 1}, {0.1, 0.5, 1.0});
  EXPECT_EQ(to_csv(c), "x,y\n0,0.1\n0.5,0.5\n1,1\n");
}

TEST(Curves, FixtureGolden) {
  // Values frozen from the first verified run on the toy bundle.
  const Scene s;
  const std::vector<int> order{2, 1, 3, 0};
  const Curve ins = insertion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::channel_mean());
  const Curve del = deletion_curve(s.bundle, s.image, s.cs, order, 0, BaselineFill::channel_mean());
  const double ins_golden[] = {0.721625, 0.82259, 0.825824, 0.796683, 0.729564};
  const double del_golden[] = {0.729564, 0.58176, 0.585839, 0.639096, 0.721625};
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(ins.y[j], ins_golden[j], 5e-7);
    EXPECT_NEAR(del.y[j], del_golden[j], 5e-7);
  }
  EXPECT_NEAR(auc(ins), 0.792673, 5e-7);
  EXPECT_NEAR(auc(del), 0.633072, 5e-7);
}

TEST(Curves, ShapleyOrderBeatsRandomOnFixture) {
  const Scene s;
  const auto fill = BaselineFill::channel_mean();
  const DirectUtility u(s.bundle, s.image, s.cs, 0, fill);
  const std::vector<int> order = ranking(exact_shapley(u).values);
  const double ins = auc(insertion_curve(s.bundle, s.image, s.cs, order, 0, fill));
  const double del = auc(deletion_curve(s.bundle, s.image, s.cs, order, 0, fill));
  Rng rng(1);
  double ins_rand = 0, del_rand = 0;
  std::vector<int> perm{0, 1, 2, 3};
  for (int k = 0; k < 100; ++k) {
    shuffle(perm.begin(), perm.end(), rng);
    ins_rand += auc(insertion_curve(s.bundle, s.image, s.cs, perm, 0, fill)) / 100;
    del_rand += auc(deletion_curve(s.bundle, s.image, s.cs, perm, 0, fill)) / 100;
  }
  EXPECT_GT(ins, ins_rand);
  EXPECT_LT(del, del_rand);
}
