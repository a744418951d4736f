#include <gtest/gtest.h>

#include <atomic>

#include "eac/error.hpp"
#include "eac/explainer.hpp"
#include "eac/shapley.hpp"
#include "support.hpp"

using namespace eac;

namespace {

TableGame hand_game() { return TableGame::from_json(R"({"n": 2, "values": [0.0, 0.6, 0.2, 1.0]})"); }

}  // namespace

TEST(Marginal, Basics) {
  const TableGame g = hand_game();
  EXPECT_DOUBLE_EQ(marginal_contribution(g, 0, Coalition(2)), 0.6);
  try {
    marginal_contribution(g, 0, Coalition::full(2));
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConceptAlreadyInCoalition);
  }
  const FunctionGame dummy(3, [](const Coalition& s) { return s.test(0) ? 0.5 : 0.1 * s.test(2); });
  for (std::uint64_t bits = 0; bits < 8; ++bits)
    if (!(bits & 2)) EXPECT_EQ(marginal_contribution(dummy, 1, Coalition::from_bits(3, bits)), 0.0);
}

TEST(Exact, HandGame) {
  const ShapleyResult r = exact_shapley(hand_game());
  EXPECT_NEAR(r.values[0], 0.7, 1e-15);
  EXPECT_NEAR(r.values[1], 0.3, 1e-15);
  EXPECT_EQ(r.mode, ShapleyMode::exact);
  EXPECT_TRUE((r.std_error.array() == 0.0).all());
}

TEST(Exact, AdditiveGame) {
  const std::vector<double> w{0.3, -0.1, 0.25, 0.05, 0.4};
  const FunctionGame g(5, [&](const Coalition& s) {
    double v = 0;
    for (int i = 0; i < 5; ++i)
      if (s.test(i)) v += w[static_cast<std::size_t>(i)];
    return v;
  });
  const ShapleyResult r = exact_shapley(g);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.values[i], w[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Exact, MatchesPermutationOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TableGame g = test::random_game(6, seed);
    const ShapleyResult r = exact_shapley(g);
    const auto oracle = test::shapley_by_permutations(g);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.values[i], oracle[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(Exact, Axioms) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 7;
    const TableGame g = test::random_game(n, seed);
    const ShapleyResult r = exact_shapley(g);
    EXPECT_NEAR(r.values.sum(), g(Coalition::full(n)) - g(Coalition(n)), 1e-9);

    // Dummy: player 3 ignored; symmetry: players 0 and 1 interchangeable.
    const FunctionGame shaped(n, [&](const Coalition& s) {
      Coalition t = s.without(3);
      if (t.test(0) != t.test(1)) {
        t.set(0, true);
        t.set(1, false);
      }
      return g(t);
    });
    const ShapleyResult q = exact_shapley(shaped);
    EXPECT_NEAR(q.values[3], 0.0, 1e-12);
    EXPECT_NEAR(q.values[0], q.values[1], 1e-9);

    const TableGame h = test::random_game(n, seed + 1000);
    const FunctionGame sum(n, [&](const Coalition& s) { return g(s) + h(s); });
    const Eigen::VectorXd lin = exact_shapley(sum).values - (r.values + exact_shapley(h).values);
    EXPECT_LT(lin.cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Exact, ScalingPreservesRanking) {
  const TableGame g = test::random_game(6, 3);
  const FunctionGame scaled(6, [&](const Coalition& s) { return 2.5 * g(s); });
  const ShapleyResult a = exact_shapley(g), b = exact_shapley(scaled);
  EXPECT_LT((b.values - 2.5 * a.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ranking(a.values), ranking(b.values));
}

TEST(Exact, TooManyConcepts) {
  const FunctionGame big(21, [](const Coalition&) { return 0.0; });
  try {
    exact_shapley(big);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooManyConcepts);
  }
  const FunctionGame direct_sized(13, [](const Coalition&) { return 0.0; });
  EXPECT_THROW(exact_shapley(direct_sized, exact_cutoff(UtilityKind::direct)), Error);
  EXPECT_EQ(exact_cutoff(UtilityKind::pie), 20);
}

TEST(Mc, SinglePlayerIsExact) {
  const TableGame g(1, {0.2, 0.9});
  for (int K : {2, 7, 50}) {
    const ShapleyResult r = mc_shapley(g, K, 11);
    EXPECT_DOUBLE_EQ(r.values[0], 0.7);
    EXPECT_DOUBLE_EQ(r.std_error[0], 0.0);
  }
}

TEST(Mc, DeterministicAndScheduleIndependent) {
  const TableGame g = test::random_game(8, 1);
  const ShapleyResult a = mc_shapley(g, 300, 99);
  const ShapleyResult b = mc_shapley(g, 300, 99);
  const ShapleyResult c = mc_shapley(g, 300, 99, McOptions{Sampler::two_stage, 4, true});
  const ShapleyResult d = mc_shapley(g, 300, 99, McOptions{Sampler::two_stage, 3, false});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.values, c.values);
  EXPECT_EQ(a.values, d.values);
  EXPECT_NE(a.values, mc_shapley(g, 300, 100).values);
}

TEST(Mc, RejectsSmallK) { EXPECT_THROW(mc_shapley(hand_game(), 1, 0), Error); }

TEST(Mc, MemoizationBoundsEvaluations) {
  std::atomic<int> calls{0};
  const TableGame g = test::random_game(5, 2);
  const FunctionGame counted(5, [&](const Coalition& s) {
    ++calls;
    return g(s);
  });
  const ShapleyResult r = mc_shapley(counted, 400, 1);
  EXPECT_LE(calls.load(), 32);
  EXPECT_EQ(r.utility_evaluations, calls.load());
}

TEST(Mc, UnbiasedAcrossSeeds) {
  const TableGame g = test::random_game(6, 42);
  const ShapleyResult exact = exact_shapley(g);
  for (Sampler sampler : {Sampler::two_stage, Sampler::permutation}) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(6), sumsq = Eigen::VectorXd::Zero(6);
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
      const Eigen::VectorXd v = mc_shapley(g, 10, static_cast<std::uint64_t>(s), McOptions{sampler, 1, false}).values;
      sum += v;
      sumsq += v.cwiseAbs2();
    }
    const Eigen::VectorXd mean = sum / seeds;
    const Eigen::VectorXd var = (sumsq / seeds - mean.cwiseAbs2()) * seeds / (seeds - 1);
    for (int i = 0; i < 6; ++i) {
      const double se = std::sqrt(var[i] / seeds);
      EXPECT_LT(std::abs(mean[i] - exact.values[i]), 4 * se) << "player " << i;
    }
  }
}

TEST(Mc, StderrMatchesSpreadOfEstimates) {
  const TableGame g = test::random_game(8, 5);
  const ShapleyResult exact = exact_shapley(g);
  int inside = 0, total = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const ShapleyResult r = mc_shapley(g, 800, s);
    for (int i = 0; i < 8; ++i, ++total) inside += std::abs(r.values[i] - exact.values[i]) < 2 * r.std_error[i];
  }
  // About 95% of estimates fall within two standard errors.
  EXPECT_GT(static_cast<double>(inside) / total, 0.9);
}

TEST(TableGameIo, Errors) {
  EXPECT_THROW(TableGame(2, {0.0, 1.0}), Error);
  EXPECT_THROW(TableGame::from_json("{\"n\": 2}"), Error);
  try {
    TableGame::load(test::fixtures() / "missing_game.json");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoFailure);
  }
}
