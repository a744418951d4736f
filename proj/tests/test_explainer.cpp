#include <gtest/gtest.h>

#include "eac/cli.hpp"
#include "eac/error.hpp"
#include "eac/explainer.hpp"
#include "support.hpp"

using namespace eac;

namespace {

ShapleyResult with_values(std::initializer_list<double> v) {
  ShapleyResult r;
  r.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
  r.std_error = Eigen::VectorXd::Zero(r.values.size());
  return r;
}

RunConfig fixture_config() {
  RunConfig cfg;
  cfg.image = "fixtures/scene.png";
  cfg.masks = "fixtures/three_rects.json";
  cfg.toy_model = ToyModelSpec{7, 4, 5};
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST(Select, PositiveSubset) {
  EXPECT_EQ(select_explanation(with_values({0.7, -0.1, 0.3})), (std::vector<int>{0, 2}));
}

TEST(Select, FallbackToBest) {
  EXPECT_EQ(select_explanation(with_values({-0.4, -0.05, -0.2})), (std::vector<int>{1}));
  EXPECT_EQ(select_explanation(with_values({0.0, 0.0})), (std::vector<int>{0}));
}

TEST(Select, ZeroExcluded) { EXPECT_EQ(select_explanation(with_values({0.5, 0.0})), (std::vector<int>{0})); }

TEST(Select, AllPositiveKeepsEverything) {
  EXPECT_EQ(select_explanation(with_values({0.1, 0.2, 0.3})), (std::vector<int>{0, 1, 2}));
}

TEST(Select, InvariantUnderPositiveScaling) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    ShapleyResult r = with_values({0, 0, 0, 0, 0, 0});
    for (int i = 0; i < 6; ++i) r.values[i] = rng.uniform_sym();
    ShapleyResult scaled = r;
    scaled.values *= 0.01 + 10 * rng.uniform01();
    EXPECT_EQ(select_explanation(r), select_explanation(scaled));
  }
}

TEST(Select, BruteForceOptimal) {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    ShapleyResult r;
    r.values.resize(n);
    for (int i = 0; i < n; ++i) r.values[i] = rng.uniform_sym();
    double best = -1e300;
    for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << n); ++bits) {
      double sum = 0;
      for (int i = 0; i < n; ++i)
        if (bits >> i & 1) sum += r.values[i];
      best = std::max(best, sum);
    }
    double chosen = 0;
    for (int i : select_explanation(r)) chosen += r.values[i];
    EXPECT_NEAR(chosen, best, 1e-12);
  }
}

TEST(Ranking, DescendingWithIndexTieBreak) {
  Eigen::VectorXd v(5);
  v << 0.2, 0.5, 0.2, -1.0, 0.5;
  EXPECT_EQ(ranking(v), (std::vector<int>{1, 4, 0, 2, 3}));
}

TEST(Render, SharesMaskingPath) {
  const Image8 image = read_png(test::fixtures() / "scene.png");
  const ConceptSet cs = complete_with_background(load_concepts(test::fixtures() / "three_rects.json"));
  const std::vector<int> all{0, 1, 2, 3};
  EXPECT_TRUE(render_explanation(image, cs, all, BaselineFill::channel_mean()) == image);
  EXPECT_TRUE(render_explanation(image, cs, {}, BaselineFill::zero()) == fill_image(image, BaselineFill::zero()));
  const std::vector<int> some{0, 2};
  EXPECT_TRUE(render_explanation(image, cs, some, BaselineFill::blur(2)) ==
              apply_coalition(image, cs, Coalition::of(4, some), BaselineFill::blur(2)));
  const std::vector<int> bad{4};
  EXPECT_THROW(render_explanation(image, cs, bad, BaselineFill::zero()), Error);
}

TEST(Report, RoundSig6) {
  EXPECT_EQ(round_sig6(0.123456789), 0.123457);
  EXPECT_EQ(round_sig6(-1234567.0), -1234570.0);
  EXPECT_EQ(round_sig6(-0.0), 0.0);
}

TEST(Report, RoundTrip) {
  std::filesystem::current_path(PROJECT_ROOT);
  const RunConfig cfg = fixture_config();
  const Image8 image = read_png(cfg.image);
  const ConceptSet cs = prepare_concepts(cfg, image);
  ExplainRun run = explain(builtin_toy_model(7, 4, 5), image, cs, cfg);
  test::TempDir dir("report");
  write_report(run.explanation, dir.path / "report.json");
  const Explanation back = read_report(dir.path / "report.json");
  EXPECT_EQ(back.image, run.explanation.image);
  EXPECT_EQ(back.target_class, run.explanation.target_class);
  EXPECT_EQ(back.label, run.explanation.label);
  EXPECT_EQ(back.ranking, run.explanation.ranking);
  EXPECT_EQ(back.selected, run.explanation.selected);
  EXPECT_EQ(back.seed(), 42u);
  EXPECT_EQ(back.shapley.samples_per_concept, run.explanation.shapley.samples_per_concept);
  for (int i = 0; i < back.n(); ++i) EXPECT_EQ(back.shapley.values[i], round_sig6(run.explanation.shapley.values[i]));
  // Serializing the parsed report reproduces the file byte for byte.
  EXPECT_EQ(report_text(back), test::slurp(dir.path / "report.json"));
}

TEST(Report, DeterministicAndGolden) {
  std::filesystem::current_path(PROJECT_ROOT);
  const RunConfig cfg = fixture_config();
  const Image8 image = read_png(cfg.image);
  const ConceptSet cs = prepare_concepts(cfg, image);
  const ModelBundle bundle = builtin_toy_model(7, 4, 5);
  const std::string a = report_text(explain(bundle, image, cs, cfg).explanation);
  RunConfig threaded = cfg;
  threaded.threads = 4;
  const std::string b = report_text(explain(bundle, image, cs, threaded).explanation);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, test::slurp(test::fixtures() / "golden" / "report.json"));
}

TEST(Report, Errors) {
  Explanation e;
  e.shapley = with_values({0.1});
  e.ranking = {0};
  e.selected = {0};
  try {
    write_report(e, test::fixtures() / "no_such_dir" / "report.json");
    ADD_FAILURE();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::IoFailure);
  }
  EXPECT_THROW(explanation_from_json(ordered_json::parse(R"({"image": "x"})")), Error);
}
