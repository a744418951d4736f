#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "eac/error.hpp"
#include "eac/model_oracle.hpp"
#include "eac/onnx_graph.hpp"
#include "support.hpp"

using namespace eac;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

Image8 noise_image(Eigen::Index h, Eigen::Index w, std::uint64_t seed) {
  Rng rng(seed);
  Image8 img(h, w, 3);
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x) img[c](y, x) = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST(Softmax, LargeLogitsStayFinite) {
  Eigen::VectorXd logits(3);
  logits << 1e4, 0.0, -1e4;
  const ProbVec p = softmax(logits);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
}

TEST(Softmax, EqualLogitsUniform) {
  const ProbVec p = softmax(Eigen::VectorXd::Constant(4, 3.5));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 0.25);
}

TEST(Resize, HalfPixelBilinearUpsample) {
  ImageF img(2, 2, 1);
  img[0] << 0, 1, 2, 3;
  const ImageF out = resize_bilinear(img, 4, 4);
  // Source coordinate of output index i is (i + 0.5) / 2 - 0.5, clamped.
  const float expected_row0[] = {0.0f, 0.25f, 0.75f, 1.0f};
  for (int x = 0; x < 4; ++x) EXPECT_FLOAT_EQ(out[0](0, x), expected_row0[x]);
  EXPECT_FLOAT_EQ(out[0](3, 0), 2.0f);
  EXPECT_FLOAT_EQ(out[0](1, 1), 0.75f);  // 0.25 * 2 + 0.25
}

TEST(Resize, SameSizeIsIdentity) {
  const ImageF img = noise_image(5, 7, 3).cast<float>();
  EXPECT_TRUE(resize_bilinear(img, 5, 7) == img);
}

TEST(Preprocess, RejectsNonRgb) {
  Image8 gray(4, 4, 1);
  PreprocessSpec spec;
  spec.resize_height = spec.resize_width = 4;
  EXPECT_EQ(code_of([&] { preprocess(gray, spec); }), Errc::BackendFailure);
}

TEST(ToyModel, PredictIsDistribution) {
  const ModelBundle b = builtin_toy_model(7, 4, 5);
  EXPECT_EQ(b.m(), 48);
  EXPECT_EQ(b.num_classes(), 5);
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_TRUE(is_prob_vec(predict(b, noise_image(64, 64, s))));
}

TEST(ToyModel, FeaturesAreCellMeans) {
  const ModelBundle b = builtin_toy_model(1, 2, 3);
  // 32x32 image (resize target for grid 2), left half 0, right half 255.
  Image8 img(32, 32, 3);
  for (int c = 0; c < 3; ++c) img[c].rightCols(16).setConstant(255);
  const Eigen::VectorXd f = features(b, img);
  ASSERT_EQ(f.size(), 12);
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(f[c * 4 + 0], 0.0, 1e-7);
    EXPECT_NEAR(f[c * 4 + 1], 1.0, 1e-7);
    EXPECT_NEAR(f[c * 4 + 2], 0.0, 1e-7);
    EXPECT_NEAR(f[c * 4 + 3], 1.0, 1e-7);
  }
}

TEST(ToyModel, OnnxAndBuiltinPathsAgreeBitForBit) {
  const ModelBundle b = builtin_toy_model(7, 4, 5);
  test::TempDir onnx_dir("onnx"), marker_dir("marker");
  save_toy_bundle(b, onnx_dir.path, BackboneFormat::onnx_graph);
  save_toy_bundle(b, marker_dir.path, BackboneFormat::builtin_marker);
  const ModelBundle via_onnx = load_bundle(onnx_dir.path);
  const ModelBundle via_marker = load_bundle(marker_dir.path);
  EXPECT_EQ(via_onnx.backbone->kind(), "onnx");
  EXPECT_EQ(via_marker.backbone->kind(), "grid_means");
  EXPECT_EQ(via_onnx.fc_weight, b.fc_weight);
  EXPECT_EQ(via_onnx.fc_bias, b.fc_bias);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image8 img = noise_image(64, 64, s);
    const Eigen::VectorXd fo = features(via_onnx, img);
    const Eigen::VectorXd fm = features(via_marker, img);
    EXPECT_EQ(fo, fm);
    EXPECT_EQ(predict(via_onnx, img), predict(b, img));
  }
}

TEST(ToyModel, CheckedInBundleMatchesGenerator) {
  const ModelBundle loaded = load_bundle(test::fixtures() / "toy_bundle");
  const ModelBundle fresh = builtin_toy_model(7, 4, 5);
  EXPECT_EQ(loaded.fc_weight, fresh.fc_weight);
  EXPECT_EQ(loaded.fc_bias, fresh.fc_bias);
  EXPECT_EQ(loaded.labels, fresh.labels);
}

TEST(OnnxBundle, MatchesTorchReference) {
  const ModelBundle b = load_bundle(test::fixtures() / "onnx_bundle");
  EXPECT_EQ(b.backbone->kind(), "onnx");
  EXPECT_EQ(b.m(), 32);
  EXPECT_EQ(b.num_classes(), 3);
  const auto ref = nlohmann::json::parse(test::slurp(test::fixtures() / "onnx_bundle" / "reference.json"));
  const int h = ref["height"], w = ref["width"];
  const auto pixels = ref["pixels"].get<std::vector<int>>();
  Image8 img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img[c](y, x) = static_cast<std::uint8_t>(pixels[static_cast<std::size_t>((y * w + x) * 3 + c)]);

  const auto feats = ref["features"].get<std::vector<double>>();
  const Eigen::VectorXd got = features(b, img);
  ASSERT_EQ(got.size(), static_cast<Eigen::Index>(feats.size()));
  for (Eigen::Index i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], feats[static_cast<std::size_t>(i)], 2e-5) << i;

  const auto probs = ref["probs"].get<std::vector<double>>();
  const ProbVec p = predict(b, img);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], probs[static_cast<std::size_t>(i)], 2e-5);
}

TEST(Bundle, MissingArtifacts) {
  test::TempDir dir("missing");
  EXPECT_EQ(code_of([&] { load_bundle(dir.path); }), Errc::MissingArtifact);
  save_toy_bundle(builtin_toy_model(1, 2, 3), dir.path, BackboneFormat::onnx_graph);
  std::filesystem::remove(dir.path / "backbone.onnx");
  EXPECT_EQ(code_of([&] { load_bundle(dir.path); }), Errc::MissingArtifact);
  EXPECT_EQ(code_of([&] { load_bundle(dir.path / "nope"); }), Errc::MissingArtifact);
}

TEST(Bundle, ShapeMismatch) {
  ModelBundle b = builtin_toy_model(1, 2, 3);
  b.fc_bias.resize(2);
  EXPECT_EQ(code_of([&] { verify_bundle(b); }), Errc::ShapeMismatch);
  b = builtin_toy_model(1, 2, 3);
  b.fc_weight.conservativeResize(3, 11);
  EXPECT_EQ(code_of([&] { verify_bundle(b); }), Errc::ShapeMismatch);
  b = builtin_toy_model(1, 2, 3);
  b.labels.pop_back();
  EXPECT_EQ(code_of([&] { verify_bundle(b); }), Errc::ShapeMismatch);
}

TEST(Bundle, ProbeFileChecked) {
  const ModelBundle b = builtin_toy_model(3, 2, 4);
  test::TempDir dir("probe");
  save_toy_bundle(b, dir.path);
  const Image8 probe = constant_image<std::uint8_t>(10, 12, {30, 200, 90});
  const ProbVec p = predict(b, probe);
  nlohmann::json doc{{"probes", {{{"color", {30, 200, 90}}, {"height", 10}, {"width", 12},
                                  {"probs", std::vector<double>(p.data(), p.data() + p.size())}}}}};
  std::ofstream(dir.path / "probe.json") << doc.dump();
  EXPECT_NO_THROW(load_bundle(dir.path));

  doc["probes"][0]["probs"][0] = p[0] + 0.01;
  doc["probes"][0]["probs"][1] = p[1] - 0.01;
  std::ofstream(dir.path / "probe.json") << doc.dump();
  EXPECT_EQ(code_of([&] { load_bundle(dir.path); }), Errc::ProbeFailure);
}

TEST(Bundle, DeclaredLogitsMustAgree) {
  // The torch fixture declares logits; perturbing the FC breaks the probe.
  test::TempDir dir("logits");
  for (const char* f : {"backbone.onnx", "fc.json", "preprocess.json"})
    std::filesystem::copy_file(test::fixtures() / "onnx_bundle" / f, dir.path / f);
  EXPECT_NO_THROW(load_bundle(dir.path));
  auto fc = nlohmann::json::parse(test::slurp(dir.path / "fc.json"));
  fc["bias"][0] = fc["bias"][0].get<double>() + 0.5;
  std::ofstream(dir.path / "fc.json") << fc.dump();
  EXPECT_EQ(code_of([&] { load_bundle(dir.path); }), Errc::ProbeFailure);
}

TEST(Onnx, MalformedGraph) {
  EXPECT_EQ(code_of([] { onnx::Graph::parse("definitely not a protobuf"); }), Errc::BackendFailure);
}
