#include <gtest/gtest.h>

#include "eac/concept_store.hpp"
#include "eac/error.hpp"
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

std::string manifest_with(const std::string& concepts, int w = 4, int h = 3) {
  return R"({"image": {"width": )" + std::to_string(w) + R"(, "height": )" + std::to_string(h) +
         R"(}, "concepts": )" + concepts + "}";
}

}  // namespace

TEST(Rle, SingleZeroRun) {
  const std::vector<std::int64_t> counts{12};
  const Mask m = decode_rle(counts, 3, 4);
  EXPECT_EQ(m.count(), 0);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 4);
}

TEST(Rle, SingleOneRun) {
  const std::vector<std::int64_t> counts{0, 12};
  EXPECT_EQ(decode_rle(counts, 3, 4).count(), 12);
}

TEST(Rle, ColumnMajorRuns) {
  const std::vector<std::int64_t> counts{2, 3, 7};
  const Mask m = decode_rle(counts, 3, 4);
  // Column-major linear index k -> (k % H, k / H).
  for (int k = 0; k < 12; ++k) EXPECT_EQ(m(k % 3, k / 3), k >= 2 && k <= 4) << k;
}

TEST(Rle, Errors) {
  const std::vector<std::int64_t> short_counts{2, 3};
  EXPECT_EQ(code_of([&] { decode_rle(short_counts, 3, 4); }), Errc::RleLengthMismatch);
  const std::vector<std::int64_t> negative{14, -2};
  EXPECT_EQ(code_of([&] { decode_rle(negative, 3, 4); }), Errc::NegativeRun);
}

TEST(Rle, RoundTripRandomGrids) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = 1 + static_cast<Eigen::Index>(rng.below(17));
    const auto w = 1 + static_cast<Eigen::Index>(rng.below(17));
    Mask m(h, w);
    const double density = rng.uniform01();
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x) m(y, x) = rng.uniform01() < density;
    const auto counts = encode_rle(m);
    EXPECT_TRUE((decode_rle(counts, h, w) == m).all());
  }
}

TEST(Manifest, ThreeRectsFixture) {
  const ConceptSet cs = load_concepts(test::fixtures() / "three_rects.json");
  ASSERT_EQ(cs.n(), 3);
  EXPECT_EQ(cs.image_width, 64);
  EXPECT_EQ(cs.image_height, 64);
  // Rectangles: rows 4..19 x cols 6..25, rows 30..49 x cols 10..21, rows 8..55 x cols 40..57.
  EXPECT_EQ(cs.concepts[0].area, 16 * 20);
  EXPECT_EQ(cs.concepts[1].area, 20 * 12);
  EXPECT_EQ(cs.concepts[2].area, 48 * 18);
  EXPECT_TRUE(cs.concepts[0].bitmap(4, 6));
  EXPECT_TRUE(cs.concepts[0].bitmap(19, 25));
  EXPECT_FALSE(cs.concepts[0].bitmap(20, 25));
  EXPECT_EQ(cs.concepts[2].name.value_or(""), "blue bar");
  EXPECT_FALSE(cs.has_background);
}

TEST(Manifest, FullCoverSingleConcept) {
  const ConceptSet cs = parse_manifest(manifest_with(R"([{"id": 0, "rle": {"size": [3, 4], "counts": [0, 12]}}])"));
  ASSERT_EQ(cs.n(), 1);
  EXPECT_EQ(cs.concepts[0].area, 12);
}

TEST(Manifest, Errors) {
  EXPECT_EQ(code_of([] { parse_manifest(manifest_with("[]")); }), Errc::EmptyConceptSet);
  EXPECT_EQ(code_of([] { parse_manifest("{not json"); }), Errc::MalformedManifest);
  EXPECT_EQ(code_of([] { parse_manifest(manifest_with(R"([{"id": 0, "rle": {"size": [4, 4], "counts": [0, 16]}}])")); }),
            Errc::DimensionMismatch);
  EXPECT_EQ(code_of([] { parse_manifest(manifest_with(R"([{"id": 0, "rle": {"size": [3, 4], "counts": [12]}}])")); }),
            Errc::MalformedManifest);
  EXPECT_EQ(code_of([] { parse_manifest(manifest_with(R"([{"id": 1, "rle": {"size": [3, 4], "counts": [0, 12]}}])")); }),
            Errc::MalformedManifest);
  EXPECT_EQ(code_of([] { load_concepts(test::fixtures() / "does_not_exist.json"); }), Errc::IoFailure);
}

TEST(Manifest, RoundTripThroughWriter) {
  const ConceptSet cs = load_concepts(test::fixtures() / "three_rects.json");
  const ConceptSet again = parse_manifest(to_manifest(cs));
  ASSERT_EQ(again.n(), cs.n());
  for (int i = 0; i < cs.n(); ++i) EXPECT_TRUE((again.concepts[i].bitmap == cs.concepts[i].bitmap).all());
}

TEST(Background, AlreadyCoveredUnchanged) {
  ConceptSet cs = parse_manifest(manifest_with(R"([{"id": 0, "rle": {"size": [3, 4], "counts": [0, 12]}}])"));
  const ConceptSet out = complete_with_background(cs);
  EXPECT_EQ(out.n(), 1);
  EXPECT_TRUE(out.has_background);
}

TEST(Background, LeftHalfGetsRightHalf) {
  // 3x4, left two columns = first 6 column-major pixels.
  const ConceptSet out =
      complete_with_background(parse_manifest(manifest_with(R"([{"id": 0, "rle": {"size": [3, 4], "counts": [0, 6, 6]}}])")));
  ASSERT_EQ(out.n(), 2);
  const Mask& bg = out.concepts[1].bitmap;
  EXPECT_EQ(bg.count(), 6);
  EXPECT_TRUE(bg.rightCols(2).all());
  EXPECT_FALSE(bg.leftCols(2).any());
}

TEST(Background, OverlappingMasksComplement) {
  // 10x10: two overlapping blocks covering 70 pixels together.
  ConceptSet cs;
  cs.image_width = 10;
  cs.image_height = 10;
  for (int i = 0; i < 2; ++i) {
    ConceptMask m;
    m.id = i;
    m.bitmap = Mask::Constant(10, 10, false);
    if (i == 0) m.bitmap.block(0, 0, 10, 5).setConstant(true);   // 50
    else m.bitmap.block(0, 3, 10, 4).setConstant(true);          // cols 3..6, 20 new
    m.area = m.bitmap.count();
    cs.concepts.push_back(m);
  }
  const ConceptSet out = complete_with_background(cs);
  ASSERT_EQ(out.n(), 3);
  EXPECT_EQ(out.concepts[2].area, 30);
  EXPECT_TRUE(coverage(out).all());
  EXPECT_FALSE((out.concepts[2].bitmap && coverage(cs)).any());
}

TEST(Background, FixtureCoversEverything) {
  const ConceptSet out = complete_with_background(load_concepts(test::fixtures() / "three_rects.json"));
  ASSERT_EQ(out.n(), 4);
  EXPECT_TRUE(coverage(out).all());
  EXPECT_EQ(out.concepts[3].area, 64 * 64 - 320 - 240 - 864);
  EXPECT_NO_THROW(validate(out));
}

TEST(Manifest, Deterministic) {
  const ConceptSet a = load_concepts(test::fixtures() / "three_rects.json");
  const ConceptSet b = load_concepts(test::fixtures() / "three_rects.json");
  EXPECT_EQ(to_manifest(a), to_manifest(b));
}
