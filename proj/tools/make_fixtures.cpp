// Regenerates the checked-in fixtures: make_fixtures <fixtures-dir>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "eac/concept_store.hpp"
#include "eac/image.hpp"
#include "eac/model_oracle.hpp"
#include "eac/rng.hpp"

namespace {

constexpr int kSide = 64;

struct Rect {
  int row0, row1, col0, col1;  // inclusive
  std::array<std::uint8_t, 3> color;
};

const Rect kRects[] = {
    {4, 19, 6, 25, {200, 40, 40}},
    {30, 49, 10, 21, {40, 180, 60}},
    {8, 55, 40, 57, {50, 70, 210}},
};

eac::Mask rect_mask(const Rect& r) {
  eac::Mask m = eac::Mask::Constant(kSide, kSide, false);
  m.block(r.row0, r.col0, r.row1 - r.row0 + 1, r.col1 - r.col0 + 1).setConstant(true);
  return m;
}

eac::Image8 scene() {
  eac::Image8 img(kSide, kSide, 3);
  eac::Rng rng(2024);
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x)
      for (int c = 0; c < 3; ++c) img[c](y, x) = static_cast<std::uint8_t>(110 + rng.below(30));
  for (const Rect& r : kRects)
    for (int y = r.row0; y <= r.row1; ++y)
      for (int x = r.col0; x <= r.col1; ++x)
        for (int c = 0; c < 3; ++c) {
          const int jitter = static_cast<int>(rng.below(21)) - 10;
          img[c](y, x) = static_cast<std::uint8_t>(std::clamp(r.color[static_cast<std::size_t>(c)] + jitter, 0, 255));
        }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <fixtures-dir>\n");
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  eac::ConceptSet cs;
  cs.image_width = kSide;
  cs.image_height = kSide;
  cs.image_path = "scene.png";
  const char* names[] = {"red block", "green block", "blue bar"};
  for (int i = 0; i < 3; ++i) {
    eac::ConceptMask m;
    m.id = i;
    m.bitmap = rect_mask(kRects[i]);
    m.area = m.bitmap.count();
    m.name = names[i];
    cs.concepts.push_back(std::move(m));
  }
  std::ofstream(dir / "three_rects.json") << eac::to_manifest(cs);
  eac::write_png(scene(), dir / "scene.png");

  const eac::ModelBundle toy = eac::builtin_toy_model(7, 4, 5);
  eac::save_toy_bundle(toy, dir / "toy_bundle", eac::BackboneFormat::both);
  return 0;
}
