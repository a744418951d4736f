#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "eac/concept_store.hpp"
#include "eac/image.hpp"
#include "eac/model_oracle.hpp"
#include "eac/rng.hpp"
#include "eac/shapley.hpp"

namespace eac::test {

inline std::filesystem::path fixtures() { return EAC_FIXTURES_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("eac_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

/// Shapley values by averaging marginal contributions over all n! player
/// orderings. Independent of the subset-weight formula used by the library.
inline std::vector<double> shapley_by_permutations(const UtilityFn& u) {
  const int n = u.n();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  double count = 0;
  do {
    Coalition s(n);
    double prev = u(s);
    for (int p : order) {
      s.set(p);
      const double cur = u(s);
      phi[static_cast<std::size_t>(p)] += cur - prev;
      prev = cur;
    }
    count += 1;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : phi) v /= count;
  return phi;
}

/// Uniform [0,1] payoff for every coalition, u(empty) included.
inline TableGame random_game(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(std::size_t{1} << n);
  for (double& x : v) x = rng.uniform01();
  return TableGame(n, std::move(v));
}

/// One seeded toy scene: k random axis-aligned rectangles (possibly
/// overlapping) with distinct colours over a noisy background, plus a toy
/// classifier. After background completion n = k + 1.
struct ProceduralFixture {
  Image8 image;
  ConceptSet concepts;
  ModelBundle bundle;
};

inline ProceduralFixture procedural_fixture(std::uint64_t seed, int side = 64) {
  Rng rng(derive_seed(seed, 77));
  ProceduralFixture f;
  const int k = 3 + static_cast<int>(rng.below(5));  // 3..7 -> n = 4..8
  f.image = Image8(side, side, 3);
  for (int c = 0; c < 3; ++c) {
    const int base = 60 + static_cast<int>(rng.below(120));
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) f.image[c](y, x) = static_cast<std::uint8_t>(base + rng.below(25));
  }
  f.concepts.image_width = side;
  f.concepts.image_height = side;
  for (int i = 0; i < k; ++i) {
    const int h = 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(side / 2)));
    const int w = 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(side / 2)));
    const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(side - h)));
    const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(side - w)));
    std::array<int, 3> color;
    for (int& v : color) v = static_cast<int>(rng.below(256));
    ConceptMask m;
    m.id = i;
    m.bitmap = Mask::Constant(side, side, false);
    m.bitmap.block(r0, c0, h, w).setConstant(true);
    m.area = m.bitmap.count();
    for (int c = 0; c < 3; ++c)
      for (int y = r0; y < r0 + h; ++y)
        for (int x = c0; x < c0 + w; ++x) f.image[c](y, x) = static_cast<std::uint8_t>(color[static_cast<std::size_t>(c)]);
    f.concepts.concepts.push_back(std::move(m));
  }
  f.concepts = complete_with_background(std::move(f.concepts));
  f.bundle = builtin_toy_model(seed, 4, 5);
  return f;
}

}  // namespace eac::test
