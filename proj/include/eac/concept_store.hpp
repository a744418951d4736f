#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eac/image.hpp"

namespace eac {

/// One concept: a pixel region of the explained image.
struct ConceptMask {
  int id = 0;
  Mask bitmap;  // height x width
  Eigen::Index area = 0;
  std::optional<std::string> name;
};

/// The players of the attribution game. Immutable once built.
struct ConceptSet {
  Eigen::Index image_width = 0;
  Eigen::Index image_height = 0;
  std::vector<ConceptMask> concepts;
  bool has_background = false;
  std::optional<std::string> image_path;

  int n() const { return static_cast<int>(concepts.size()); }
};

/// Expands uncompressed COCO run lengths (column-major, first run counts
/// zeros) into a height x width grid.
Mask decode_rle(std::span<const std::int64_t> counts, Eigen::Index height, Eigen::Index width);

/// Inverse of decode_rle. The first count is zero when pixel 0 is set.
std::vector<std::int64_t> encode_rle(const Mask& mask);

/// Parses manifest text. Masks keep file order; ids are checked to be 0..n-1.
ConceptSet parse_manifest(std::string_view text);

ConceptSet load_concepts(const std::filesystem::path& manifest_path);

/// Serializes a concept set back into manifest JSON.
std::string to_manifest(const ConceptSet& cs);

/// Pixel-wise OR of all masks.
Mask coverage(const ConceptSet& cs);

/// Appends the uncovered remainder as one more concept ("background") when
/// the masks leave pixels uncovered; always sets has_background.
ConceptSet complete_with_background(ConceptSet cs);

/// Validates the invariants of a set built in memory: n >= 1, ids 0..n-1,
/// bitmap sizes, area bookkeeping, and full coverage when has_background.
void validate(const ConceptSet& cs);

}  // namespace eac
