#include "eac/concept_store.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eac/error.hpp"

namespace eac {

using nlohmann::json;

Mask decode_rle(std::span<const std::int64_t> counts, Eigen::Index height, Eigen::Index width) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw Error(Errc::NegativeRun, "run length " + std::to_string(c));
    total += c;
  }
  if (total != height * width)
    throw Error(Errc::RleLengthMismatch, "runs sum to " + std::to_string(total) + ", expected " +
                                             std::to_string(height * width));
  Mask mask = Mask::Zero(height, width);
  bool* px = mask.data();
  bool value = false;
  for (std::int64_t c : counts) {
    std::fill(px, px + c, value);
    px += c;
    value = !value;
  }
  return mask;
}

std::vector<std::int64_t> encode_rle(const Mask& mask) {
  std::vector<std::int64_t> counts;
  const bool* px = mask.data();
  const Eigen::Index size = mask.size();
  bool value = false;
  std::int64_t run = 0;
  for (Eigen::Index i = 0; i < size; ++i) {
    if (px[i] != value) {
      counts.push_back(run);
      run = 0;
      value = px[i];
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

namespace {

template <typename T>
T get_required(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(Errc::MalformedManifest, std::string("missing '") + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedManifest, std::string("bad '") + key + "' in " + where + ": " + e.what());
  }
}

}  // namespace

ConceptSet parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedManifest, e.what());
  }
  if (!doc.is_object()) throw Error(Errc::MalformedManifest, "top level must be an object");

  const json image = get_required<json>(doc, "image", "manifest");
  ConceptSet cs;
  cs.image_width = get_required<Eigen::Index>(image, "width", "image");
  cs.image_height = get_required<Eigen::Index>(image, "height", "image");
  if (cs.image_width <= 0 || cs.image_height <= 0)
    throw Error(Errc::MalformedManifest, "image dimensions must be positive");
  if (image.contains("path") && !image["path"].is_null())
    cs.image_path = get_required<std::string>(image, "path", "image");

  const json concepts = get_required<json>(doc, "concepts", "manifest");
  if (!concepts.is_array()) throw Error(Errc::MalformedManifest, "'concepts' must be an array");
  if (concepts.empty()) throw Error(Errc::EmptyConceptSet, "manifest lists no concepts");

  for (std::size_t k = 0; k < concepts.size(); ++k) {
    const json& c = concepts[k];
    const std::string where = "concept " + std::to_string(k);
    ConceptMask m;
    m.id = get_required<int>(c, "id", where.c_str());
    if (m.id != static_cast<int>(k))
      throw Error(Errc::MalformedManifest, where + " has id " + std::to_string(m.id));
    if (c.contains("name") && !c["name"].is_null()) m.name = get_required<std::string>(c, "name", where.c_str());

    const json rle = get_required<json>(c, "rle", where.c_str());
    const auto size = get_required<std::vector<Eigen::Index>>(rle, "size", where.c_str());
    const auto counts = get_required<std::vector<std::int64_t>>(rle, "counts", where.c_str());
    if (size.size() != 2) throw Error(Errc::MalformedManifest, where + " rle.size must be [H, W]");
    if (size[0] != cs.image_height || size[1] != cs.image_width)
      throw Error(Errc::DimensionMismatch, where + " is " + std::to_string(size[0]) + "x" +
                                               std::to_string(size[1]) + ", image is " +
                                               std::to_string(cs.image_height) + "x" +
                                               std::to_string(cs.image_width));
    try {
      m.bitmap = decode_rle(counts, size[0], size[1]);
    } catch (const Error& e) {
      throw Error(Errc::MalformedManifest, where + ": " + e.what());
    }
    m.area = m.bitmap.count();
    if (m.area == 0) throw Error(Errc::MalformedManifest, where + " is empty");
    cs.concepts.push_back(std::move(m));
  }
  return cs;
}

ConceptSet load_concepts(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open manifest " + manifest_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string to_manifest(const ConceptSet& cs) {
  json image = {{"width", cs.image_width}, {"height", cs.image_height}};
  if (cs.image_path) image["path"] = *cs.image_path;
  json concepts = json::array();
  for (const auto& c : cs.concepts) {
    json entry = {{"id", c.id}};
    if (c.name) entry["name"] = *c.name;
    entry["rle"] = {{"size", {c.bitmap.rows(), c.bitmap.cols()}}, {"counts", encode_rle(c.bitmap)}};
    concepts.push_back(std::move(entry));
  }
  return json{{"image", image}, {"concepts", concepts}}.dump() + "\n";
}

Mask coverage(const ConceptSet& cs) {
  Mask covered = Mask::Zero(cs.image_height, cs.image_width);
  for (const auto& c : cs.concepts) covered = covered || c.bitmap;
  return covered;
}

ConceptSet complete_with_background(ConceptSet cs) {
  const Mask rest = !coverage(cs);
  const Eigen::Index area = rest.count();
  if (area > 0) {
    ConceptMask bg;
    bg.id = cs.n();
    bg.bitmap = rest;
    bg.area = area;
    bg.name = "background";
    cs.concepts.push_back(std::move(bg));
  }
  cs.has_background = true;
  return cs;
}

void validate(const ConceptSet& cs) {
  if (cs.concepts.empty()) throw Error(Errc::EmptyConceptSet, "no concepts");
  for (int i = 0; i < cs.n(); ++i) {
    const auto& c = cs.concepts[i];
    if (c.id != i) throw Error(Errc::MalformedManifest, "concept ids must be 0..n-1");
    if (c.bitmap.rows() != cs.image_height || c.bitmap.cols() != cs.image_width)
      throw Error(Errc::DimensionMismatch, "concept " + std::to_string(i) + " has the wrong size");
    if (c.area < 1 || c.area != c.bitmap.count())
      throw Error(Errc::MalformedManifest, "concept " + std::to_string(i) + " area is inconsistent");
  }
  if (cs.has_background && !coverage(cs).all())
    throw Error(Errc::MalformedManifest, "background-completed set leaves pixels uncovered");
}

}  // namespace eac
