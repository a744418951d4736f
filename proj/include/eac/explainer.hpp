#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eac/concept_store.hpp"
#include "eac/image.hpp"
#include "eac/masking.hpp"
#include "eac/shapley.hpp"

namespace eac {

using ordered_json = nlohmann::ordered_json;

struct Explanation {
  std::string image;
  int target_class = 0;
  std::string label;
  ShapleyResult shapley;
  std::vector<int> ranking;
  std::vector<int> selected;
  ordered_json config = ordered_json::object();
  ordered_json timings = ordered_json::object();
  std::optional<ordered_json> surrogate;  // training summary when a surrogate ran
  std::optional<ordered_json> eval;

  int n() const { return shapley.n(); }
  std::uint64_t seed() const { return shapley.seed; }
};

/// Concept indices by value, largest first; equal values keep ascending index.
std::vector<int> ranking(const Eigen::Ref<const Eigen::VectorXd>& values);

/// The subset with the largest summed value: every strictly positive concept,
/// or the single best concept when none is positive. Ascending order.
std::vector<int> select_explanation(const ShapleyResult& r);

/// apply_coalition with exactly the selected concepts visible.
Image8 render_explanation(const Image8& image, const ConceptSet& cs, const std::vector<int>& selected,
                          BaselineFill fill);

/// Rounds to 6 significant digits so the serialized form is stable.
double round_sig6(double v);

/// Copy of `j` with every floating value passed through round_sig6.
ordered_json round_floats(const ordered_json& j);

ordered_json to_json(const Explanation& e);
Explanation explanation_from_json(const ordered_json& doc);

/// Serialized report text, newline terminated.
std::string report_text(const Explanation& e);

/// Writes `text` to a sibling temp file then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& text);

void write_report(const Explanation& e, const std::filesystem::path& path);
Explanation read_report(const std::filesystem::path& path);

}  // namespace eac
