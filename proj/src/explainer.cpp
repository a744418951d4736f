#include "eac/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "eac/error.hpp"

namespace eac {

std::vector<int> ranking(const Eigen::Ref<const Eigen::VectorXd>& values) {
  std::vector<int> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  return order;
}

std::vector<int> select_explanation(const ShapleyResult& r) {
  std::vector<int> out;
  for (int i = 0; i < r.n(); ++i)
    if (r.values[i] > 0.0) out.push_back(i);
  if (out.empty() && r.n() > 0) out.push_back(ranking(r.values).front());
  return out;
}

Image8 render_explanation(const Image8& image, const ConceptSet& cs, const std::vector<int>& selected,
                          BaselineFill fill) {
  for (int i : selected)
    if (i < 0 || i >= cs.n()) throw Error(Errc::InvalidArgument, "selected concept " + std::to_string(i) + " out of range");
  return apply_coalition(image, cs, Coalition::of(cs.n(), selected), fill);
}

double round_sig6(double v) {
  if (v == 0.0) return 0.0;
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

namespace {

ordered_json values_array(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ShapleyMode parse_mode(const std::string& text) {
  if (text == "exact") return ShapleyMode::exact;
  if (text == "mc") return ShapleyMode::mc;
  throw Error(Errc::MalformedManifest, "unknown shapley mode '" + text + "'");
}

}  // namespace

ordered_json round_floats(const ordered_json& j) {
  if (j.is_number_float()) return round_sig6(j.get<double>());
  if (j.is_array() || j.is_object()) {
    ordered_json out = j;
    for (auto& v : out) v = round_floats(v);
    return out;
  }
  return j;
}

ordered_json to_json(const Explanation& e) {
  ordered_json doc;
  doc["image"] = e.image;
  doc["n_concepts"] = e.n();
  doc["target_class"] = e.target_class;
  doc["label"] = e.label;
  ordered_json phi = ordered_json::array();
  for (int i = 0; i < e.n(); ++i)
    phi.push_back({{"id", i}, {"value", e.shapley.values[i]}, {"stderr", e.shapley.std_error[i]}});
  doc["shapley"] = phi;
  doc["ranking"] = e.ranking;
  doc["selected"] = e.selected;
  doc["mode"] = to_string(e.shapley.mode);
  doc["utility_kind"] = to_string(e.shapley.utility_kind);
  doc["K"] = e.shapley.samples_per_concept;
  doc["seed"] = e.shapley.seed;
  doc["config"] = e.config;
  doc["timings"] = e.timings;
  if (e.surrogate) doc["surrogate"] = *e.surrogate;
  if (e.eval) doc["eval"] = *e.eval;
  return round_floats(doc);
}

Explanation explanation_from_json(const ordered_json& doc) {
  try {
    Explanation e;
    e.image = doc.at("image").get<std::string>();
    e.target_class = doc.at("target_class").get<int>();
    e.label = doc.at("label").get<std::string>();
    const auto& phi = doc.at("shapley");
    const int n = doc.at("n_concepts").get<int>();
    if (static_cast<int>(phi.size()) != n) throw Error(Errc::MalformedManifest, "shapley list length != n_concepts");
    e.shapley.values.resize(n);
    e.shapley.std_error.resize(n);
    for (const auto& entry : phi) {
      const int id = entry.at("id").get<int>();
      if (id < 0 || id >= n) throw Error(Errc::MalformedManifest, "shapley id out of range");
      e.shapley.values[id] = entry.at("value").get<double>();
      e.shapley.std_error[id] = entry.at("stderr").get<double>();
    }
    e.ranking = doc.at("ranking").get<std::vector<int>>();
    e.selected = doc.at("selected").get<std::vector<int>>();
    e.shapley.mode = parse_mode(doc.at("mode").get<std::string>());
    e.shapley.utility_kind = parse_utility_kind(doc.at("utility_kind").get<std::string>());
    e.shapley.samples_per_concept = doc.at("K").get<int>();
    e.shapley.seed = doc.at("seed").get<std::uint64_t>();
    e.config = doc.at("config");
    e.timings = doc.at("timings");
    if (doc.contains("surrogate")) e.surrogate = doc.at("surrogate");
    if (doc.contains("eval")) e.eval = doc.at("eval");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::MalformedManifest, std::string("bad report: ") + ex.what());
  }
}

std::string report_text(const Explanation& e) { return to_json(e).dump(2) + "\n"; }

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(Errc::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::IoFailure, "cannot rename onto " + path.string());
  }
}

void write_report(const Explanation& e, const std::filesystem::path& path) { write_atomic(path, report_text(e)); }

Explanation read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open report " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return explanation_from_json(ordered_json::parse(ss.str()));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(Errc::MalformedManifest, std::string("bad report: ") + ex.what());
  }
}

}  // namespace eac
