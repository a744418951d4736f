#include "eac/model_oracle.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eac/error.hpp"
#include "eac/onnx_graph.hpp"
#include "eac/rng.hpp"

namespace eac {

using nlohmann::json;

bool is_prob_vec(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) {
  if (p.size() == 0 || !p.allFinite()) return false;
  if ((p.array() < 0.0).any() || (p.array() > 1.0).any()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

ImageF preprocess(const Image8& image, const PreprocessSpec& spec) {
  if (image.num_channels() != 3)
    throw Error(Errc::BackendFailure, "expected a 3-channel image, got " + std::to_string(image.num_channels()));
  ImageF scaled = image.cast<float>();
  for (auto& ch : scaled.channels) ch /= 255.0f;
  ImageF out = resize_bilinear(scaled, spec.resize_height, spec.resize_width);
  for (int c = 0; c < 3; ++c) {
    const auto mean = static_cast<float>(spec.channel_mean[c]);
    const auto std = static_cast<float>(spec.channel_std[c]);
    out[c] = (out[c] - mean) / std;
  }
  return out;
}

Eigen::VectorXf Backbone::declared_logits(const ImageF&) const { return {}; }

// ------------------------------------------------------------------ ONNX

namespace {

onnx::Tensor to_tensor(const ImageF& img) {
  const Eigen::Index h = img.height(), w = img.width();
  std::vector<float> values(static_cast<std::size_t>(3 * h * w));
  for (int c = 0; c < 3; ++c)
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x) values[(c * h + y) * w + x] = img[c](y, x);
  return onnx::Tensor::floats({1, 3, h, w}, std::move(values));
}

Eigen::VectorXf flat(const onnx::Tensor& t) {
  if (t.is_int) throw Error(Errc::BackendFailure, "backbone produced an integer tensor");
  return Eigen::Map<const Eigen::VectorXf>(t.values.data(), static_cast<Eigen::Index>(t.values.size()));
}

}  // namespace

struct OnnxBackbone::Impl {
  onnx::Graph graph;
  bool has_logits = false;
};

OnnxBackbone::OnnxBackbone(const std::filesystem::path& path) {
  auto impl = std::make_shared<Impl>();
  impl->graph = onnx::Graph::load(path);
  const auto& ins = impl->graph.input_names();
  if (std::find(ins.begin(), ins.end(), "input") == ins.end())
    throw Error(Errc::ShapeMismatch, "backbone.onnx has no input named 'input'");
  const auto& outs = impl->graph.output_names();
  if (std::find(outs.begin(), outs.end(), "features") == outs.end())
    throw Error(Errc::ShapeMismatch, "backbone.onnx has no output named 'features'");
  impl->has_logits = std::find(outs.begin(), outs.end(), "logits") != outs.end();
  impl_ = std::move(impl);
}

Eigen::VectorXf OnnxBackbone::extract(const ImageF& input) const {
  return flat(impl_->graph.run("input", to_tensor(input), "features"));
}

Eigen::VectorXf OnnxBackbone::declared_logits(const ImageF& input) const {
  if (!impl_->has_logits) return {};
  return flat(impl_->graph.run("input", to_tensor(input), "logits"));
}

Eigen::VectorXf GridMeanBackbone::extract(const ImageF& input) const {
  const Eigen::Index h = input.height(), w = input.width();
  if (h % grid_ != 0 || w % grid_ != 0)
    throw Error(Errc::BackendFailure, "grid does not divide the preprocessed image size");
  const Eigen::Index ch = h / grid_, cw = w / grid_;
  const auto count = static_cast<float>(ch * cw);
  Eigen::VectorXf out(input.num_channels() * grid_ * grid_);
  Eigen::Index k = 0;
  for (int c = 0; c < input.num_channels(); ++c)
    for (int gy = 0; gy < grid_; ++gy)
      for (int gx = 0; gx < grid_; ++gx) {
        float acc = 0.0f;
        for (Eigen::Index y = gy * ch; y < (gy + 1) * ch; ++y)
          for (Eigen::Index x = gx * cw; x < (gx + 1) * cw; ++x) acc += input[c](y, x);
        out[k++] = acc / count;
      }
  return out;
}

// ---------------------------------------------------------------- bundle

Eigen::VectorXd features(const ModelBundle& bundle, const Image8& image) {
  return bundle.backbone->extract(preprocess(image, bundle.preprocess)).cast<double>();
}

ProbVec predict(const ModelBundle& bundle, const Image8& image) {
  const Eigen::VectorXd f = features(bundle, image);
  if (f.size() != bundle.m())
    throw Error(Errc::BackendFailure, "backbone returned " + std::to_string(f.size()) + " features, expected " +
                                          std::to_string(bundle.m()));
  return softmax(fc_logits(bundle, f));
}

void verify_bundle(const ModelBundle& bundle) {
  if (!bundle.backbone) throw Error(Errc::MissingArtifact, "bundle has no backbone");
  if (bundle.fc_weight.rows() == 0 || bundle.fc_weight.cols() == 0)
    throw Error(Errc::ShapeMismatch, "empty fc weight");
  if (bundle.fc_bias.size() != bundle.num_classes() ||
      static_cast<Eigen::Index>(bundle.labels.size()) != bundle.num_classes())
    throw Error(Errc::ShapeMismatch, "fc weight rows, bias length and label count disagree");
  const auto& pp = bundle.preprocess;
  if (pp.resize_height <= 0 || pp.resize_width <= 0) throw Error(Errc::ShapeMismatch, "resize must be positive");
  if ((pp.channel_std.array() <= 0.0).any()) throw Error(Errc::ShapeMismatch, "std entries must be positive");

  const Image8 probe = constant_image<std::uint8_t>(pp.resize_height, pp.resize_width, {128, 128, 128});
  const ImageF input = preprocess(probe, pp);
  const Eigen::VectorXd f = bundle.backbone->extract(input).cast<double>();
  if (f.size() != bundle.m())
    throw Error(Errc::ShapeMismatch, "backbone outputs " + std::to_string(f.size()) + " features but fc has " +
                                         std::to_string(bundle.m()) + " columns");
  const Eigen::VectorXd logits = fc_logits(bundle, f);
  if (!is_prob_vec(softmax(logits))) throw Error(Errc::ProbeFailure, "probe prediction is not a distribution");
  const Eigen::VectorXf declared = bundle.backbone->declared_logits(input);
  if (declared.size() > 0) {
    if (declared.size() != logits.size() || (declared.cast<double>() - logits).cwiseAbs().maxCoeff() > 1e-4)
      throw Error(Errc::ProbeFailure, "fc(features) disagrees with the backbone's own logits");
  }
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingArtifact, "missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ShapeMismatch, "cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(Errc::IoFailure, "cannot write " + path.string());
}

}  // namespace

ModelBundle load_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::MissingArtifact, "no bundle directory " + dir.string());
  for (const char* required : {"fc.json", "preprocess.json"})
    if (!std::filesystem::exists(dir / required)) throw Error(Errc::MissingArtifact, std::string("missing ") + required);

  ModelBundle b;
  try {
    const json fc = read_json(dir / "fc.json");
    const auto rows = fc.at("weight").get<std::vector<std::vector<double>>>();
    const auto bias = fc.at("bias").get<std::vector<double>>();
    b.labels = fc.at("labels").get<std::vector<std::string>>();
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    b.fc_weight.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw Error(Errc::ShapeMismatch, "ragged fc weight");
      b.fc_weight.row(static_cast<Eigen::Index>(r)) =
          Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), static_cast<Eigen::Index>(cols));
    }
    b.fc_bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));

    const json pp = read_json(dir / "preprocess.json");
    const auto resize = pp.at("resize").get<std::vector<Eigen::Index>>();
    const auto mean = pp.at("mean").get<std::vector<double>>();
    const auto std = pp.at("std").get<std::vector<double>>();
    if (resize.size() != 2 || mean.size() != 3 || std.size() != 3)
      throw Error(Errc::ShapeMismatch, "preprocess.json needs resize[2], mean[3], std[3]");
    b.preprocess.resize_height = resize[0];
    b.preprocess.resize_width = resize[1];
    b.preprocess.channel_mean = Eigen::Vector3d(mean[0], mean[1], mean[2]);
    b.preprocess.channel_std = Eigen::Vector3d(std[0], std[1], std[2]);
  } catch (const json::exception& e) {
    throw Error(Errc::ShapeMismatch, std::string("bad bundle metadata: ") + e.what());
  }

  if (std::filesystem::exists(dir / "builtin.json")) {
    const json marker = read_json(dir / "builtin.json");
    if (marker.value("kind", "") != "grid_means") throw Error(Errc::MissingArtifact, "unknown builtin backbone kind");
    b.backbone = std::make_shared<GridMeanBackbone>(marker.at("grid").get<int>());
  } else if (std::filesystem::exists(dir / "backbone.onnx")) {
    b.backbone = std::make_shared<OnnxBackbone>(dir / "backbone.onnx");
  } else {
    throw Error(Errc::MissingArtifact, "missing backbone.onnx");
  }

  verify_bundle(b);

  if (std::filesystem::exists(dir / "probe.json")) {
    const json probes = read_json(dir / "probe.json");
    for (const auto& p : probes.at("probes")) {
      const auto color = p.at("color").get<std::vector<std::uint8_t>>();
      const Image8 img = constant_image<std::uint8_t>(p.at("height").get<Eigen::Index>(),
                                                      p.at("width").get<Eigen::Index>(), color);
      const auto expected = p.at("probs").get<std::vector<double>>();
      const ProbVec got = predict(b, img);
      if (static_cast<Eigen::Index>(expected.size()) != got.size())
        throw Error(Errc::ProbeFailure, "probe.json class count differs");
      const double gap =
          (got - Eigen::Map<const Eigen::VectorXd>(expected.data(), got.size())).cwiseAbs().maxCoeff();
      if (gap > 1e-4) throw Error(Errc::ProbeFailure, "probe prediction differs by " + std::to_string(gap));
    }
  }
  return b;
}

void save_toy_bundle(const ModelBundle& bundle, const std::filesystem::path& dir, BackboneFormat format) {
  const auto* toy = dynamic_cast<const GridMeanBackbone*>(bundle.backbone.get());
  if (!toy) throw Error(Errc::InvalidArgument, "save_toy_bundle needs a grid-mean backbone");
  std::filesystem::create_directories(dir);

  json weight = json::array();
  for (Eigen::Index r = 0; r < bundle.fc_weight.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < bundle.fc_weight.cols(); ++c) row.push_back(bundle.fc_weight(r, c));
    weight.push_back(std::move(row));
  }
  json bias = json::array();
  for (Eigen::Index r = 0; r < bundle.fc_bias.size(); ++r) bias.push_back(bundle.fc_bias[r]);
  write_text(dir / "fc.json", json{{"weight", weight}, {"bias", bias}, {"labels", bundle.labels}}.dump() + "\n");

  const auto& pp = bundle.preprocess;
  write_text(dir / "preprocess.json",
             json{{"resize", {pp.resize_height, pp.resize_width}},
                  {"mean", {pp.channel_mean[0], pp.channel_mean[1], pp.channel_mean[2]}},
                  {"std", {pp.channel_std[0], pp.channel_std[1], pp.channel_std[2]}}}
                     .dump() + "\n");

  if (format != BackboneFormat::builtin_marker)
    write_text(dir / "backbone.onnx", onnx::make_grid_mean_model(3, static_cast<int>(pp.resize_height),
                                                                 static_cast<int>(pp.resize_width), toy->grid()));
  if (format != BackboneFormat::onnx_graph)
    write_text(dir / "builtin.json", json{{"kind", "grid_means"}, {"grid", toy->grid()}}.dump() + "\n");
}

ModelBundle builtin_toy_model(std::uint64_t seed, int grid, int num_classes) {
  if (grid < 2 || num_classes < 2) throw Error(Errc::InvalidArgument, "toy model needs grid >= 2 and >= 2 classes");
  ModelBundle b;
  b.backbone = std::make_shared<GridMeanBackbone>(grid);
  const Eigen::Index m = 3 * grid * grid;
  Rng rng(seed);
  b.fc_weight.resize(num_classes, m);
  for (Eigen::Index r = 0; r < num_classes; ++r)
    for (Eigen::Index c = 0; c < m; ++c) b.fc_weight(r, c) = rng.uniform_sym();
  b.fc_bias.resize(num_classes);
  for (Eigen::Index r = 0; r < num_classes; ++r) b.fc_bias[r] = rng.uniform_sym();
  for (int k = 0; k < num_classes; ++k) b.labels.push_back("class_" + std::to_string(k));
  b.preprocess.resize_height = 16 * grid;
  b.preprocess.resize_width = 16 * grid;
  return b;
}

}  // namespace eac
