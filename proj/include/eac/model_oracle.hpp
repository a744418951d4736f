#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eac/image.hpp"

namespace eac {

/// Class-probability vector: entries in [0, 1], summing to 1.
using ProbVec = Eigen::VectorXd;

/// Numerically stable softmax (max-subtracted).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = logits.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

/// True when every entry lies in [0, 1] and the sum is within tol of 1.
bool is_prob_vec(const Eigen::Ref<const Eigen::VectorXd>& p, double tol = 1e-6);

struct PreprocessSpec {
  Eigen::Index resize_height = 0;
  Eigen::Index resize_width = 0;
  Eigen::Vector3d channel_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d channel_std = Eigen::Vector3d::Ones();
};

/// Scales 8-bit pixels to [0, 1], resizes, then normalizes per channel.
/// Throws BackendFailure unless the image has exactly three channels.
ImageF preprocess(const Image8& image, const PreprocessSpec& spec);

/// Image -> feature vector part of the classifier. Implementations are
/// immutable after construction and safe to call concurrently.
class Backbone {
 public:
  virtual ~Backbone() = default;
  /// `input` is already preprocessed (3 x resize_height x resize_width).
  virtual Eigen::VectorXf extract(const ImageF& input) const = 0;
  /// Optional logits the backbone computes itself, used for the load-time
  /// consistency probe. Empty when the backbone does not declare them.
  virtual Eigen::VectorXf declared_logits(const ImageF& input) const;
  virtual std::string kind() const = 0;
};

/// Backbone executed from an ONNX file: input float32 [1,3,H,W] named
/// "input", output [1,m] named "features" (and optionally "logits").
class OnnxBackbone final : public Backbone {
 public:
  explicit OnnxBackbone(const std::filesystem::path& path);
  Eigen::VectorXf extract(const ImageF& input) const override;
  Eigen::VectorXf declared_logits(const ImageF& input) const override;
  std::string kind() const override { return "onnx"; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Closed-form toy backbone: per-cell channel means over a grid x grid
/// partition of the preprocessed image, ordered channel, cell row, cell col.
/// Accumulates in float in the same order as the ONNX AveragePool kernel so
/// both execution paths agree bit for bit.
class GridMeanBackbone final : public Backbone {
 public:
  explicit GridMeanBackbone(int grid) : grid_(grid) {}
  Eigen::VectorXf extract(const ImageF& input) const override;
  std::string kind() const override { return "grid_means"; }
  int grid() const { return grid_; }

 private:
  int grid_;
};

/// The classifier under explanation: backbone followed by one linear layer.
struct ModelBundle {
  std::shared_ptr<const Backbone> backbone;
  Eigen::MatrixXd fc_weight;  // num_classes x m
  Eigen::VectorXd fc_bias;    // num_classes
  std::vector<std::string> labels;
  PreprocessSpec preprocess;

  Eigen::Index m() const { return fc_weight.cols(); }
  Eigen::Index num_classes() const { return fc_weight.rows(); }
};

Eigen::VectorXd features(const ModelBundle& bundle, const Image8& image);

/// The frozen terminal layer: fc_weight * features + fc_bias.
template <typename Derived>
Eigen::VectorXd fc_logits(const ModelBundle& bundle, const Eigen::MatrixBase<Derived>& feats) {
  return bundle.fc_weight * feats + bundle.fc_bias;
}

/// softmax(fc_logits(features(image))).
ProbVec predict(const ModelBundle& bundle, const Image8& image);

/// Loads a bundle directory:
///   fc.json          {"weight": [[...]], "bias": [...], "labels": [...]}
///   preprocess.json  {"resize": [H, W], "mean": [r,g,b], "std": [r,g,b]}
///   backbone.onnx    ONNX backbone, or
///   builtin.json     {"kind": "grid_means", "grid": g} selecting the
///                    closed-form toy backbone instead of the ONNX file
///   probe.json       optional {"probes": [{"color": [r,g,b], "height": h,
///                    "width": w, "probs": [...]}]} recorded by an exporter
/// Runs the consistency probe before returning.
ModelBundle load_bundle(const std::filesystem::path& dir);

/// How save_bundle stores the toy backbone.
enum class BackboneFormat { builtin_marker, onnx_graph, both };

/// Writes a toy bundle (GridMeanBackbone only) in the layout load_bundle reads.
void save_toy_bundle(const ModelBundle& bundle, const std::filesystem::path& dir,
                     BackboneFormat format = BackboneFormat::both);

/// Deterministic toy classifier. m = 3 * grid^2 grid-mean features; the
/// preprocessing resizes to (16 * grid) square with mean 0 and std 1, so
/// features are channel means in [0, 1]. fc_weight is filled row by row,
/// then fc_bias, each entry Rng(seed).uniform_sym() (see rng.hpp).
ModelBundle builtin_toy_model(std::uint64_t seed, int grid, int num_classes);

/// Runs the load-time consistency checks on an in-memory bundle.
void verify_bundle(const ModelBundle& bundle);

}  // namespace eac
