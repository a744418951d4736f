#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace eac::onnx {

/// Dense row-major tensor. Float tensors carry activations; int64 tensors
/// only appear in shape arithmetic (Reshape targets, Shape/Gather chains).
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;
  std::vector<std::int64_t> ints;
  bool is_int = false;

  std::int64_t numel() const;
  static Tensor floats(std::vector<std::int64_t> shape, std::vector<float> values);
  static Tensor int64s(std::vector<std::int64_t> shape, std::vector<std::int64_t> values);
};

/// Inference-only interpreter for the operator subset that image-classifier
/// backbones exported by common frameworks use: Conv, BatchNormalization,
/// Relu/LeakyRelu/Sigmoid/Tanh/Clip, Max/Average/Global pooling, Gemm,
/// MatMul, Add/Sub/Mul/Div (numpy broadcasting), Flatten, Reshape,
/// Squeeze/Unsqueeze, Transpose, Concat, Shape, Gather, ReduceMean,
/// Identity/Dropout and Constant.
///
/// Running is const and allocates per call, so one graph may be shared by
/// concurrent callers.
class Graph {
 public:
  static Graph load(const std::filesystem::path& path);
  static Graph parse(const std::string& bytes);

  std::map<std::string, Tensor> run(const std::map<std::string, Tensor>& inputs) const;
  Tensor run(const std::string& input_name, const Tensor& input, const std::string& output_name) const;

  /// Declared graph inputs that are not initializers.
  const std::vector<std::string>& input_names() const { return inputs_; }
  const std::vector<std::string>& output_names() const { return outputs_; }

  struct Node;

 private:
  std::vector<std::shared_ptr<const Node>> nodes_;
  std::map<std::string, Tensor> initializers_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

/// Serialized model mapping float32 [1, channels, height, width] "input" to
/// [1, channels * grid * grid] "features": per-cell means over a grid x grid
/// partition, channel-major then row then column (AveragePool + Flatten).
/// height and width must be divisible by grid.
std::string make_grid_mean_model(int channels, int height, int width, int grid);

}  // namespace eac::onnx
