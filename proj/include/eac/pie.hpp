#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eac/coalition.hpp"
#include "eac/concept_store.hpp"
#include "eac/masking.hpp"
#include "eac/model_oracle.hpp"

namespace eac {

/// Per-input surrogate variants.
///   pie            logits = fc(h(b)), fc copied from the target and frozen
///   pie_no_sharing same architecture, fc freshly initialized and trained
///   linear         logits = A b + c, no feature layer
enum class SurrogateMode { pie, pie_no_sharing, linear };

std::string to_string(SurrogateMode mode);
SurrogateMode parse_surrogate_mode(const std::string& text);

struct PieConfig {
  int num_samples = 1000;
  double holdout_fraction = 0.2;
  std::optional<int> hidden_width;  // none = h is one affine map n -> m
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;  // labeling only; training is single-threaded

  /// Throws InvalidArgument unless num_samples >= 2 + n and
  /// 0 < holdout_fraction < 0.5 (and the other knobs are positive).
  void validate(int n) const;
};

struct TrainSample {
  Coalition coalition;
  ProbVec target_dist;
};

/// Draws coalitions with every bit an independent fair coin, always
/// including the empty and full coalitions first, and labels each with the
/// target model's distribution on the masked image. Coalitions are unique
/// whenever 2^n >= num_samples; otherwise repeats are kept so the set still
/// has num_samples entries. Each distinct coalition is evaluated once.
std::vector<TrainSample> sample_dataset(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                                        BaselineFill fill, const PieConfig& config);

/// f'(b): coalition indicator -> class distribution.
class Surrogate final : public CoalitionModel {
 public:
  Surrogate() = default;

  /// Untrained surrogate. Trainable weights draw from Rng(seed); biases start
  /// at zero. In pie mode fc is copied from the bundle.
  static Surrogate init(SurrogateMode mode, int n, const ModelBundle& bundle, const std::optional<int>& hidden_width,
                        std::uint64_t seed);

  SurrogateMode mode() const { return mode_; }
  int n() const { return n_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index num_classes() const { return num_classes_; }
  bool has_hidden() const { return hidden_weight_.size() > 0; }

  Eigen::VectorXd logits(const Coalition& s) const;
  ProbVec distribution(const Coalition& s) const override;

  /// Parameters, exposed for inspection and checkpointing.
  const Eigen::MatrixXd& hidden_weight() const { return hidden_weight_; }
  const Eigen::VectorXd& hidden_bias() const { return hidden_bias_; }
  const Eigen::MatrixXd& h_weight() const { return h_weight_; }
  const Eigen::VectorXd& h_bias() const { return h_bias_; }
  const Eigen::MatrixXd& fc_weight() const { return fc_weight_; }
  const Eigen::VectorXd& fc_bias() const { return fc_bias_; }

  /// Sets every parameter of h (and of the linear map) to zero.
  void zero_h();

  void save(const std::filesystem::path& path) const;
  static Surrogate load(const std::filesystem::path& path);

 private:
  friend class SurrogateTrainer;
  void refresh_composed();

  SurrogateMode mode_ = SurrogateMode::pie;
  int n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::Index num_classes_ = 0;
  Eigen::MatrixXd hidden_weight_;  // hidden x n, empty without hidden layer
  Eigen::VectorXd hidden_bias_;
  Eigen::MatrixXd h_weight_;  // m x in (pie modes); classes x n (linear)
  Eigen::VectorXd h_bias_;
  Eigen::MatrixXd fc_weight_;  // classes x m, empty in linear mode
  Eigen::VectorXd fc_bias_;
  // Without a hidden layer the whole map is affine in b: logits = A b + c.
  Eigen::MatrixXd composed_weight_;
  Eigen::VectorXd composed_bias_;
};

/// surrogate.distribution(s) with the size check of the public contract.
ProbVec surrogate_predict(const Surrogate& surrogate, const Coalition& s);

struct TrainReport {
  double initial_loss = 0;
  std::vector<double> epoch_loss;  // mean training cross-entropy after each epoch
  int train_size = 0;
  int holdout_size = 0;
  // Both NaN when every sample is the empty or full coalition.
  double holdout_top1 = 0;      // agreement with the recorded target argmax
  double holdout_prob_gap = 0;  // mean |p' - p| over holdout entries
  std::vector<Coalition> holdout;
};

struct TrainedSurrogate {
  Surrogate surrogate;
  TrainReport report;
};

/// Minimizes soft-label cross-entropy with Adam on mini-batches. In pie mode
/// only h is updated. Deterministic for a given seed. Throws NonFiniteLoss
/// if training diverges.
TrainedSurrogate train_surrogate(const std::vector<TrainSample>& samples, const ModelBundle& bundle,
                                 SurrogateMode mode, const PieConfig& config);

struct FidelityReport {
  double top1_agreement = 0;
  double mean_abs_prob_gap = 0;  // mean over coalitions and classes
};

/// Coalition-by-coalition comparison of two models.
FidelityReport fidelity(const CoalitionModel& candidate, const CoalitionModel& reference,
                        const std::vector<Coalition>& holdout);

/// Compares against the target model evaluated on masked images.
FidelityReport fidelity(const CoalitionModel& candidate, const ModelBundle& bundle, const Image8& image,
                        const ConceptSet& cs, BaselineFill fill, const std::vector<Coalition>& holdout);

/// FNV-1a over the raw bytes of an fc weight/bias pair.
std::uint64_t fc_checksum(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias);

/// surrogate_predict(s)[target] as a game.
class SurrogateUtility final : public UtilityFn {
 public:
  SurrogateUtility(const Surrogate& surrogate, int target_class) : surrogate_(surrogate), target_(target_class) {}
  int n() const override { return surrogate_.n(); }
  double operator()(const Coalition& s) const override { return surrogate_.distribution(s)[target_]; }

 private:
  const Surrogate& surrogate_;
  int target_;
};

}  // namespace eac
