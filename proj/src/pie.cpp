#include "eac/pie.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "eac/error.hpp"
#include "eac/rng.hpp"

namespace eac {

using nlohmann::json;

std::string to_string(SurrogateMode mode) {
  switch (mode) {
    case SurrogateMode::pie: return "pie";
    case SurrogateMode::pie_no_sharing: return "pie_no_sharing";
    case SurrogateMode::linear: return "linear";
  }
  return "pie";
}

SurrogateMode parse_surrogate_mode(const std::string& text) {
  if (text == "pie") return SurrogateMode::pie;
  if (text == "pie_no_sharing" || text == "pie-no-sharing") return SurrogateMode::pie_no_sharing;
  if (text == "linear") return SurrogateMode::linear;
  throw Error(Errc::InvalidArgument, "unknown surrogate mode '" + text + "'");
}

void PieConfig::validate(int n) const {
  if (num_samples < 2 + n)
    throw Error(Errc::InvalidArgument, "num_samples must be >= n + 2 = " + std::to_string(n + 2));
  if (!(holdout_fraction > 0.0 && holdout_fraction < 0.5))
    throw Error(Errc::InvalidArgument, "holdout_fraction must lie in (0, 0.5)");
  if (hidden_width && *hidden_width < 1) throw Error(Errc::InvalidArgument, "hidden_width must be >= 1");
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0))
    throw Error(Errc::InvalidArgument, "epochs, batch_size and learning_rate must be positive");
}

// ---------------------------------------------------------------- dataset

std::vector<TrainSample> sample_dataset(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                                        BaselineFill fill, const PieConfig& config) {
  const int n = cs.n();
  config.validate(n);
  Rng rng(derive_seed(config.seed, 0));

  std::vector<Coalition> coalitions{Coalition(n), Coalition::full(n)};
  const bool unique = n >= 63 || (std::uint64_t{1} << n) >= static_cast<std::uint64_t>(config.num_samples);
  std::unordered_map<Coalition, std::size_t, CoalitionHash> seen{{coalitions[0], 0}, {coalitions[1], 1}};
  while (static_cast<int>(coalitions.size()) < config.num_samples) {
    Coalition s(n);
    for (int i = 0; i < n; ++i) s.set(i, rng.coin());
    if (unique && seen.count(s)) continue;
    seen.emplace(s, seen.size());
    coalitions.push_back(std::move(s));
  }

  // Label every distinct coalition once; slots are index-addressed so the
  // result does not depend on scheduling.
  std::vector<Coalition> distinct;
  std::unordered_map<Coalition, std::size_t, CoalitionHash> slot;
  for (const auto& s : coalitions)
    if (slot.emplace(s, distinct.size()).second) distinct.push_back(s);

  const DirectUtility direct(bundle, image, cs, 0, fill);
  std::vector<ProbVec> labels(distinct.size());
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(distinct.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = static_cast<std::size_t>(t); k < distinct.size(); k += static_cast<std::size_t>(threads))
          labels[k] = direct.distribution(distinct[k]);
      });
  }

  std::vector<TrainSample> samples;
  samples.reserve(coalitions.size());
  for (auto& s : coalitions) {
    const std::size_t k = slot.at(s);
    samples.push_back({std::move(s), labels[k]});
  }
  return samples;
}

// -------------------------------------------------------------- surrogate

namespace {

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = scale * rng.uniform_sym();
  return w;
}

Eigen::VectorXd indicator(const Coalition& s) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s.n());
  for (int i = 0; i < s.n(); ++i)
    if (s.test(i)) b[i] = 1.0;
  return b;
}

}  // namespace

Surrogate Surrogate::init(SurrogateMode mode, int n, const ModelBundle& bundle,
                          const std::optional<int>& hidden_width, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidArgument, "surrogate needs at least one concept");
  Surrogate s;
  s.mode_ = mode;
  s.n_ = n;
  s.m_ = bundle.m();
  s.num_classes_ = bundle.num_classes();
  Rng rng(seed);

  if (mode == SurrogateMode::linear) {
    s.h_weight_ = uniform_matrix(s.num_classes_, n, 1.0 / std::sqrt(static_cast<double>(n)), rng);
    s.h_bias_ = Eigen::VectorXd::Zero(s.num_classes_);
  } else {
    Eigen::Index in = n;
    if (hidden_width) {
      s.hidden_weight_ = uniform_matrix(*hidden_width, n, std::sqrt(6.0 / n), rng);
      s.hidden_bias_ = Eigen::VectorXd::Zero(*hidden_width);
      in = *hidden_width;
    }
    s.h_weight_ = uniform_matrix(s.m_, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    s.h_bias_ = Eigen::VectorXd::Zero(s.m_);
    if (mode == SurrogateMode::pie) {
      s.fc_weight_ = bundle.fc_weight;
      s.fc_bias_ = bundle.fc_bias;
    } else {
      s.fc_weight_ = uniform_matrix(s.num_classes_, s.m_, 1.0 / std::sqrt(static_cast<double>(s.m_)), rng);
      s.fc_bias_ = Eigen::VectorXd::Zero(s.num_classes_);
    }
  }
  s.refresh_composed();
  return s;
}

void Surrogate::refresh_composed() {
  if (has_hidden()) {
    composed_weight_.resize(0, 0);
    composed_bias_.resize(0);
  } else if (mode_ == SurrogateMode::linear) {
    composed_weight_ = h_weight_;
    composed_bias_ = h_bias_;
  } else {
    composed_weight_ = fc_weight_ * h_weight_;
    composed_bias_ = fc_weight_ * h_bias_ + fc_bias_;
  }
}

void Surrogate::zero_h() {
  hidden_weight_.setZero();
  hidden_bias_.setZero();
  h_weight_.setZero();
  h_bias_.setZero();
  refresh_composed();
}

Eigen::VectorXd Surrogate::logits(const Coalition& s) const {
  if (s.n() != n_)
    throw Error(Errc::CoalitionSizeMismatch,
                "coalition over " + std::to_string(s.n()) + " concepts, surrogate has " + std::to_string(n_));
  if (!has_hidden()) {
    Eigen::VectorXd out = composed_bias_;
    for (int i = 0; i < n_; ++i)
      if (s.test(i)) out += composed_weight_.col(i);
    return out;
  }
  const Eigen::VectorXd hidden = (hidden_weight_ * indicator(s) + hidden_bias_).cwiseMax(0.0);
  return fc_weight_ * (h_weight_ * hidden + h_bias_) + fc_bias_;
}

ProbVec Surrogate::distribution(const Coalition& s) const { return softmax(logits(s)); }

ProbVec surrogate_predict(const Surrogate& surrogate, const Coalition& s) { return surrogate.distribution(s); }

// ---------------------------------------------------------------- training

namespace {

struct AdamSlot {
  Eigen::MatrixXd m, v;
};

struct Batch {
  Eigen::MatrixXd x;  // n x B
  Eigen::MatrixXd t;  // classes x B
};

Batch make_batch(const std::vector<TrainSample>& samples, const std::vector<std::size_t>& idx, std::size_t begin,
                 std::size_t end, int n, Eigen::Index classes) {
  const auto size = static_cast<Eigen::Index>(end - begin);
  Batch b{Eigen::MatrixXd::Zero(n, size), Eigen::MatrixXd(classes, size)};
  for (Eigen::Index k = 0; k < size; ++k) {
    const TrainSample& s = samples[idx[begin + static_cast<std::size_t>(k)]];
    for (int i = 0; i < n; ++i)
      if (s.coalition.test(i)) b.x(i, k) = 1.0;
    b.t.col(k) = s.target_dist;
  }
  return b;
}

/// Column-wise log-softmax.
Eigen::MatrixXd log_softmax_cols(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double top = out.col(c).maxCoeff();
    const double lse = top + std::log((out.col(c).array() - top).exp().sum());
    out.col(c).array() -= lse;
  }
  return out;
}

}  // namespace

/// Owns the forward/backward pass over a Surrogate's parameters.
class SurrogateTrainer {
 public:
  SurrogateTrainer(Surrogate& s, const PieConfig& config) : s_(s), config_(config) {
    // Gradient order in loss() follows this registration order.
    track(s_.h_weight_);
    track(s_.h_bias_);
    if (s_.has_hidden()) {
      track(s_.hidden_weight_);
      track(s_.hidden_bias_);
    }
    if (s_.mode_ == SurrogateMode::pie_no_sharing) {
      track(s_.fc_weight_);
      track(s_.fc_bias_);
    }
    for (const auto& p : params_)
      slots_.push_back({Eigen::MatrixXd::Zero(p.rows(), p.cols()), Eigen::MatrixXd::Zero(p.rows(), p.cols())});
  }

  /// Mean cross-entropy; fills gradients when `grads` is non-null.
  double loss(const Batch& b, std::vector<Eigen::MatrixXd>* grads) const {
    const double count = static_cast<double>(b.x.cols());
    Eigen::MatrixXd in = b.x, z1, feats, logits;
    if (s_.has_hidden()) {
      z1 = (s_.hidden_weight_ * b.x).colwise() + s_.hidden_bias_;
      in = z1.cwiseMax(0.0);
    }
    if (s_.mode_ == SurrogateMode::linear) {
      logits = (s_.h_weight_ * in).colwise() + s_.h_bias_;
    } else {
      feats = (s_.h_weight_ * in).colwise() + s_.h_bias_;
      logits = (s_.fc_weight_ * feats).colwise() + s_.fc_bias_;
    }
    const Eigen::MatrixXd logp = log_softmax_cols(logits);
    const double ce = -(b.t.array() * logp.array()).sum() / count;
    if (!grads) return ce;

    grads->clear();
    const Eigen::MatrixXd dlogits = (logp.array().exp().matrix() - b.t) / count;
    Eigen::MatrixXd din;
    if (s_.mode_ == SurrogateMode::linear) {
      grads->push_back(dlogits * in.transpose());
      grads->push_back(dlogits.rowwise().sum());
      if (s_.has_hidden()) din = s_.h_weight_.transpose() * dlogits;
    } else {
      const Eigen::MatrixXd dfeats = s_.fc_weight_.transpose() * dlogits;
      grads->push_back(dfeats * in.transpose());
      grads->push_back(dfeats.rowwise().sum());
      if (s_.has_hidden()) din = s_.h_weight_.transpose() * dfeats;
    }
    if (s_.has_hidden()) {
      const Eigen::MatrixXd dz1 = din.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
      grads->push_back(dz1 * b.x.transpose());
      grads->push_back(dz1.rowwise().sum());
    }
    if (s_.mode_ == SurrogateMode::pie_no_sharing) {
      grads->push_back(dlogits * feats.transpose());
      grads->push_back(dlogits.rowwise().sum());
    }
    return ce;
  }

  void adam_step(const std::vector<Eigen::MatrixXd>& grads) {
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, step_);
    const double c2 = 1.0 - std::pow(config_.beta2, step_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      AdamSlot& slot = slots_[k];
      slot.m = config_.beta1 * slot.m + (1.0 - config_.beta1) * grads[k];
      slot.v = config_.beta2 * slot.v + (1.0 - config_.beta2) * grads[k].cwiseAbs2();
      params_[k].array() -=
          config_.learning_rate * (slot.m.array() / c1) / ((slot.v.array() / c2).sqrt() + config_.epsilon);
    }
  }

  void finish() { s_.refresh_composed(); }

 private:
  template <typename Dense>
  void track(Dense& p) {
    params_.emplace_back(p.data(), p.rows(), p.cols());
  }

  Surrogate& s_;
  const PieConfig& config_;
  // Views over the trainable blocks; the surrogate is never resized while
  // training, so the views stay valid.
  std::vector<Eigen::Map<Eigen::MatrixXd>> params_;
  std::vector<AdamSlot> slots_;
  int step_ = 0;
};

namespace {

double mean_gap(const ProbVec& a, const ProbVec& b) { return (a - b).cwiseAbs().mean(); }

}  // namespace

TrainedSurrogate train_surrogate(const std::vector<TrainSample>& samples, const ModelBundle& bundle,
                                 SurrogateMode mode, const PieConfig& config) {
  if (samples.empty()) throw Error(Errc::InvalidArgument, "no training samples");
  const int n = samples.front().coalition.n();
  config.validate(n);
  for (const auto& s : samples)
    if (s.coalition.n() != n || s.target_dist.size() != bundle.num_classes())
      throw Error(Errc::ShapeMismatch, "inconsistent training sample");

  // Split: the empty and full coalitions always train; the rest is shuffled
  // and the holdout fraction is cut from the front.
  std::vector<std::size_t> anchors, rest;
  const Coalition empty(n), full = Coalition::full(n);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const bool anchor = samples[k].coalition == empty || samples[k].coalition == full;
    (anchor ? anchors : rest).push_back(k);
  }
  Rng split_rng(derive_seed(config.seed, 2));
  shuffle(rest.begin(), rest.end(), split_rng);
  const auto holdout_size = std::min(
      rest.size(), std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                config.holdout_fraction * static_cast<double>(samples.size())))));
  const std::vector<std::size_t> holdout(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(holdout_size));
  std::vector<std::size_t> train = anchors;
  train.insert(train.end(), rest.begin() + static_cast<std::ptrdiff_t>(holdout_size), rest.end());

  TrainedSurrogate out;
  out.surrogate = Surrogate::init(mode, n, bundle, config.hidden_width, derive_seed(config.seed, 1));
  SurrogateTrainer trainer(out.surrogate, config);
  const Eigen::Index classes = bundle.num_classes();
  const Batch all = make_batch(samples, train, 0, train.size(), n, classes);

  out.report.initial_loss = trainer.loss(all, nullptr);
  Rng order_rng(derive_seed(config.seed, 3));
  std::vector<std::size_t> order = train;
  std::vector<Eigen::MatrixXd> grads;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const Batch b = make_batch(samples, order, begin, std::min(order.size(), begin + batch), n, classes);
      const double ce = trainer.loss(b, &grads);
      if (!std::isfinite(ce)) throw Error(Errc::NonFiniteLoss, "loss diverged in epoch " + std::to_string(epoch));
      trainer.adam_step(grads);
    }
    const double epoch_loss = trainer.loss(all, nullptr);
    if (!std::isfinite(epoch_loss))
      throw Error(Errc::NonFiniteLoss, "loss diverged in epoch " + std::to_string(epoch));
    out.report.epoch_loss.push_back(epoch_loss);
  }
  trainer.finish();

  out.report.train_size = static_cast<int>(train.size());
  out.report.holdout_size = static_cast<int>(holdout.size());
  double agree = 0.0, gap = 0.0;
  for (std::size_t k : holdout) {
    const ProbVec p = out.surrogate.distribution(samples[k].coalition);
    agree += argmax(p) == argmax(samples[k].target_dist) ? 1.0 : 0.0;
    gap += mean_gap(p, samples[k].target_dist);
    out.report.holdout.push_back(samples[k].coalition);
  }
  const double count = holdout.empty() ? std::nan("") : static_cast<double>(holdout.size());
  out.report.holdout_top1 = agree / count;
  out.report.holdout_prob_gap = gap / count;
  return out;
}

FidelityReport fidelity(const CoalitionModel& candidate, const CoalitionModel& reference,
                        const std::vector<Coalition>& holdout) {
  if (holdout.empty()) throw Error(Errc::InvalidArgument, "fidelity needs at least one coalition");
  double agree = 0.0, gap = 0.0;
  for (const auto& s : holdout) {
    const ProbVec p = candidate.distribution(s);
    const ProbVec q = reference.distribution(s);
    agree += argmax(p) == argmax(q) ? 1.0 : 0.0;
    gap += mean_gap(p, q);
  }
  const auto count = static_cast<double>(holdout.size());
  return {agree / count, gap / count};
}

FidelityReport fidelity(const CoalitionModel& candidate, const ModelBundle& bundle, const Image8& image,
                        const ConceptSet& cs, BaselineFill fill, const std::vector<Coalition>& holdout) {
  const DirectUtility direct(bundle, image, cs, 0, fill);
  return fidelity(candidate, direct, holdout);
}

std::uint64_t fc_checksum(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](const double* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < static_cast<std::size_t>(count) * sizeof(double); ++k) {
      h ^= bytes[k];
      h *= 0x100000001B3ULL;
    }
  };
  mix(weight.data(), weight.size());
  mix(bias.data(), bias.size());
  return h;
}

// ------------------------------------------------------------- checkpoint

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)].at(static_cast<std::size_t>(c));
  return m;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void Surrogate::save(const std::filesystem::path& path) const {
  json j = {{"version", 1},
            {"mode", to_string(mode_)},
            {"n", n_},
            {"m", m_},
            {"num_classes", num_classes_},
            {"hidden_weight", matrix_json(hidden_weight_)},
            {"hidden_bias", std::vector<double>(hidden_bias_.data(), hidden_bias_.data() + hidden_bias_.size())},
            {"h_weight", matrix_json(h_weight_)},
            {"h_bias", std::vector<double>(h_bias_.data(), h_bias_.data() + h_bias_.size())},
            {"fc_weight", matrix_json(fc_weight_)},
            {"fc_bias", std::vector<double>(fc_bias_.data(), fc_bias_.data() + fc_bias_.size())}};
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << j.dump() << "\n")) throw Error(Errc::IoFailure, "cannot write " + path.string());
}

Surrogate Surrogate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("version").get<int>() != 1) throw Error(Errc::ShapeMismatch, "unsupported checkpoint version");
    Surrogate s;
    s.mode_ = parse_surrogate_mode(j.at("mode").get<std::string>());
    s.n_ = j.at("n").get<int>();
    s.m_ = j.at("m").get<Eigen::Index>();
    s.num_classes_ = j.at("num_classes").get<Eigen::Index>();
    s.hidden_weight_ = matrix_from(j.at("hidden_weight"));
    s.hidden_bias_ = vector_from(j.at("hidden_bias"));
    s.h_weight_ = matrix_from(j.at("h_weight"));
    s.h_bias_ = vector_from(j.at("h_bias"));
    s.fc_weight_ = matrix_from(j.at("fc_weight"));
    s.fc_bias_ = vector_from(j.at("fc_bias"));
    s.refresh_composed();
    return s;
  } catch (const json::exception& e) {
    throw Error(Errc::ShapeMismatch, std::string("bad surrogate checkpoint: ") + e.what());
  }
}

}  // namespace eac
