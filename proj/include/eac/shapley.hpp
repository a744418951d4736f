#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "eac/coalition.hpp"

namespace eac {

enum class ShapleyMode { exact, mc };
enum class UtilityKind { direct, pie, pie_no_sharing, linear, table };
enum class Sampler { two_stage, permutation };

std::string to_string(ShapleyMode mode);
std::string to_string(UtilityKind kind);
UtilityKind parse_utility_kind(const std::string& text);

/// Largest n for which exact enumeration is allowed: 12 when every
/// evaluation runs the full model, 20 otherwise.
int exact_cutoff(UtilityKind kind);

struct ShapleyResult {
  Eigen::VectorXd values;
  Eigen::VectorXd std_error;  // zero in exact mode
  int samples_per_concept = 0;
  std::uint64_t seed = 0;
  ShapleyMode mode = ShapleyMode::exact;
  UtilityKind utility_kind = UtilityKind::table;
  Sampler sampler = Sampler::two_stage;
  std::int64_t utility_evaluations = 0;  // distinct coalitions evaluated

  int n() const { return static_cast<int>(values.size()); }
};

/// Delta_i(S) = u(S + {i}) - u(S). Throws ConceptAlreadyInCoalition when i is in S.
double marginal_contribution(const UtilityFn& u, int i, const Coalition& s);

/// Enumerates all 2^n coalitions once and weights every marginal
/// contribution of i by 1 / (n * C(n-1, |S|)). Throws TooManyConcepts when
/// n > max_n.
ShapleyResult exact_shapley(const UtilityFn& u, int max_n = 20);

struct McOptions {
  Sampler sampler = Sampler::two_stage;
  /// Worker threads for the per-concept loops; 1 runs inline.
  int threads = 1;
  bool memoize = true;
};

/// Monte-Carlo estimate with K coalitions per concept. Two-stage sampler:
/// |S| uniform on {0..n-1}, then S uniform among subsets of the other
/// concepts with that size. Concept i draws from Rng(derive_seed(seed, i)),
/// so results do not depend on thread interleaving.
ShapleyResult mc_shapley(const UtilityFn& u, int K, std::uint64_t seed, const McOptions& options = {});

/// Caches payoffs per coalition for the lifetime of one estimation run.
class MemoizedUtility final : public UtilityFn {
 public:
  explicit MemoizedUtility(const UtilityFn& inner) : inner_(inner) {}

  int n() const override { return inner_.n(); }
  double operator()(const Coalition& s) const override;
  bool thread_safe() const override { return inner_.thread_safe(); }

  std::int64_t misses() const;
  std::int64_t hits() const;

 private:
  const UtilityFn& inner_;
  mutable std::mutex mu_;
  mutable std::unordered_map<Coalition, double, CoalitionHash> cache_;
  mutable std::int64_t hits_ = 0;
};

/// Explicit payoff table indexed by coalition bits (bit i = player i).
class TableGame final : public UtilityFn {
 public:
  TableGame(int n, std::vector<double> values);

  /// Parses {"n": n, "values": [u(0), u(1), ..., u(2^n - 1)]}.
  static TableGame from_json(const std::string& text);
  static TableGame load(const std::string& path);

  int n() const override { return n_; }
  double operator()(const Coalition& s) const override { return values_[s.low_bits()]; }
  const std::vector<double>& values() const { return values_; }

 private:
  int n_;
  std::vector<double> values_;
};

/// Adapts a callable into a game.
class FunctionGame final : public UtilityFn {
 public:
  FunctionGame(int n, std::function<double(const Coalition&)> fn) : n_(n), fn_(std::move(fn)) {}
  int n() const override { return n_; }
  double operator()(const Coalition& s) const override { return fn_(s); }

 private:
  int n_;
  std::function<double(const Coalition&)> fn_;
};

}  // namespace eac
