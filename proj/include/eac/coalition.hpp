#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eac {

/// Subset of concept indices {0..n-1}, stored as an n-bit indicator. Fits in
/// one machine word for n <= 64; longer sets spill into extra words.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(int n) : n_(n), high_(n > 64 ? (n - 1) / 64 : 0, 0) {}

  static Coalition full(int n) {
    Coalition c(n);
    for (int i = 0; i < n; ++i) c.set(i);
    return c;
  }
  static Coalition of(int n, std::span<const int> members) {
    Coalition c(n);
    for (int i : members) c.set(i);
    return c;
  }
  /// Bit i of `bits` is concept i. Requires n <= 64.
  static Coalition from_bits(int n, std::uint64_t bits) {
    Coalition c(n);
    c.low_ = n == 64 ? bits : bits & ((std::uint64_t{1} << n) - 1);
    return c;
  }

  int n() const { return n_; }

  bool test(int i) const { return (word(i / 64) >> (i % 64)) & 1U; }
  void set(int i, bool value = true) {
    std::uint64_t& w = word(i / 64);
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    w = value ? (w | bit) : (w & ~bit);
  }
  Coalition with(int i) const {
    Coalition c = *this;
    c.set(i);
    return c;
  }
  Coalition without(int i) const {
    Coalition c = *this;
    c.set(i, false);
    return c;
  }

  int count() const {
    int k = std::popcount(low_);
    for (auto w : high_) k += std::popcount(w);
    return k;
  }

  std::vector<int> members() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i)
      if (test(i)) out.push_back(i);
    return out;
  }

  /// Low 64 bits (the whole set when n <= 64).
  std::uint64_t low_bits() const { return low_; }

  /// '0'/'1' string, concept 0 first.
  std::string to_string() const {
    std::string s(static_cast<std::size_t>(n_), '0');
    for (int i = 0; i < n_; ++i)
      if (test(i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
  }

  std::size_t hash() const {
    std::size_t h = std::hash<std::uint64_t>{}(low_) ^ static_cast<std::size_t>(n_);
    for (auto w : high_) h = h * 0x9E3779B97F4A7C15ULL ^ std::hash<std::uint64_t>{}(w);
    return h;
  }

  friend bool operator==(const Coalition&, const Coalition&) = default;

 private:
  std::uint64_t word(int k) const { return k == 0 ? low_ : high_[static_cast<std::size_t>(k - 1)]; }
  std::uint64_t& word(int k) { return k == 0 ? low_ : high_[static_cast<std::size_t>(k - 1)]; }

  int n_ = 0;
  std::uint64_t low_ = 0;
  std::vector<std::uint64_t> high_;
};

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const { return c.hash(); }
};

/// A cooperative game over n players: coalition -> payoff. Must be
/// deterministic: evaluating the same coalition twice gives the same value.
class UtilityFn {
 public:
  virtual ~UtilityFn() = default;
  virtual int n() const = 0;
  virtual double operator()(const Coalition& s) const = 0;
  /// Whether concurrent evaluation is allowed; estimators serialize their
  /// loops otherwise.
  virtual bool thread_safe() const { return true; }
};

/// Anything that maps a coalition to a full class distribution: the direct
/// model on masked images, or a trained surrogate.
class CoalitionModel {
 public:
  virtual ~CoalitionModel() = default;
  virtual Eigen::VectorXd distribution(const Coalition& s) const = 0;
};

}  // namespace eac
