#include "eac/shapley.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "eac/error.hpp"
#include "eac/rng.hpp"

namespace eac {

std::string to_string(ShapleyMode mode) { return mode == ShapleyMode::exact ? "exact" : "mc"; }

std::string to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::direct: return "direct";
    case UtilityKind::pie: return "pie";
    case UtilityKind::pie_no_sharing: return "pie_no_sharing";
    case UtilityKind::linear: return "linear";
    case UtilityKind::table: return "table";
  }
  return "table";
}

UtilityKind parse_utility_kind(const std::string& text) {
  if (text == "direct") return UtilityKind::direct;
  if (text == "pie") return UtilityKind::pie;
  if (text == "pie_no_sharing" || text == "pie-no-sharing") return UtilityKind::pie_no_sharing;
  if (text == "linear") return UtilityKind::linear;
  if (text == "table") return UtilityKind::table;
  throw Error(Errc::InvalidArgument, "unknown utility kind '" + text + "'");
}

int exact_cutoff(UtilityKind kind) { return kind == UtilityKind::direct ? 12 : 20; }

double marginal_contribution(const UtilityFn& u, int i, const Coalition& s) {
  if (s.test(i)) throw Error(Errc::ConceptAlreadyInCoalition, "concept " + std::to_string(i) + " already in S");
  return u(s.with(i)) - u(s);
}

ShapleyResult exact_shapley(const UtilityFn& u, int max_n) {
  const int n = u.n();
  if (n > max_n || n > 30)
    throw Error(Errc::TooManyConcepts, std::to_string(n) + " concepts exceed the exact cutoff of " +
                                           std::to_string(std::min(max_n, 30)));
  if (n < 1) throw Error(Errc::InvalidArgument, "game has no players");

  const std::uint64_t size = std::uint64_t{1} << n;
  std::vector<double> payoff(size);
  for (std::uint64_t bits = 0; bits < size; ++bits) payoff[bits] = u(Coalition::from_bits(n, bits));

  // weight[k] = 1 / (n * C(n-1, k)) for |S| = k.
  std::vector<double> weight(static_cast<std::size_t>(n));
  double binom = 1.0;
  for (int k = 0; k < n; ++k) {
    weight[static_cast<std::size_t>(k)] = 1.0 / (n * binom);
    binom = binom * (n - 1 - k) / (k + 1);
  }

  ShapleyResult r;
  r.values = Eigen::VectorXd::Zero(n);
  r.std_error = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double acc = 0.0;
    for (std::uint64_t s = 0; s < size; ++s) {
      if (s & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(s))] * (payoff[s | bit] - payoff[s]);
    }
    r.values[i] = acc;
  }
  r.mode = ShapleyMode::exact;
  r.utility_evaluations = static_cast<std::int64_t>(size);
  return r;
}

namespace {

Coalition draw_two_stage(int n, Rng& rng, std::vector<int>& others) {
  const auto size = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  // Partial Fisher-Yates: the first `size` slots become a uniform subset.
  for (int k = 0; k < size; ++k) {
    const auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1 - k)));
    std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(j)]);
  }
  Coalition s(n);
  for (int k = 0; k < size; ++k) s.set(others[static_cast<std::size_t>(k)]);
  return s;
}

Coalition draw_permutation(int n, int i, Rng& rng, std::vector<int>& order) {
  shuffle(order.begin(), order.end(), rng);
  Coalition s(n);
  for (int p : order) {
    if (p == i) break;
    s.set(p);
  }
  return s;
}

}  // namespace

ShapleyResult mc_shapley(const UtilityFn& u, int K, std::uint64_t seed, const McOptions& options) {
  if (K < 2) throw Error(Errc::InvalidArgument, "K must be >= 2");
  const int n = u.n();
  if (n < 1) throw Error(Errc::InvalidArgument, "game has no players");

  MemoizedUtility memo(u);
  const UtilityFn& game = options.memoize ? static_cast<const UtilityFn&>(memo) : u;

  ShapleyResult r;
  r.values = Eigen::VectorXd::Zero(n);
  r.std_error = Eigen::VectorXd::Zero(n);

  auto run_concept = [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<int> pool;
    if (options.sampler == Sampler::two_stage) {
      for (int j = 0; j < n; ++j)
        if (j != i) pool.push_back(j);
    } else {
      pool.resize(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), 0);
    }
    // Welford accumulation of the marginal contributions.
    double mean = 0.0, m2 = 0.0;
    for (int k = 0; k < K; ++k) {
      const Coalition s = options.sampler == Sampler::two_stage ? draw_two_stage(n, rng, pool)
                                                                : draw_permutation(n, i, rng, pool);
      const double delta = game(s.with(i)) - game(s);
      const double d = delta - mean;
      mean += d / (k + 1);
      m2 += d * (delta - mean);
    }
    r.values[i] = mean;
    r.std_error[i] = std::sqrt(m2 / (K - 1)) / std::sqrt(static_cast<double>(K));
  };

  const int threads = u.thread_safe() ? std::max(1, std::min(options.threads, n)) : 1;
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run_concept(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) run_concept(i);
      });
  }

  r.samples_per_concept = K;
  r.seed = seed;
  r.mode = ShapleyMode::mc;
  r.sampler = options.sampler;
  r.utility_evaluations = options.memoize ? memo.misses() : static_cast<std::int64_t>(2) * n * K;
  return r;
}

double MemoizedUtility::operator()(const Coalition& s) const {
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(s);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const double v = inner_(s);
  std::lock_guard lock(mu_);
  cache_.emplace(s, v);
  return v;
}

std::int64_t MemoizedUtility::misses() const {
  std::lock_guard lock(mu_);
  return static_cast<std::int64_t>(cache_.size());
}

std::int64_t MemoizedUtility::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

TableGame::TableGame(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n < 1 || n > 30) throw Error(Errc::TooManyConcepts, "table games support 1..30 players");
  if (values_.size() != (std::size_t{1} << n))
    throw Error(Errc::InvalidArgument, "payoff table needs 2^n = " + std::to_string(std::size_t{1} << n) +
                                           " entries, got " + std::to_string(values_.size()));
}

TableGame TableGame::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    const int n = doc.at("n").get<int>();
    if (n > 30) throw Error(Errc::TooManyConcepts, std::to_string(n) + " players");
    return TableGame(n, doc.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedManifest, std::string("bad game table: ") + e.what());
  }
}

TableGame TableGame::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open game table " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace eac
