#include "eac/curve_eval.hpp"

#include <sstream>
#include <thread>

#include "eac/error.hpp"

namespace eac {

std::string to_string(CurveKind kind) { return kind == CurveKind::insertion ? "insertion" : "deletion"; }

std::string to_string(CurveAxis axis) { return axis == CurveAxis::concepts ? "concepts" : "pixels"; }

CurveAxis parse_curve_axis(const std::string& text) {
  if (text == "concepts") return CurveAxis::concepts;
  if (text == "pixels") return CurveAxis::pixels;
  throw Error(Errc::InvalidArgument, "unknown curve axis '" + text + "'");
}

namespace {

void check_order(const std::vector<int>& order, int n) {
  if (static_cast<int>(order.size()) != n)
    throw Error(Errc::InvalidArgument, "order has " + std::to_string(order.size()) + " entries, expected " +
                                           std::to_string(n));
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int i : order) {
    if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)])
      throw Error(Errc::InvalidArgument, "order is not a permutation of 0..n-1");
    seen[static_cast<std::size_t>(i)] = true;
  }
}

Curve build_curve(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, const std::vector<int>& order,
                  int target_class, BaselineFill fill, CurveAxis axis, int threads, CurveKind kind) {
  const int n = cs.n();
  check_order(order, n);
  if (target_class < 0 || target_class >= bundle.num_classes())
    throw Error(Errc::InvalidArgument, "target class out of range");

  std::vector<Coalition> steps;
  Coalition s = kind == CurveKind::insertion ? Coalition(n) : Coalition::full(n);
  steps.push_back(s);
  for (int i : order) {
    s.set(i, kind == CurveKind::insertion);
    steps.push_back(s);
  }

  const CoalitionRenderer render(image, cs, fill);
  Curve c;
  c.kind = kind;
  c.order = order;
  c.x.resize(n + 1);
  c.y.resize(n + 1);

  const int workers = std::max(1, std::min(threads, n + 1));
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (int j = t; j <= n; j += workers) c.y[j] = predict(bundle, render(steps[static_cast<std::size_t>(j)]))[target_class];
      });
  }

  if (axis == CurveAxis::concepts) {
    for (int j = 0; j <= n; ++j) c.x[j] = static_cast<double>(j) / n;
  } else {
    // Fraction of the concept-covered area revealed (insertion) or hidden
    // (deletion) so far.
    const double total = static_cast<double>(render.visible(Coalition::full(n)).count());
    for (int j = 0; j <= n; ++j) {
      const double shown = static_cast<double>(render.visible(steps[static_cast<std::size_t>(j)]).count()) / total;
      c.x[j] = kind == CurveKind::insertion ? shown : 1.0 - shown;
    }
  }
  return c;
}

}  // namespace

Curve insertion_curve(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                      const std::vector<int>& order, int target_class, BaselineFill fill, CurveAxis axis,
                      int threads) {
  return build_curve(bundle, image, cs, order, target_class, fill, axis, threads, CurveKind::insertion);
}

Curve deletion_curve(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                     const std::vector<int>& order, int target_class, BaselineFill fill, CurveAxis axis,
                     int threads) {
  return build_curve(bundle, image, cs, order, target_class, fill, axis, threads, CurveKind::deletion);
}

double auc(const Curve& c) {
  const Eigen::Index k = c.size();
  if (k < 2) return k == 1 ? c.y[0] : 0.0;
  const Eigen::VectorXd dx = c.x.tail(k - 1) - c.x.head(k - 1);
  const Eigen::VectorXd mid = 0.5 * (c.y.tail(k - 1) + c.y.head(k - 1));
  return dx.dot(mid);
}

std::string to_csv(const Curve& c) {
  std::ostringstream out;
  out.precision(6);
  out << "x,y\n";
  for (Eigen::Index j = 0; j < c.size(); ++j) out << c.x[j] << ',' << c.y[j] << '\n';
  return out.str();
}

nlohmann::ordered_json to_json(const Curve& c) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(c.kind);
  j["order"] = c.order;
  j["x"] = std::vector<double>(c.x.data(), c.x.data() + c.x.size());
  j["y"] = std::vector<double>(c.y.data(), c.y.data() + c.y.size());
  j["auc"] = auc(c);
  return j;
}

}  // namespace eac
