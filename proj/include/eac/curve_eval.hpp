#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "eac/concept_store.hpp"
#include "eac/masking.hpp"
#include "eac/model_oracle.hpp"

namespace eac {

enum class CurveKind { insertion, deletion };
enum class CurveAxis { concepts, pixels };

std::string to_string(CurveKind kind);
std::string to_string(CurveAxis axis);
CurveAxis parse_curve_axis(const std::string& text);

struct Curve {
  Eigen::VectorXd x;  // 0 .. 1
  Eigen::VectorXd y;
  CurveKind kind = CurveKind::insertion;
  std::vector<int> order;

  Eigen::Index size() const { return x.size(); }
};

/// Point j has the first j concepts of `order` visible.
Curve insertion_curve(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                      const std::vector<int>& order, int target_class, BaselineFill fill,
                      CurveAxis axis = CurveAxis::concepts, int threads = 1);

/// Point j has the first j concepts of `order` masked and the rest visible.
Curve deletion_curve(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                     const std::vector<int>& order, int target_class, BaselineFill fill,
                     CurveAxis axis = CurveAxis::concepts, int threads = 1);

/// Trapezoidal area under y(x).
double auc(const Curve& c);

/// "x,y" header then one row per point.
std::string to_csv(const Curve& c);

nlohmann::ordered_json to_json(const Curve& c);

}  // namespace eac
