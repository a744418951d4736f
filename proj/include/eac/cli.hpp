#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eac/curve_eval.hpp"
#include "eac/error.hpp"
#include "eac/explainer.hpp"
#include "eac/pie.hpp"
#include "eac/shapley.hpp"

namespace eac {

struct ToyModelSpec {
  std::uint64_t seed = 0;
  int grid = 4;
  int classes = 5;
};

/// Parses "seed,grid,classes".
ToyModelSpec parse_toy_model(const std::string& text);

enum class EvalMode { none, insertion, deletion, both };

struct RunConfig {
  std::filesystem::path image;
  std::filesystem::path masks;
  std::optional<std::filesystem::path> model_dir;
  std::optional<ToyModelSpec> toy_model;
  UtilityKind utility = UtilityKind::pie;
  int K = 500;
  PieConfig pie;
  BaselineFill fill;
  Sampler sampler = Sampler::two_stage;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
  bool exact = false;
  bool background = true;
  std::optional<int> target_class;
  EvalMode eval = EvalMode::none;
  CurveAxis axis = CurveAxis::concepts;
  bool csv = false;
  bool wall_clock = false;
  int threads = 1;
};

/// Everything that determines a run's output, for the report.
ordered_json config_echo(const RunConfig& cfg);

/// Concepts as the pipeline sees them: loaded, validated against the image
/// size and background-completed unless disabled.
ConceptSet prepare_concepts(const RunConfig& cfg, const Image8& image);

ModelBundle resolve_model(const RunConfig& cfg);

/// Output of the pipeline before anything touches the disk.
struct ExplainRun {
  Explanation explanation;
  Image8 rendered;
  std::vector<Curve> curves;
  std::optional<TrainedSurrogate> surrogate;
};

/// Concepts -> (surrogate) -> Shapley -> selection -> render.
ExplainRun explain(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, const RunConfig& cfg);

/// Insertion and/or deletion curves for `order`, as requested by cfg.eval.
std::vector<Curve> evaluate(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                            const std::vector<int>& order, int target_class, const RunConfig& cfg);

ordered_json eval_json(const std::vector<Curve>& curves, CurveAxis axis);

/// Entry point of the `eac` tool; returns the process exit status.
///   0 success, 2 invalid configuration, 3 bad input, 4 runtime failure.
int run_cli(int argc, char** argv);

int exit_code(Errc code);

}  // namespace eac
