#include "eac/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "eac/error.hpp"
#include "eac/rng.hpp"

namespace eac {

namespace {

constexpr std::uint64_t kPieStream = 0x5057'4945;  // surrogate sampling/training

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string eval_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::none: return "none";
    case EvalMode::insertion: return "insertion";
    case EvalMode::deletion: return "deletion";
    case EvalMode::both: return "both";
  }
  return "none";
}

EvalMode parse_eval_mode(const std::string& text) {
  if (text == "none") return EvalMode::none;
  if (text == "insertion") return EvalMode::insertion;
  if (text == "deletion") return EvalMode::deletion;
  if (text == "both") return EvalMode::both;
  throw Error(Errc::InvalidArgument, "unknown eval mode '" + text + "'");
}

Sampler parse_sampler(const std::string& text) {
  if (text == "two_stage" || text == "two-stage") return Sampler::two_stage;
  if (text == "permutation") return Sampler::permutation;
  throw Error(Errc::InvalidArgument, "unknown sampler '" + text + "'");
}

std::string sampler_name(Sampler s) { return s == Sampler::two_stage ? "two_stage" : "permutation"; }

SurrogateMode surrogate_mode(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::pie: return SurrogateMode::pie;
    case UtilityKind::pie_no_sharing: return SurrogateMode::pie_no_sharing;
    case UtilityKind::linear: return SurrogateMode::linear;
    default: break;
  }
  throw Error(Errc::InvalidArgument, "utility kind " + to_string(kind) + " has no surrogate");
}

int env_threads() {
  int threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("EAC_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) threads = std::min(threads, cap);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, std::string("EAC_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return threads;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_png_atomic(const Image8& image, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_png(image, tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::IoFailure, "cannot rename onto " + path.string());
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string());
}

int resolve_target(const ModelBundle& bundle, const Image8& image, const std::optional<int>& requested) {
  const int target = requested ? *requested : argmax(predict(bundle, image));
  if (target < 0 || target >= bundle.num_classes())
    throw Error(Errc::InvalidArgument, "target class " + std::to_string(target) + " out of range");
  return target;
}

ordered_json train_summary(const TrainedSurrogate& ts) {
  ordered_json j;
  j["mode"] = to_string(ts.surrogate.mode());
  j["train_size"] = ts.report.train_size;
  j["holdout_size"] = ts.report.holdout_size;
  j["initial_loss"] = ts.report.initial_loss;
  j["final_loss"] = ts.report.epoch_loss.empty() ? ts.report.initial_loss : ts.report.epoch_loss.back();
  j["holdout_top1"] = ts.report.holdout_top1;
  j["holdout_prob_gap"] = ts.report.holdout_prob_gap;
  return j;
}

}  // namespace

ToyModelSpec parse_toy_model(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) throw Error(Errc::InvalidArgument, "--toy-model expects seed,grid,classes");
  try {
    ToyModelSpec spec{std::stoull(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])};
    if (spec.grid < 1 || spec.classes < 2) throw Error(Errc::InvalidArgument, "toy model needs grid >= 1, classes >= 2");
    return spec;
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "--toy-model expects seed,grid,classes");
  }
}

ordered_json config_echo(const RunConfig& cfg) {
  ordered_json j;
  j["image"] = cfg.image.generic_string();
  j["masks"] = cfg.masks.generic_string();
  if (cfg.model_dir) j["model"] = cfg.model_dir->generic_string();
  if (cfg.toy_model)
    j["toy_model"] = {{"seed", cfg.toy_model->seed}, {"grid", cfg.toy_model->grid}, {"classes", cfg.toy_model->classes}};
  j["surrogate"] = to_string(cfg.utility);
  j["K"] = cfg.K;
  j["sampler"] = sampler_name(cfg.sampler);
  j["exact"] = cfg.exact;
  j["fill"] = to_string(cfg.fill);
  j["background"] = cfg.background;
  j["target_class"] = cfg.target_class ? ordered_json(*cfg.target_class) : ordered_json(nullptr);
  j["seed"] = cfg.seed ? ordered_json(*cfg.seed) : ordered_json(nullptr);
  if (cfg.utility != UtilityKind::direct) {
    ordered_json pie;
    pie["num_samples"] = cfg.pie.num_samples;
    pie["holdout_fraction"] = cfg.pie.holdout_fraction;
    pie["hidden_width"] = cfg.pie.hidden_width ? ordered_json(*cfg.pie.hidden_width) : ordered_json(nullptr);
    pie["epochs"] = cfg.pie.epochs;
    pie["batch_size"] = cfg.pie.batch_size;
    pie["learning_rate"] = cfg.pie.learning_rate;
    pie["beta1"] = cfg.pie.beta1;
    pie["beta2"] = cfg.pie.beta2;
    pie["epsilon"] = cfg.pie.epsilon;
    j["pie"] = pie;
  }
  j["eval"] = eval_name(cfg.eval);
  j["axis"] = to_string(cfg.axis);
  return j;
}

ConceptSet prepare_concepts(const RunConfig& cfg, const Image8& image) {
  ConceptSet cs = load_concepts(cfg.masks);
  if (cs.image_height != image.height() || cs.image_width != image.width())
    throw Error(Errc::DimensionMismatch, "masks are " + std::to_string(cs.image_width) + "x" +
                                             std::to_string(cs.image_height) + ", image is " +
                                             std::to_string(image.width()) + "x" + std::to_string(image.height()));
  return cfg.background ? complete_with_background(std::move(cs)) : cs;
}

ModelBundle resolve_model(const RunConfig& cfg) {
  if (cfg.model_dir.has_value() == cfg.toy_model.has_value())
    throw Error(Errc::InvalidArgument, "give exactly one of --model and --toy-model");
  if (cfg.model_dir) return load_bundle(*cfg.model_dir);
  return builtin_toy_model(cfg.toy_model->seed, cfg.toy_model->grid, cfg.toy_model->classes);
}

ExplainRun explain(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs, const RunConfig& cfg) {
  if (!cfg.seed) throw Error(Errc::InvalidArgument, "a seed is required");
  if (cfg.K < 2) throw Error(Errc::InvalidArgument, "K must be >= 2");
  const std::uint64_t seed = *cfg.seed;
  const int n = cs.n();
  const int target = resolve_target(bundle, image, cfg.target_class);

  ExplainRun run;
  ordered_json wall;
  auto t0 = Clock::now();

  std::optional<DirectUtility> direct;
  std::optional<SurrogateUtility> via_surrogate;
  const UtilityFn* u = nullptr;
  std::int64_t samples = 0;
  if (cfg.utility == UtilityKind::direct) {
    direct.emplace(bundle, image, cs, target, cfg.fill);
    u = &*direct;
  } else {
    PieConfig pc = cfg.pie;
    pc.seed = derive_seed(seed, kPieStream);
    pc.threads = cfg.threads;
    const auto data = sample_dataset(bundle, image, cs, cfg.fill, pc);
    samples = static_cast<std::int64_t>(data.size());
    run.surrogate = train_surrogate(data, bundle, surrogate_mode(cfg.utility), pc);
    via_surrogate.emplace(run.surrogate->surrogate, target);
    u = &*via_surrogate;
    wall["surrogate_ms"] = ms_since(t0);
    t0 = Clock::now();
  }

  const bool exact = cfg.exact && n <= exact_cutoff(cfg.utility);
  ShapleyResult r = exact ? exact_shapley(*u, exact_cutoff(cfg.utility))
                          : mc_shapley(*u, cfg.K, seed, McOptions{cfg.sampler, cfg.threads, true});
  r.utility_kind = cfg.utility;
  r.seed = seed;
  wall["shapley_ms"] = ms_since(t0);

  Explanation& e = run.explanation;
  e.image = cfg.image.generic_string();
  e.target_class = target;
  e.label = bundle.labels.at(static_cast<std::size_t>(target));
  e.shapley = std::move(r);
  e.ranking = ranking(e.shapley.values);
  e.selected = select_explanation(e.shapley);
  e.config = config_echo(cfg);
  if (run.surrogate) e.surrogate = train_summary(*run.surrogate);
  run.rendered = render_explanation(image, cs, e.selected, cfg.fill);

  if (cfg.eval != EvalMode::none) {
    t0 = Clock::now();
    run.curves = evaluate(bundle, image, cs, e.ranking, target, cfg);
    e.eval = eval_json(run.curves, cfg.axis);
    wall["eval_ms"] = ms_since(t0);
  }

  e.timings["utility_evaluations"] = e.shapley.utility_evaluations;
  e.timings["surrogate_samples"] = samples;
  if (cfg.wall_clock) e.timings["wall"] = wall;
  return run;
}

std::vector<Curve> evaluate(const ModelBundle& bundle, const Image8& image, const ConceptSet& cs,
                            const std::vector<int>& order, int target_class, const RunConfig& cfg) {
  std::vector<Curve> curves;
  if (cfg.eval == EvalMode::insertion || cfg.eval == EvalMode::both)
    curves.push_back(insertion_curve(bundle, image, cs, order, target_class, cfg.fill, cfg.axis, cfg.threads));
  if (cfg.eval == EvalMode::deletion || cfg.eval == EvalMode::both)
    curves.push_back(deletion_curve(bundle, image, cs, order, target_class, cfg.fill, cfg.axis, cfg.threads));
  return curves;
}

ordered_json eval_json(const std::vector<Curve>& curves, CurveAxis axis) {
  ordered_json j;
  j["axis"] = to_string(axis);
  for (const auto& c : curves) j[to_string(c.kind)] = to_json(c);
  return j;
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::TooManyConcepts:
      return 2;
    case Errc::MalformedManifest:
    case Errc::EmptyConceptSet:
    case Errc::DimensionMismatch:
    case Errc::RleLengthMismatch:
    case Errc::NegativeRun:
    case Errc::MissingArtifact:
    case Errc::ShapeMismatch:
    case Errc::ProbeFailure:
    case Errc::IoFailure:
      return 3;
    default:
      return 4;
  }
}

// ------------------------------------------------------------------ commands

namespace {

struct Flags {
  std::string image, masks, model, toy_model, surrogate = "pie", fill = "mean", sampler = "two_stage";
  std::string eval = "none", axis = "concepts", out, report, order, game, mode = "both";
  int K = 500, pie_samples = 1000, hidden_width = 0, epochs = 100, target = -1;
  std::uint64_t seed = 0;
  bool exact = false, no_background = false, csv = false, wall_clock = false, save_surrogate = false;
};

void add_inputs(CLI::App* cmd, Flags& f) {
  cmd->add_option("--image", f.image, "Input image (PNG)");
  cmd->add_option("--masks", f.masks, "Concept mask manifest (JSON)");
  auto* model = cmd->add_option("--model", f.model, "Model bundle directory");
  auto* toy = cmd->add_option("--toy-model", f.toy_model, "Built-in toy model: seed,grid,classes");
  model->excludes(toy);
  cmd->add_option("--fill", f.fill, "Baseline fill: zero | mean | blur[:r]")->capture_default_str();
  cmd->add_flag("--no-background", f.no_background, "Do not add a background concept for uncovered pixels");
  cmd->add_option("--target", f.target, "Class to explain (default: predicted class)");
}

void add_surrogate(CLI::App* cmd, Flags& f) {
  cmd->add_option("--surrogate", f.surrogate, "pie | pie-no-sharing | linear | direct")->capture_default_str();
  cmd->add_option("--pie-samples", f.pie_samples, "Surrogate training coalitions")->capture_default_str();
  cmd->add_option("--hidden-width", f.hidden_width, "Hidden layer width of h (0: none)")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Surrogate training epochs")->capture_default_str();
}

void add_eval(CLI::App* cmd, Flags& f) {
  cmd->add_option("--axis", f.axis, "Curve x axis: concepts | pixels")->capture_default_str();
  cmd->add_flag("--csv", f.csv, "Also write each curve as x,y CSV");
}

RunConfig to_config(const Flags& f, const CLI::App* cmd) {
  RunConfig cfg;
  cfg.image = f.image;
  cfg.masks = f.masks;
  if (!f.model.empty()) cfg.model_dir = f.model;
  if (!f.toy_model.empty()) cfg.toy_model = parse_toy_model(f.toy_model);
  cfg.utility = parse_utility_kind(f.surrogate);
  if (cfg.utility == UtilityKind::table) throw Error(Errc::InvalidArgument, "--surrogate table is not an image utility");
  cfg.K = f.K;
  cfg.pie.num_samples = f.pie_samples;
  cfg.pie.epochs = f.epochs;
  if (f.hidden_width < 0) throw Error(Errc::InvalidArgument, "--hidden-width must be >= 0");
  if (f.hidden_width > 0) cfg.pie.hidden_width = f.hidden_width;
  cfg.fill = parse_fill(f.fill);
  cfg.sampler = parse_sampler(f.sampler);
  if (cmd->get_option_no_throw("--seed") && cmd->count("--seed")) cfg.seed = f.seed;
  cfg.out_dir = f.out;
  cfg.exact = f.exact;
  cfg.background = !f.no_background;
  if (f.target >= 0) cfg.target_class = f.target;
  cfg.eval = parse_eval_mode(f.eval);
  cfg.axis = parse_curve_axis(f.axis);
  cfg.csv = f.csv;
  cfg.wall_clock = f.wall_clock;
  cfg.threads = env_threads();
  return cfg;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidArgument, what);
}

void require_image_inputs(const RunConfig& cfg) {
  require(!cfg.image.empty(), "--image is required");
  require(!cfg.masks.empty(), "--masks is required");
  require(cfg.model_dir.has_value() != cfg.toy_model.has_value(), "give exactly one of --model and --toy-model");
}

void write_curves_csv(const std::vector<Curve>& curves, const std::filesystem::path& dir) {
  for (const auto& c : curves) write_atomic(dir / (to_string(c.kind) + ".csv"), to_csv(c));
}

void print_aucs(const std::vector<Curve>& curves) {
  for (const auto& c : curves) std::cout << to_string(c.kind) << "_auc " << round_sig6(auc(c)) << '\n';
}

int cmd_explain(const RunConfig& cfg) {
  require_image_inputs(cfg);
  require(cfg.seed.has_value(), "--seed is required");
  require(!cfg.out_dir.empty(), "-o is required");
  const Image8 image = read_png(cfg.image);
  const ConceptSet cs = prepare_concepts(cfg, image);
  const ModelBundle bundle = resolve_model(cfg);
  if (cfg.exact && cs.n() > exact_cutoff(cfg.utility))
    std::cerr << "eac: " << cs.n() << " concepts exceed the exact cutoff, using Monte-Carlo\n";
  if (cfg.utility == UtilityKind::direct)
    std::cerr << "eac: direct utility runs the full model for every coalition\n";

  const ExplainRun run = explain(bundle, image, cs, cfg);
  ensure_dir(cfg.out_dir);
  write_png_atomic(run.rendered, cfg.out_dir / "explanation.png");
  if (cfg.csv) write_curves_csv(run.curves, cfg.out_dir);
  write_report(run.explanation, cfg.out_dir / "report.json");
  print_aucs(run.curves);
  return 0;
}

std::vector<int> parse_order(const std::string& text) {
  std::vector<int> order;
  std::stringstream ss(text);
  try {
    for (std::string item; std::getline(ss, item, ',');) order.push_back(std::stoi(item));
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "--order expects comma-separated concept indices");
  }
  return order;
}

int cmd_eval(RunConfig cfg, const Flags& f, const CLI::App* cmd) {
  require_image_inputs(cfg);
  require(f.report.empty() != f.order.empty(), "give exactly one of --report and --order");
  cfg.eval = parse_eval_mode(f.mode);
  require(cfg.eval != EvalMode::none, "--mode must be insertion, deletion or both");

  std::optional<Explanation> prior;
  std::vector<int> order;
  if (!f.report.empty()) {
    prior = read_report(f.report);
    order = prior->ranking;
    // Unless overridden, score under the settings the report was made with.
    if (!cmd->count("--fill") && prior->config.contains("fill"))
      cfg.fill = parse_fill(prior->config["fill"].get<std::string>());
    if (!cmd->count("--no-background") && prior->config.contains("background"))
      cfg.background = prior->config["background"].get<bool>();
    if (!cmd->count("--target")) cfg.target_class = prior->target_class;
  } else {
    order = parse_order(f.order);
    require(!cfg.out_dir.empty(), "-o is required with --order");
  }

  const Image8 image = read_png(cfg.image);
  const ConceptSet cs = prepare_concepts(cfg, image);
  const ModelBundle bundle = resolve_model(cfg);
  const int target = resolve_target(bundle, image, cfg.target_class);
  const auto curves = evaluate(bundle, image, cs, order, target, cfg);

  ordered_json doc = eval_json(curves, cfg.axis);
  const std::filesystem::path dir = cfg.out_dir.empty() ? std::filesystem::path(f.report).parent_path() : cfg.out_dir;
  if (!dir.empty()) ensure_dir(dir);
  if (cfg.csv) write_curves_csv(curves, dir);
  if (prior) {
    prior->eval = doc;
    write_report(*prior, cfg.out_dir.empty() ? std::filesystem::path(f.report) : cfg.out_dir / "report.json");
  } else {
    ordered_json out;
    out["target_class"] = target;
    out["eval"] = doc;
    write_atomic(dir / "eval.json", round_floats(out).dump(2) + "\n");
  }
  print_aucs(curves);
  return 0;
}

int cmd_exact_shapley(const RunConfig& cfg, const Flags& f) {
  ordered_json out;
  ShapleyResult r;
  if (!f.game.empty()) {
    const TableGame game = TableGame::from_json(read_text(f.game));
    r = exact_shapley(game);
    r.utility_kind = UtilityKind::table;
  } else {
    require_image_inputs(cfg);
    const Image8 image = read_png(cfg.image);
    const ConceptSet cs = prepare_concepts(cfg, image);
    const int cutoff = exact_cutoff(cfg.utility);
    if (cs.n() > cutoff)
      throw Error(Errc::TooManyConcepts, std::to_string(cs.n()) + " concepts exceed the exact cutoff of " +
                                             std::to_string(cutoff) + " for " + to_string(cfg.utility));
    require(cfg.utility == UtilityKind::direct || cfg.seed.has_value(), "--seed is required for surrogate utilities");
    RunConfig exact_cfg = cfg;
    exact_cfg.exact = true;
    if (!exact_cfg.seed) exact_cfg.seed = 0;
    const ModelBundle bundle = resolve_model(cfg);
    r = explain(bundle, image, cs, exact_cfg).explanation.shapley;
  }
  out["n"] = r.n();
  out["utility_kind"] = to_string(r.utility_kind);
  out["values"] = std::vector<double>(r.values.data(), r.values.data() + r.values.size());
  const std::string text = round_floats(out).dump(2) + "\n";
  if (!f.out.empty()) {
    const std::filesystem::path path(f.out);
    if (path.has_parent_path()) ensure_dir(path.parent_path());
    write_atomic(path, text);
  }
  std::cout << text;
  return 0;
}

int cmd_pie_fit(const RunConfig& cfg, const Flags& f) {
  require_image_inputs(cfg);
  require(cfg.seed.has_value(), "--seed is required");
  require(cfg.utility != UtilityKind::direct, "pie-fit needs a surrogate mode");
  require(!cfg.out_dir.empty(), "-o is required");
  const Image8 image = read_png(cfg.image);
  const ConceptSet cs = prepare_concepts(cfg, image);
  const ModelBundle bundle = resolve_model(cfg);

  PieConfig pc = cfg.pie;
  pc.seed = derive_seed(*cfg.seed, kPieStream);
  pc.threads = cfg.threads;
  const auto data = sample_dataset(bundle, image, cs, cfg.fill, pc);
  const std::uint64_t before = fc_checksum(bundle.fc_weight, bundle.fc_bias);
  const TrainedSurrogate ts = train_surrogate(data, bundle, surrogate_mode(cfg.utility), pc);

  ordered_json out;
  out["n_concepts"] = cs.n();
  out["config"] = config_echo(cfg);
  out["surrogate"] = train_summary(ts);
  out["epoch_loss"] = ts.report.epoch_loss;
  if (cfg.utility == UtilityKind::pie) {
    const std::uint64_t after = fc_checksum(ts.surrogate.fc_weight(), ts.surrogate.fc_bias());
    out["fc_checksum"] = {{"bundle", before}, {"surrogate", after}, {"shared", before == after}};
  }
  ensure_dir(cfg.out_dir);
  if (f.save_surrogate) ts.surrogate.save(cfg.out_dir / "surrogate.json");
  write_atomic(cfg.out_dir / "fidelity.json", round_floats(out).dump(2) + "\n");
  std::cout << "holdout_top1 " << round_sig6(ts.report.holdout_top1) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Concept-level Shapley explanations for image classifiers"};
  app.require_subcommand(1);
  Flags f;

  auto* explain_cmd = app.add_subcommand("explain", "Explain one image: Shapley values, selection, rendering");
  add_inputs(explain_cmd, f);
  add_surrogate(explain_cmd, f);
  add_eval(explain_cmd, f);
  explain_cmd->add_option("-K", f.K, "Sampled coalitions per concept")->capture_default_str();
  explain_cmd->add_option("--sampler", f.sampler, "two_stage | permutation")->capture_default_str();
  explain_cmd->add_option("--seed", f.seed, "Seed for every stochastic choice")->required();
  explain_cmd->add_option("-o,--out", f.out, "Output directory")->required();
  explain_cmd->add_flag("--exact", f.exact, "Enumerate all coalitions when n is under the cutoff");
  explain_cmd->add_option("--eval", f.eval, "Also score the ranking: none | insertion | deletion | both")
      ->capture_default_str();
  explain_cmd->add_flag("--wall-clock", f.wall_clock, "Record elapsed times in the report (not reproducible)");

  auto* eval_cmd = app.add_subcommand("eval", "Insertion/deletion curves for a ranking");
  add_inputs(eval_cmd, f);
  add_eval(eval_cmd, f);
  eval_cmd->add_option("--report", f.report, "Report whose ranking is scored (updated in place unless -o)");
  eval_cmd->add_option("--order", f.order, "Explicit ranking: comma-separated concept indices");
  eval_cmd->add_option("--mode", f.mode, "insertion | deletion | both")->capture_default_str();
  eval_cmd->add_option("-o,--out", f.out, "Output directory");

  auto* exact_cmd = app.add_subcommand("exact-shapley", "Exact Shapley values by enumeration");
  add_inputs(exact_cmd, f);
  add_surrogate(exact_cmd, f);
  exact_cmd->add_option("--game", f.game, "Payoff table {\"n\": n, \"values\": [2^n entries]}");
  exact_cmd->add_option("--seed", f.seed, "Seed for surrogate training");
  exact_cmd->add_option("-o,--out", f.out, "Output JSON file");

  auto* fit_cmd = app.add_subcommand("pie-fit", "Train a surrogate and report its fidelity");
  add_inputs(fit_cmd, f);
  add_surrogate(fit_cmd, f);
  fit_cmd->add_option("--seed", f.seed, "Seed for sampling and training")->required();
  fit_cmd->add_option("-o,--out", f.out, "Output directory")->required();
  fit_cmd->add_flag("--save-surrogate", f.save_surrogate, "Also write the surrogate checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "eac: " << e.what() << '\n';
    return 2;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const RunConfig cfg = to_config(f, cmd);
    if (cmd == explain_cmd) return cmd_explain(cfg);
    if (cmd == eval_cmd) return cmd_eval(cfg, f, cmd);
    if (cmd == exact_cmd) return cmd_exact_shapley(cfg, f);
    return cmd_pie_fit(cfg, f);
  } catch (const Error& e) {
    std::cerr << "eac: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "eac: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace eac
