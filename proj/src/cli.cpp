#include "divkit/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "divkit/bias_lab.hpp"
#include "divkit/discrepancy.hpp"
#include "divkit/errors.hpp"
#include "divkit/guidance.hpp"
#include "divkit/projection.hpp"

namespace divkit::cli {
namespace {

namespace fs = std::filesystem;

std::vector<Eigen::Index> geometric_sizes(Eigen::Index start, Eigen::Index stop) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index n = start; n <= stop; n *= 2) out.push_back(n);
  return out;
}

std::vector<Eigen::Index> sizes_or(const Json& config, std::vector<Eigen::Index> fallback) {
  const Json& s = config.at("sizes");
  if (s.is_null()) return fallback;
  return s.get<std::vector<Eigen::Index>>();
}

EmbeddingFormat resolve_format(const std::string& name, const fs::path& path) {
  return name == "auto" ? format_from_extension(path) : parse_format(name);
}

EmbeddingSet load_input(const Json& config, const std::string& key, const std::string& format_key) {
  const fs::path path = config.at(key).get<std::string>();
  return load_embeddings(path, resolve_format(config.at(format_key).get<std::string>(), path));
}

Sampler sampler_from(const Json& j) {
  const std::string type = j.value("type", std::string("cube"));
  if (type != "cube") throw Error(ErrorKind::Usage, "unknown sampler type '" + type + "'");
  CubeMixtureSpec spec;
  spec.dimension = j.value("dimension", 10U);
  spec.component_std = j.value("component_std", 1e-4);
  return cube_sampler(spec);
}

RunSeed seed_from(const Json& config) { return RunSeed{config.at("seed").get<std::uint64_t>(), 0}; }

CurveOptions curve_options(const Json& config) {
  CurveOptions opts;
  opts.jobs = std::max(1U, config.at("jobs").get<unsigned>());
  opts.entropy.size_cap = config.value("size_cap", Eigen::Index{20000});
  return opts;
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception&) {
    return Json(text);
  }
}

Json parse_sizes(const std::string& text) {
  if (!text.empty() && text.front() == '[') return Json::parse(text);
  Json out = Json::array();
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(std::stoll(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void set_path(Json& j, const std::string& dotted, Json value) {
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = Json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

Json base_common() {
  return Json{{"seed", 0}, {"trials", 10}, {"jobs", 1}, {"timestamp", 0}};
}

Json gaussian(double bandwidth) { return KernelSpec::gaussian(bandwidth).to_json(); }

// ---------------------------------------------------------------------------

ResultRecord run_score(const Json& config) {
  const KernelSpec spec = KernelSpec::from_json(config.at("kernel"));
  const EmbeddingSet x = load_input(config, "input", "format");
  Json payload{{"config", config}, {"score", vendi(x, spec).to_json()}};
  if (!config.at("against").is_null()) {
    const EmbeddingSet y = load_input(config, "against", "against_format");
    payload["discrepancy"] = discrepancy(x, y, spec).to_json();
  }
  return ResultRecord{RecordKind::score, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

ResultRecord run_curve(const Json& config, const fs::path& out) {
  const KernelSpec spec = KernelSpec::from_json(config.at("kernel"));
  const auto sizes = sizes_or(config, geometric_sizes(64, 4096));
  const auto trials = config.at("trials").get<std::size_t>();
  const CurveMetric metric = parse_curve_metric(config.at("metric").get<std::string>());
  const CurveOptions opts = curve_options(config);
  DiversityCurve curve = config.at("input").is_null()
                             ? vendi_curve(sampler_from(config.at("sampler")), sizes, trials, spec, seed_from(config), opts, metric)
                             : vendi_curve(load_input(config, "input", "format"), sizes, trials, spec, seed_from(config), opts, metric);
  write_plot_data(out / "curve.dat", {"size", "mean", "ci_low", "ci_high"}, curve.plot_rows());
  Json payload{{"config", config}, {"curve", curve.to_json()}, {"monotone", check_monotone_logvendi(curve).to_json()}};
  return ResultRecord{RecordKind::curve, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

ResultRecord run_bias(const Json& config, const fs::path& out) {
  const std::string law = config.at("law").get<std::string>();
  const auto trials = config.at("trials").get<std::size_t>();
  const bool full = config.at("full_grid").get<bool>();
  const CurveOptions opts = curve_options(config);
  std::vector<Eigen::Index> paper_grid = geometric_sizes(64, 16384);
  paper_grid.push_back(20000);
  Json payload{{"config", config}};
  std::vector<std::vector<double>> rows;
  if (law == "discrete") {
    const auto r = config.at("alphabet_size").get<std::uint64_t>();
    std::vector<Eigen::Index> desk = geometric_sizes(256, 16384);
    desk.push_back(20480);
    const auto sizes = sizes_or(config, full ? paper_grid : desk);
    const DiversityCurve curve = run_discrete_bias(DiscreteLawSpec{r}, sizes, trials, seed_from(config), opts);
    Json gaps = Json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double gap = std::log(static_cast<double>(r)) - curve.log_mean[i];
      const double miller = miller_gap(r, static_cast<std::uint64_t>(sizes[i]));
      gaps.push_back(Json{{"size", sizes[i]}, {"entropy_gap", gap}, {"miller_gap", miller}});
      rows.push_back({static_cast<double>(sizes[i]), curve.mean[i], curve.ci_low[i], curve.ci_high[i], gap, miller});
    }
    payload["curve"] = curve.to_json();
    payload["gaps"] = gaps;
    write_plot_data(out / "curve.dat", {"size", "mean", "ci_low", "ci_high", "entropy_gap", "miller_gap"}, rows);
  } else if (law == "cube") {
    const KernelSpec spec = KernelSpec::from_json(config.at("kernel"));
    CubeMixtureSpec cube;
    cube.dimension = config.at("dimension").get<unsigned>();
    cube.component_std = config.at("component_std").get<double>();
    const auto sizes = sizes_or(config, full ? paper_grid : geometric_sizes(64, 4096));
    const DiversityCurve curve = vendi_curve(cube_sampler(cube), sizes, trials, spec, seed_from(config), opts);
    payload["curve"] = curve.to_json();
    payload["monotone"] = check_monotone_logvendi(curve).to_json();
    const auto pairs = config.at("population_pairs").get<std::uint64_t>();
    if (pairs > 0)
      payload["population_rke"] = population_rke_mc(cube_sampler(cube), spec, pairs, seed_from(config).derive(1u << 30)).to_json();
    write_plot_data(out / "curve.dat", {"size", "mean", "ci_low", "ci_high"}, curve.plot_rows());
  } else {
    throw Error(ErrorKind::Usage, "unknown law '" + law + "' (expected discrete or cube)");
  }
  return ResultRecord{RecordKind::bias, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

ResultRecord run_project(const Json& config, const fs::path& out) {
  std::optional<GramMatrix> k;
  if (!config.at("gram").is_null()) {
    k = load_gram(config.at("gram").get<std::string>());
  } else if (!config.at("input").is_null()) {
    k = gram(load_input(config, "input", "format"), KernelSpec::from_json(config.at("kernel")));
  } else {
    throw Error(ErrorKind::Usage, "project needs either 'gram' or 'input'");
  }
  ProjectionConfig cfg;
  cfg.mode = parse_projection_mode(config.at("mode").get<std::string>());
  cfg.lambda = config.at("lambda").get<double>();
  cfg.eta = config.at("eta").get<double>();
  cfg.gamma = config.at("gamma").get<double>();
  cfg.max_iters = config.at("max_iters").get<int>();
  cfg.tol = config.at("tol").get<double>();
  cfg.weight_floor = config.at("weight_floor").get<double>();
  cfg.refresh_every = config.at("refresh_every").get<int>();
  if (cfg.mode == ProjectionMode::vne_constrained) {
    if (!config.at("rho").is_null()) {
      cfg.rho = config.at("rho").get<double>();
    } else if (!config.at("vendi_target").is_null()) {
      cfg.rho = std::log(config.at("vendi_target").get<double>());
    } else {
      throw Error(ErrorKind::Usage, "vne_constrained needs 'rho' or 'vendi_target'");
    }
  }
  const ProjectionResult r = project(*k, cfg);
  std::string weights;
  for (Eigen::Index i = 0; i < r.q_star.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g\n", r.q_star(i));
    weights += buf;
  }
  write_text_file(out / "weights.txt", weights);
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < r.objective_trace.size(); ++t)
    rows.push_back({static_cast<double>(t), r.objective_trace[t], r.entropy_trace[t],
                    r.dual_trace.empty() ? 0.0 : r.dual_trace[t]});
  write_plot_data(out / "trace.dat", {"iteration", "objective", "entropy", "dual"}, rows);
  Json payload{{"config", config}, {"solver", cfg.to_json()}, {"result", r.to_json()}};
  return ResultRecord{RecordKind::projection, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

Vector base_weights_from(const Json& j, Eigen::Index modes) {
  if (j.is_array()) {
    Vector w(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) w(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    if (w.size() != modes) throw Error(ErrorKind::DimensionMismatch, "base_weights length vs mode count");
    return w;
  }
  const std::string type = j.value("type", std::string("uniform"));
  Vector w(modes);
  if (type == "uniform") {
    w.setConstant(1.0);
  } else if (type == "geometric") {
    const double ratio = j.value("ratio", 0.7);
    for (Eigen::Index k = 0; k < modes; ++k) w(k) = std::pow(ratio, static_cast<double>(k));
  } else {
    throw Error(ErrorKind::Usage, "unknown base_weights type '" + type + "'");
  }
  return w;
}

ResultRecord run_guide(const Json& config, const fs::path& out) {
  const Json& layout = config.at("layout");
  const double sd = config.at("component_std").get<double>();
  const std::string type = layout.value("type", std::string("grid"));
  MixtureSpec2D target;
  if (type == "grid") {
    target = MixtureSpec2D::grid(layout.value("rows", 4), layout.value("cols", 4), layout.value("spacing", 1.0), sd);
  } else if (type == "circle") {
    target = MixtureSpec2D::circle(layout.value("modes", 8), layout.value("radius", 1.0), sd);
  } else {
    throw Error(ErrorKind::Usage, "unknown layout '" + type + "'");
  }
  GuidanceRunConfig cfg;
  cfg.target = target;
  cfg.base_weights = base_weights_from(config.at("base_weights"), target.size());
  cfg.n_samples = config.at("n_samples").get<Eigen::Index>();
  const int steps = config.at("steps").get<int>();
  const std::string schedule = config.at("schedule").get<std::string>();
  if (schedule == "linear_beta") {
    cfg.schedule = NoiseSchedule::linear_beta(steps);
  } else if (schedule == "cosine") {
    cfg.schedule = NoiseSchedule::cosine(steps);
  } else {
    throw Error(ErrorKind::Usage, "unknown schedule '" + schedule + "'");
  }
  const std::string sampler = config.at("sampler").get<std::string>();
  if (sampler != "ddim" && sampler != "ancestral") throw Error(ErrorKind::Usage, "unknown sampler '" + sampler + "'");
  cfg.sampler = sampler == "ddim" ? SamplerKind::ddim : SamplerKind::ancestral;
  cfg.guidance.eta = config.at("eta").get<double>();
  cfg.guidance.linear_decay = config.at("eta_decay").get<bool>();
  cfg.guidance.apply_every = config.at("apply_every").get<int>();
  const double bandwidth =
      config.at("bandwidth").is_null() ? 0.5 * target.min_spacing() : config.at("bandwidth").get<double>();
  cfg.guidance.kernel = KernelSpec::gaussian(bandwidth);
  const std::string policy = config.at("bank_policy").get<std::string>();
  if (policy != "all_finals" && policy != "every_k_steps") throw Error(ErrorKind::Usage, "unknown bank_policy '" + policy + "'");
  cfg.bank_policy = policy == "all_finals" ? BankPolicy::all_finals : BankPolicy::every_k_steps;
  const auto capacity = config.at("bank_capacity").get<std::size_t>();
  cfg.bank_capacity = capacity == 0 ? std::size_t{1} << 40 : capacity;
  cfg.bank_every_k = config.at("bank_every_k").get<int>();
  cfg.record_trajectories = config.at("dump_trajectories").get<bool>();

  const GuidanceRun run = run_guided_sampling(cfg, seed_from(config));
  save_embeddings(run.guided, out / "guided.emb", EmbeddingFormat::binary);
  save_embeddings(run.baseline, out / "baseline.emb", EmbeddingFormat::binary);
  save_embeddings(run.reference, out / "reference.emb", EmbeddingFormat::binary);
  if (cfg.record_trajectories) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < run.trajectories.size(); ++i)
      for (Eigen::Index s = 0; s < run.trajectories[i].rows(); ++s)
        rows.push_back({static_cast<double>(i), static_cast<double>(s), run.trajectories[i](s, 0), run.trajectories[i](s, 1)});
    write_plot_data(out / "trajectories.dat", {"sample", "step", "x", "y"}, rows);
  }
  Json payload{{"config", config}, {"metrics", run.to_json()}, {"bandwidth", bandwidth}};
  return ResultRecord{RecordKind::guidance, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

ResultRecord run_concentration(const Json& config) {
  const KernelSpec spec = KernelSpec::from_json(config.at("kernel"));
  const ConcentrationReport report =
      check_concentration(sampler_from(config.at("sampler")), config.at("m").get<Eigen::Index>(),
                          config.at("trials").get<std::size_t>(), spec, config.at("delta").get<double>(),
                          seed_from(config), curve_options(config));
  Json payload{{"config", config}, {"report", report.to_json()}};
  return ResultRecord{RecordKind::bias, payload, config_hash(config), config.at("timestamp").get<std::int64_t>()};
}

struct Flag {
  std::string name;
  std::string key;
  std::string help;
};

const std::map<std::string, std::vector<Flag>>& command_flags() {
  static const std::map<std::string, std::vector<Flag>> flags = {
      {"score",
       {{"--format", "format", "csv, binary or auto"},
        {"--kernel", "kernel.family", "gaussian or cosine"},
        {"--bandwidth", "kernel.bandwidth", "Gaussian bandwidth"},
        {"--against", "against", "second embedding file for KD/FD/MMD"},
        {"--against-format", "against_format", "format of the second file"}}},
      {"curve",
       {{"--input", "input", "embedding file (subsample mode)"},
        {"--format", "format", "csv, binary or auto"},
        {"--metric", "metric", "vendi or rke"},
        {"--kernel", "kernel.family", "gaussian or cosine"},
        {"--bandwidth", "kernel.bandwidth", "Gaussian bandwidth"},
        {"--dimension", "sampler.dimension", "cube sampler dimension"},
        {"--component-std", "sampler.component_std", "cube sampler component std"}}},
      {"bias",
       {{"--law", "law", "discrete or cube"},
        {"--alphabet-size", "alphabet_size", "alphabet size r (discrete)"},
        {"--dimension", "dimension", "cube dimension d"},
        {"--component-std", "component_std", "cube component std"},
        {"--bandwidth", "kernel.bandwidth", "Gaussian bandwidth (cube)"},
        {"--population-pairs", "population_pairs", "pairs for the population RKE estimate (0 = skip)"}}},
      {"project",
       {{"--gram", "gram", "binary GRAM file"},
        {"--input", "input", "embedding file (Gram built with --kernel)"},
        {"--format", "format", "csv, binary or auto"},
        {"--kernel", "kernel.family", "gaussian or cosine"},
        {"--bandwidth", "kernel.bandwidth", "Gaussian bandwidth"},
        {"--mode", "mode", "vne_constrained, vne_penalized or rke_penalized"},
        {"--lambda", "lambda", "penalty weight"},
        {"--rho", "rho", "entropy target in nats (vne_constrained)"},
        {"--vendi-target", "vendi_target", "Vendi-valued target, converted by log"},
        {"--eta", "eta", "primal stepsize"},
        {"--gamma", "gamma", "dual stepsize"},
        {"--max-iters", "max_iters", "iteration limit"},
        {"--tol", "tol", "stopping tolerance"}}},
      {"guide",
       {{"--n-samples", "n_samples", "samples per run"},
        {"--steps", "steps", "reverse-diffusion steps"},
        {"--eta", "eta", "guidance weight"},
        {"--apply-every", "apply_every", "steps between guidance applications"},
        {"--bandwidth", "bandwidth", "latent kernel bandwidth (default: mode spacing / 2)"},
        {"--component-std", "component_std", "mixture component std"},
        {"--sampler", "sampler", "ddim or ancestral"},
        {"--bank-policy", "bank_policy", "all_finals or every_k_steps"}}},
      {"concentration",
       {{"--m", "m", "sample size per trial"},
        {"--delta", "delta", "failure probability"},
        {"--bandwidth", "kernel.bandwidth", "Gaussian bandwidth"},
        {"--dimension", "sampler.dimension", "cube sampler dimension"},
        {"--component-std", "sampler.component_std", "cube sampler component std"}}},
  };
  return flags;
}

Json load_config_file(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::MalformedFile, path + ": " + e.what());
  }
}

}  // namespace

Json default_config(const std::string& command) {
  Json c = base_common();
  c["command"] = command;
  if (command == "score") {
    c = Json{{"command", "score"}, {"timestamp", 0}, {"input", nullptr}, {"format", "auto"},
             {"kernel", gaussian(1.0)}, {"against", nullptr}, {"against_format", "auto"}};
  } else if (command == "curve") {
    c.update(Json{{"input", nullptr}, {"format", "auto"}, {"metric", "vendi"}, {"sizes", nullptr},
                  {"kernel", gaussian(0.1)}, {"size_cap", 20000},
                  {"sampler", Json{{"type", "cube"}, {"dimension", 10}, {"component_std", 1e-4}}}});
  } else if (command == "bias") {
    c.update(Json{{"law", "discrete"}, {"alphabet_size", 1024}, {"dimension", 10}, {"component_std", 1e-4},
                  {"kernel", gaussian(0.1)}, {"sizes", nullptr}, {"full_grid", false}, {"population_pairs", 0},
                  {"size_cap", 20000}});
  } else if (command == "project") {
    c.erase("trials");
    c.erase("jobs");
    c.update(Json{{"gram", nullptr}, {"input", nullptr}, {"format", "auto"}, {"kernel", gaussian(1.0)},
                  {"mode", "vne_penalized"}, {"lambda", 0.01}, {"rho", nullptr}, {"vendi_target", nullptr},
                  {"eta", 0.1}, {"gamma", 1.0}, {"max_iters", 5000}, {"tol", 1e-8}, {"weight_floor", 1e-15},
                  {"refresh_every", 1}});
  } else if (command == "guide") {
    c.erase("trials");
    c.erase("jobs");
    c.update(Json{{"layout", Json{{"type", "grid"}, {"rows", 4}, {"cols", 4}, {"spacing", 1.0}}},
                  {"component_std", 0.05}, {"base_weights", Json{{"type", "geometric"}, {"ratio", 0.7}}},
                  {"n_samples", 1000}, {"steps", 200}, {"schedule", "linear_beta"}, {"sampler", "ddim"},
                  {"eta", 0.03}, {"eta_decay", false}, {"apply_every", 10}, {"bandwidth", nullptr},
                  {"bank_policy", "all_finals"}, {"bank_capacity", 0}, {"bank_every_k", 10},
                  {"dump_trajectories", false}});
  } else if (command == "concentration") {
    c.update(Json{{"trials", 100}, {"m", 500}, {"delta", 0.01}, {"kernel", gaussian(0.1)}, {"size_cap", 20000},
                  {"sampler", Json{{"type", "cube"}, {"dimension", 8}, {"component_std", 1e-4}}}});
  } else {
    throw Error(ErrorKind::Usage, "unknown command '" + command + "'");
  }
  return c;
}

Json merge_config(const std::string& command, const Json& base, const Json& overrides) {
  const Json defaults = default_config(command);
  Json out = base;
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    if (!defaults.contains(it.key())) throw Error(ErrorKind::Usage, "unknown config key '" + it.key() + "' for " + command);
    if (it.key() == "command" && it.value() != command)
      throw Error(ErrorKind::Usage, "config is for command '" + it.value().dump() + "'");
    if (it.value().is_object() && out[it.key()].is_object()) {
      out[it.key()].merge_patch(it.value());
    } else {
      out[it.key()] = it.value();
    }
  }
  return out;
}

fs::path output_root(const std::string& explicit_root) {
  if (!explicit_root.empty()) return explicit_root;
  if (const char* env = std::getenv("DIVKIT_CACHE_DIR"); env && *env) return env;
  return "divkit-out";
}

ResultRecord run_command(const std::string& command, const Json& config, const fs::path& out_dir) {
  try {
    if (command == "score") return run_score(config);
    if (command == "curve") return run_curve(config, out_dir);
    if (command == "bias") return run_bias(config, out_dir);
    if (command == "project") return run_project(config, out_dir);
    if (command == "guide") return run_guide(config, out_dir);
    if (command == "concentration") return run_concentration(config);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Usage, std::string("bad config value: ") + e.what());
  }
  throw Error(ErrorKind::Usage, "unknown command '" + command + "'");
}

int main(int argc, char** argv) {
  CLI::App app{"divkit: kernel-entropy diversity scores, entropy-bias experiments, projection and guidance"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<unsigned> jobs;
    std::optional<std::string> sizes;
    std::string out;
    bool force = false;
    std::string input;
    std::map<std::string, std::string> flag_values;
  };
  std::map<std::string, Common> commons;
  std::map<std::string, CLI::App*> subs;

  const std::map<std::string, std::string> descriptions = {
      {"score", "Vendi/RKE of an embedding file, plus KD/FD/MMD against a second file"},
      {"curve", "Score-vs-size curve with confidence intervals"},
      {"bias", "Finite-sample entropy-bias experiments (discrete law or cube mixture)"},
      {"project", "Empirical-support entropy projection of a Gram matrix"},
      {"guide", "Inverse-RKE guided sampling on a 2D Gaussian mixture"},
      {"concentration", "Monte Carlo check of the log-Vendi concentration bound"},
  };
  for (const auto& [name, desc] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, desc);
    subs[name] = sub;
    Common& c = commons[name];
    sub->add_option("--config", c.config_path, "JSON config file (flags override it)");
    sub->add_option("--set", c.sets, "Override a config key: key=JSON (dotted keys for nested values)");
    sub->add_option("--out", c.out, "Output root (default $DIVKIT_CACHE_DIR or ./divkit-out)");
    if (name == "score") {
      sub->add_option("input", c.input, "Embedding file")->required();
    } else {
      sub->add_option("--seed", c.seed, "Run seed");
      if (name != "project" && name != "guide") {
        sub->add_option("--trials", c.trials, "Independent trials");
        sub->add_option("--jobs", c.jobs, "Cap on concurrent trials");
      }
      if (name == "curve" || name == "bias") sub->add_option("--sizes", c.sizes, "Sample sizes, e.g. 64,128,256");
      sub->add_flag("--force", c.force, "Recompute even if the output directory already holds this config");
    }
    for (const auto& f : command_flags().at(name)) sub->add_option(f.name, c.flag_values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    std::string command;
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) command = name;
    Common& c = commons[command];

    Json overrides = Json::object();
    if (command == "score") overrides["input"] = c.input;
    if (c.seed) overrides["seed"] = *c.seed;
    if (c.trials) overrides["trials"] = *c.trials;
    if (c.jobs) overrides["jobs"] = *c.jobs;
    if (c.sizes) overrides["sizes"] = parse_sizes(*c.sizes);
    for (const auto& f : command_flags().at(command)) {
      const std::string& v = c.flag_values[f.key];
      if (!subs[command]->get_option(f.name)->empty()) set_path(overrides, f.key, parse_value(v));
    }
    for (const auto& s : c.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::Usage, "--set expects key=value, got '" + s + "'");
      set_path(overrides, s.substr(0, eq), parse_value(s.substr(eq + 1)));
    }
    // String-typed keys must stay strings even when they look like numbers.
    for (const char* key : {"input", "against", "gram"})
      if (overrides.contains(key) && !overrides[key].is_string() && !overrides[key].is_null())
        overrides[key] = overrides[key].dump();

    const Json defaults = default_config(command);
    Json config = merge_config(command, defaults, load_config_file(c.config_path));
    config = merge_config(command, config, overrides);
    config["command"] = command;

    if (command == "score") {
      const ResultRecord record = run_command(command, config, {});
      const std::string text = canonical_dump(record.to_json());
      std::cout << text << "\n";
      if (!c.out.empty()) {
        fs::create_directories(c.out);
        save_record(record, fs::path(c.out) / ("score-" + record.config_hash + ".json"));
      }
      return 0;
    }

    const std::string hash = config_hash(config);
    const fs::path dir = output_root(c.out) / (command + "-" + hash);
    const fs::path record_path = dir / "record.json";
    if (!c.force && fs::exists(record_path)) {
      std::cout << "up to date: " << record_path.string() << "\n";
      return 0;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    const ResultRecord record = run_command(command, config, dir);
    save_record(record, record_path);
    std::cout << record_path.string() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "divkit: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "divkit: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace divkit::cli
