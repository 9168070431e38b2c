#include "mildlevy/config.hpp"

#include "mildlevy/errors.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>

namespace mildlevy {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

void allow_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigurationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigurationError(where + ": unknown key '" + key + "' (valid: " + join(allowed) + ")");
    }
  }
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigurationError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::size_t count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigurationError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> numbers(const json& obj, const char* key, std::vector<double> fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigurationError(where + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigurationError(where + "." + key + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

StateVector vector_of(const json& obj, const char* key, const std::string& where) {
  const auto v = numbers(obj, key, {}, where);
  return Eigen::Map<const StateVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<DeclaredConstants> declared_of(const json& obj, const std::string& where) {
  if (!obj.contains("declared")) return std::nullopt;
  const auto& d = obj.at("declared");
  allow_keys(d, {"M", "C", "D"}, where + ".declared");
  DeclaredConstants c;
  c.M = number(d, "M", 0.0, where + ".declared");
  c.C = number(d, "C", 0.0, where + ".declared");
  c.D = number(d, "D", 0.0, where + ".declared");
  return c;
}

ScalarFunction scalar_or(const json& obj, const char* key, ScalarFunction fallback) {
  return obj.contains(key) ? parse_scalar_function(obj.at(key)) : fallback;
}

JumpSpec parse_jump(const json& j, const std::string& where) {
  allow_keys(j, {"kind", "scale", "h"}, where);
  JumpSpec s;
  const std::string kind = j.value("kind", std::string("linear"));
  if (kind == "none") {
    s.kind = JumpCoefficient::Kind::none;
  } else if (kind == "linear") {
    s.kind = JumpCoefficient::Kind::linear;
  } else if (kind == "nemitsky") {
    s.kind = JumpCoefficient::Kind::nemitsky;
  } else {
    throw ConfigurationError(where + ".kind: unknown jump kind '" + kind + "' (valid: none, linear, nemitsky)");
  }
  s.scale = number(j, "scale", 1.0, where);
  s.h = scalar_or(j, "h", ScalarFunction::zero());
  return s;
}

DiffusionSpec parse_diffusion(const json& j, const std::string& where) {
  allow_keys(j, {"kind", "sigma", "modes", "h"}, where);
  DiffusionSpec s;
  const std::string kind = j.value("kind", std::string("none"));
  if (kind == "none") {
    s.kind = DiffusionCoefficient::Kind::none;
  } else if (kind == "constant") {
    s.kind = DiffusionCoefficient::Kind::constant;
  } else if (kind == "linear") {
    s.kind = DiffusionCoefficient::Kind::linear;
  } else if (kind == "nemitsky") {
    s.kind = DiffusionCoefficient::Kind::nemitsky;
  } else {
    throw ConfigurationError(where + ".kind: unknown diffusion kind '" + kind +
                             "' (valid: none, constant, linear, nemitsky)");
  }
  s.sigma = number(j, "sigma", 0.0, where);
  s.modes = count(j, "modes", 0, where);
  s.h = scalar_or(j, "h", ScalarFunction::zero());
  return s;
}

}  // namespace

ScalarFunction parse_scalar_function(const json& spec) {
  std::vector<std::string> valid = scalar_function_catalog();
  valid.push_back("shifted");
  valid.push_back("yosida");
  std::string name;
  if (spec.is_string()) {
    name = spec.get<std::string>();
  } else if (spec.is_object() && spec.contains("name") && spec.at("name").is_string()) {
    name = spec.at("name").get<std::string>();
  } else {
    throw ConfigurationError("scalar function: expected a name or an object with \"name\" (valid: " + join(valid) + ")");
  }
  const json params = spec.is_object() ? spec : json::object();
  const std::string where = "scalar function '" + name + "'";
  if (name == "zero") {
    allow_keys(params, {"name"}, where);
    return ScalarFunction::zero();
  }
  if (name == "neg_cbrt") {
    allow_keys(params, {"name"}, where);
    return ScalarFunction::neg_cbrt();
  }
  if (name == "affine") {
    allow_keys(params, {"name", "a", "b"}, where);
    return ScalarFunction::affine(number(params, "a", 0.0, where), number(params, "b", 0.0, where));
  }
  if (name == "saturated_linear") {
    allow_keys(params, {"name", "c"}, where);
    return ScalarFunction::saturated_linear(number(params, "c", 1.0, where));
  }
  if (name == "piecewise") {
    allow_keys(params, {"name", "left_slope", "right_slope", "lipschitz"}, where);
    return ScalarFunction::piecewise(number(params, "left_slope", 1.0, where), number(params, "right_slope", 1.0, where),
                                     number(params, "lipschitz", 0.0, where));
  }
  if (name == "sine") {
    allow_keys(params, {"name", "amplitude"}, where);
    return ScalarFunction::sine(number(params, "amplitude", 1.0, where));
  }
  if (name == "shifted" || name == "yosida") {
    if (!params.contains("inner")) throw ConfigurationError(where + ": missing \"inner\"");
    const ScalarFunction inner = parse_scalar_function(params.at("inner"));
    if (name == "shifted") {
      allow_keys(params, {"name", "inner", "offset"}, where);
      return ScalarFunction::shifted(inner, number(params, "offset", 0.0, where));
    }
    allow_keys(params, {"name", "inner", "lambda"}, where);
    try {
      return ScalarFunction::yosida_of(inner, number(params, "lambda", 0.1, where));
    } catch (const ContractViolation& e) {
      throw ConfigurationError(e.what());
    }
  }
  throw ConfigurationError("unknown scalar function '" + name + "' (valid: " + join(valid) + ")");
}

LevyMeasure parse_measure(const json& spec) {
  if (spec.is_string() && spec.get<std::string>() == "none") return LevyMeasure();
  if (!spec.is_object()) throw ConfigurationError("measure: expected \"none\", {\"atoms\": ...} or {\"uniform\": ...}");
  allow_keys(spec, {"atoms", "uniform"}, "measure");
  if (spec.contains("atoms") == spec.contains("uniform")) {
    throw ConfigurationError("measure: give exactly one of \"atoms\" and \"uniform\"");
  }
  if (spec.contains("atoms")) {
    std::vector<LevyMeasure::Atom> atoms;
    for (const auto& a : spec.at("atoms")) {
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        throw ConfigurationError("measure.atoms: each atom is [mark, rate]");
      }
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    return LevyMeasure::atoms(std::move(atoms));
  }
  const auto& u = spec.at("uniform");
  allow_keys(u, {"a", "b", "rate"}, "measure.uniform");
  return LevyMeasure::uniform(number(u, "a", -1.0, "measure.uniform"), number(u, "b", 1.0, "measure.uniform"),
                              number(u, "rate", 1.0, "measure.uniform"));
}

ModelDescriptor build_model(const json& model, const json& disc) {
  if (!model.is_object() || !model.contains("name") || !model.at("name").is_string()) {
    throw ConfigurationError("model: expected an object with \"name\" (valid: " + join(model_catalog()) + ")");
  }
  const std::string name = model.at("name").get<std::string>();
  const std::string where = "model '" + name + "'";
  const std::size_t modes = count(disc, "modes", 64, "discretization");
  const std::size_t grid = count(disc, "grid_points", 0, "discretization");
  const std::size_t K = count(disc, "wiener_modes", 0, "discretization");

  if (name == "reaction_diffusion") {
    allow_keys(model, {"name", "kappa", "eta", "f", "jump", "diffusion", "measure", "x0", "declared"}, where);
    ReactionDiffusionParams p;
    p.modes = modes;
    p.grid_points = grid;
    p.kappa = number(model, "kappa", p.kappa, where);
    p.eta = number(model, "eta", p.eta, where);
    p.f = scalar_or(model, "f", p.f);
    if (model.contains("jump")) p.jump = parse_jump(model.at("jump"), where + ".jump");
    if (model.contains("diffusion")) p.diffusion = parse_diffusion(model.at("diffusion"), where + ".diffusion");
    if (K > 0 && p.diffusion.modes == 0) p.diffusion.modes = K;
    if (model.contains("measure")) p.measure = parse_measure(model.at("measure"));
    p.x0 = vector_of(model, "x0", where);
    p.declared = declared_of(model, where);
    return build_reaction_diffusion(p);
  }
  if (name == "wave_cbrt") {
    allow_keys(model, {"name", "kappa", "f", "jump_scale", "sigma", "measure", "u0", "v0", "declared"}, where);
    WaveParams p;
    p.modes = modes;
    p.grid_points = grid;
    p.kappa = number(model, "kappa", p.kappa, where);
    p.f = scalar_or(model, "f", p.f);
    p.jump_scale = number(model, "jump_scale", p.jump_scale, where);
    p.sigma = number(model, "sigma", p.sigma, where);
    p.wiener_modes = K;
    if (model.contains("measure")) p.measure = parse_measure(model.at("measure"));
    p.u0 = vector_of(model, "u0", where);
    p.v0 = vector_of(model, "v0", where);
    p.declared = declared_of(model, where);
    return build_wave_cbrt(p);
  }
  if (name == "delay") {
    allow_keys(model, {"name", "h", "point_masses", "density", "f", "g", "k", "measure", "history", "declared"}, where);
    DelayParams p;
    p.h = number(model, "h", p.h, where);
    if (model.contains("point_masses")) {
      for (const auto& pm : model.at("point_masses")) {
        if (!pm.is_array() || pm.size() != 2 || !pm[0].is_number() || !pm[1].is_number()) {
          throw ConfigurationError(where + ".point_masses: each entry is [theta, weight]");
        }
        p.point_masses.emplace_back(pm[0].get<double>(), pm[1].get<double>());
      }
    }
    p.density = number(model, "density", p.density, where);
    p.f = scalar_or(model, "f", p.f);
    p.g = scalar_or(model, "g", p.g);
    p.k = scalar_or(model, "k", p.k);
    if (model.contains("measure")) p.measure = parse_measure(model.at("measure"));
    if (model.contains("history")) {
      const auto& h = model.at("history");
      if (h.is_string() && h.get<std::string>() == "sine") {
        p.history = DelayParams::History::sine;
      } else if (h.is_object() && h.contains("constant") && h.at("constant").is_number() && h.size() == 1) {
        p.history = DelayParams::History::constant;
        p.history_value = h.at("constant").get<double>();
      } else {
        throw ConfigurationError(where + ".history: expected \"sine\" or {\"constant\": value}");
      }
    }
    p.declared = declared_of(model, where);
    return build_delay(p);
  }
  if (name == "scalar_toy") {
    allow_keys(model, {"name", "a", "sigma", "measure", "x0", "f", "declared"}, where);
    ScalarToyParams p;
    p.a = number(model, "a", p.a, where);
    p.sigma = number(model, "sigma", p.sigma, where);
    if (model.contains("measure")) p.measure = parse_measure(model.at("measure"));
    p.x0 = number(model, "x0", p.x0, where);
    p.f = scalar_or(model, "f", p.f);
    p.declared = declared_of(model, where);
    return build_scalar_toy(p);
  }
  throw ConfigurationError("unknown model '" + name + "' (valid: " + join(model_catalog()) + ")");
}

std::string config_hash(const json& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : canonical.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(json config, const ConfigOverrides& overrides) {
  allow_keys(config, {"model", "discretization", "ensemble", "seed", "checks", "bdg_constant", "output_dir"}, "config");
  if (overrides.seed) config["seed"] = *overrides.seed;
  if (overrides.paths) config["ensemble"]["paths"] = *overrides.paths;

  ExperimentConfig out;
  out.output_dir = config.value("output_dir", std::string("out"));
  if (overrides.output_dir) out.output_dir = *overrides.output_dir;
  config.erase("output_dir");

  if (!config.contains("model")) throw ConfigurationError("config: missing \"model\" (valid: " + join(model_catalog()) + ")");
  const json disc = config.value("discretization", json::object());
  allow_keys(disc, {"modes", "grid_points", "wiener_modes", "dt", "T"}, "discretization");
  const json ens = config.value("ensemble", json::object());
  allow_keys(ens, {"paths"}, "ensemble");
  if (config.contains("checks")) allow_keys(config.at("checks"), subcommand_catalog(), "checks");

  out.model = build_model(config.at("model"), disc);
  out.ensemble.T = number(disc, "T", 1.0, "discretization");
  out.ensemble.dt = number(disc, "dt", 1e-3, "discretization");
  if (!(out.ensemble.dt > 0.0) || !(out.ensemble.T > 0.0)) throw ConfigurationError("discretization: dt and T must be positive");
  out.ensemble.paths = count(ens, "paths", 1000, "ensemble");
  if (config.contains("seed")) {
    if (!config.at("seed").is_number_integer()) throw ConfigurationError("seed: expected an unsigned 64-bit integer");
    out.ensemble.seed = config.at("seed").get<std::uint64_t>();
  }
  out.bdg = number(config, "bdg_constant", 3.0, "config");
  if (!(out.bdg > 0.0)) throw ConfigurationError("bdg_constant must be positive");
  out.canonical = std::move(config);
  out.hash = config_hash(out.canonical);
  return out;
}

ExperimentConfig load_config(const std::string& file, const ConfigOverrides& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigurationError("cannot open config file '" + file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError("config file '" + file + "': " + e.what());
  }
  return parse_config(std::move(j), overrides);
}

const std::vector<std::string>& subcommand_catalog() {
  static const std::vector<std::string> names = {"simulate",        "check-ito",      "check-continuity",
                                                 "check-convergence", "check-stability", "check-yosida",
                                                 "check-markov",    "audit",          "constants"};
  return names;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

json check_params(const ExperimentConfig& cfg, const std::string& sub, const std::vector<std::string>& allowed) {
  json p = json::object();
  if (cfg.canonical.contains("checks") && cfg.canonical.at("checks").contains(sub)) p = cfg.canonical.at("checks").at(sub);
  allow_keys(p, allowed, "checks." + sub);
  return p;
}

bool user_declared(const ExperimentConfig& cfg) { return cfg.canonical.at("model").contains("declared"); }

Perturbation parse_perturbation(const json& j, const std::string& where) {
  allow_keys(j, {"name", "drift_shift", "diffusion_scale", "jump_scale", "x0_shift"}, where);
  Perturbation p;
  p.drift_shift = number(j, "drift_shift", 0.0, where);
  p.diffusion_scale = number(j, "diffusion_scale", 1.0, where);
  p.jump_scale = number(j, "jump_scale", 1.0, where);
  p.x0_shift = number(j, "x0_shift", 0.0, where);
  return p;
}

json default_scenarios() {
  return json::array({
      {{"name", "drift_shift"}, {"drift_shift", 0.1}},
      {{"name", "diffusion_scale"}, {"diffusion_scale", 1.1}},
      {{"name", "jump_scale"}, {"jump_scale", 1.1}},
      {{"name", "initial_shift"}, {"x0_shift", 0.1}},
      {{"name", "combined"}, {"drift_shift", 0.05}, {"diffusion_scale", 1.05}, {"jump_scale", 1.05}, {"x0_shift", 0.05}},
  });
}

void stamp(TheoremReport& r, const ExperimentConfig& cfg) {
  r.config_hash = cfg.hash;
  r.seed = cfg.ensemble.seed;
}

std::string report_document(const std::string& sub, const ExperimentConfig& cfg, const std::vector<TheoremReport>& reports) {
  json doc;
  doc["subcommand"] = sub;
  doc["config"] = cfg.canonical;
  doc["config_hash"] = cfg.hash;
  doc["seed"] = cfg.ensemble.seed;
  doc["reports"] = json::array();
  for (const auto& r : reports) doc["reports"].push_back(to_json(r));
  return doc.dump(2) + "\n";
}

void emit(RunResult& out, const ArtifactSink& sink, std::string name, std::string contents) {
  if (sink) {
    sink(name, contents);
  } else {
    out.artifacts.push_back({std::move(name), std::move(contents)});
  }
}

void finish(RunResult& out, const std::string& sub, const ExperimentConfig& cfg, const ArtifactSink& sink) {
  for (auto& r : out.reports) stamp(r, cfg);
  out.exit_code = 0;
  for (const auto& r : out.reports) {
    if (r.status == CheckStatus::fail) out.exit_code = 2;
  }
  std::string name = sub;
  if (name.rfind("check-", 0) == 0) name = name.substr(6);
  emit(out, sink, "report_" + name + ".json", report_document(sub, cfg, out.reports));
  out.message += format_table(out.reports);
}

RunResult run_simulate(const ExperimentConfig& cfg, const ArtifactSink& sink) {
  const auto& m = cfg.model;
  const auto& e = cfg.ensemble;
  SimulationOptions opts;
  opts.record = RecordLevel::full;
  std::vector<double> final_sq(e.paths), sup_sq(e.paths), first(e.paths), jumps(e.paths);
  RunResult out;
  std::mutex emit_mutex;
  parallel_for(
      e.paths,
      [&](std::size_t i) {
        PathRecord rec = simulate_model(m, e.T, noise_for(m, e.seed, i, e.dt), opts);
        rec.seed = e.seed;
        rec.path = i;
        final_sq[i] = rec.squared_norms.back();
        sup_sq[i] = rec.sup_squared_norm();
        first[i] = rec.final_state[0];
        jumps[i] = static_cast<double>(rec.jump_count());
        char name[64];
        std::snprintf(name, sizeof name, "path_%05zu.csv", i);
        std::string csv = path_csv(rec);
        std::lock_guard<std::mutex> lock(emit_mutex);
        emit(out, sink, name, std::move(csv));
      },
      e.threads);
  if (!sink) {
    std::sort(out.artifacts.begin(), out.artifacts.end(),
              [](const RunArtifact& a, const RunArtifact& b) { return a.name < b.name; });
  }

  const auto moment = [](const std::vector<double>& v) {
    const MeanEstimate s = estimate_mean(v);
    return json{{"mean", s.mean}, {"stderr", s.stderr_}, {"ci_half_width", s.half_width(3.0)}};
  };
  json summary;
  summary["subcommand"] = "simulate";
  summary["model"] = m.name;
  summary["config"] = cfg.canonical;
  summary["config_hash"] = cfg.hash;
  summary["seed"] = e.seed;
  summary["paths"] = e.paths;
  summary["T"] = e.T;
  summary["dt"] = e.dt;
  summary["alpha"] = m.alpha;
  summary["declared"] = {{"M", m.declared.M}, {"C", m.declared.C}, {"D", m.declared.D}};
  summary["final_squared_norm"] = moment(final_sq);
  summary["sup_squared_norm"] = moment(sup_sq);
  summary["final_first_coefficient"] = moment(first);
  summary["jump_count"] = moment(jumps);
  json files = json::array();
  for (std::size_t i = 0; i < e.paths; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "path_%05zu.csv", i);
    files.push_back(name);
  }
  summary["path_files"] = std::move(files);
  emit(out, sink, "summary.json", summary.dump(2) + "\n");
  char line[256];
  std::snprintf(line, sizeof line, "simulated %zu paths of %s (T=%g, dt=%g); E||X_T||^2 = %.6g\n", e.paths,
                m.name.c_str(), e.T, e.dt, estimate_mean(final_sq).mean);
  out.message = line;
  return out;
}

}  // namespace

RunResult run_subcommand(const std::string& sub, const ExperimentConfig& cfg, const ArtifactSink& sink) {
  const auto& valid = subcommand_catalog();
  if (std::find(valid.begin(), valid.end(), sub) == valid.end()) {
    throw ConfigurationError("unknown subcommand '" + sub + "' (valid: " + join(valid) + ")");
  }
  if (sub == "simulate") return run_simulate(cfg, sink);

  RunResult out;
  const BDGConstant bdg(cfg.bdg);
  const auto& model = cfg.model;
  EnsembleSettings ens = cfg.ensemble;

  if (sub == "check-ito") {
    const json p = check_params(cfg, sub, {"relative_tolerance"});
    out.reports.push_back(run_ito_check(model, ens, number(p, "relative_tolerance", 1e-9, "checks.check-ito")));
  } else if (sub == "check-continuity") {
    const json p = check_params(cfg, sub, {"scenarios"});
    const json scenarios = p.value("scenarios", default_scenarios());
    std::size_t index = 0;
    for (const auto& s : scenarios) {
      const std::string where = "checks.check-continuity.scenarios[" + std::to_string(index++) + "]";
      const Perturbation pert = parse_perturbation(s, where);
      std::vector<ModelDescriptor> pair{model, perturb(model, pert, user_declared(cfg))};
      if (!user_declared(cfg)) pair = share_declared_constants(std::move(pair));
      TheoremReport r = check_continuity_bound(pair[0], pair[1], ens, bdg);
      r.details["scenario"] = s.value("name", std::string("scenario_") + std::to_string(index - 1));
      out.reports.push_back(std::move(r));
    }
  } else if (sub == "check-convergence") {
    const json p = check_params(cfg, sub, {"n", "perturbation", "amplitude", "threshold"});
    const std::string where = "checks.check-convergence";
    const auto ns = numbers(p, "n", {1, 2, 4, 8, 16}, where);
    const std::string kind = p.value("perturbation", std::string("drift_shift"));
    const double amp = number(p, "amplitude", 1.0, where);
    std::vector<ModelDescriptor> family{model};
    for (const double n : ns) {
      if (!(n > 0.0)) throw ConfigurationError(where + ".n: entries must be positive");
      Perturbation pert;
      if (kind == "drift_shift") {
        pert.drift_shift = -amp / n;
      } else if (kind == "jump_scale") {
        pert.jump_scale = 1.0 + amp / n;
      } else if (kind == "diffusion_scale") {
        pert.diffusion_scale = 1.0 + amp / n;
      } else {
        throw ConfigurationError(where + ".perturbation: unknown '" + kind +
                                 "' (valid: drift_shift, jump_scale, diffusion_scale)");
      }
      family.push_back(perturb(model, pert, user_declared(cfg)));
    }
    if (!user_declared(cfg)) family = share_declared_constants(std::move(family));
    std::vector<std::pair<double, ModelDescriptor>> members;
    for (std::size_t i = 0; i < ns.size(); ++i) members.emplace_back(ns[i], family[i + 1]);
    TheoremReport r = check_coefficient_convergence(family[0], members, ens, number(p, "threshold", 1e-2, where));
    r.details["perturbation"] = kind;
    out.reports.push_back(std::move(r));
  } else if (sub == "check-stability") {
    const json p = check_params(cfg, sub, {"checkpoints", "y0", "y0_scale"});
    const std::string where = "checks.check-stability";
    StateVector y0 = number(p, "y0_scale", 0.0, where) * model.x0;
    if (p.contains("y0")) {
      y0 = vector_of(p, "y0", where);
      if (y0.size() != model.x0.size()) throw ConfigurationError(where + ".y0: wrong length");
    }
    const auto checkpoints = numbers(p, "checkpoints", {0.25, 0.5, 1.0}, where);
    out.reports.push_back(check_exponential_stability(model, y0, checkpoints, ens, bdg));
  } else if (sub == "check-yosida") {
    const json p = check_params(cfg, sub, {"lambdas", "relative_threshold"});
    const std::string where = "checks.check-yosida";
    out.reports.push_back(check_yosida_convergence(model, numbers(p, "lambdas", {0.5, 0.1, 0.02, 0.004}, where), ens,
                                                   number(p, "relative_threshold", 1e-2, where)));
  } else if (sub == "check-markov") {
    const std::string where = "checks.check-markov";
    const json p = check_params(cfg, sub, {"r", "s", "t", "dt", "direct_paths", "outer_paths", "inner_paths",
                                           "replay_paths", "ks_threshold", "replay_tolerance"});
    MarkovSettings m;
    m.r = number(p, "r", m.r, where);
    m.s = number(p, "s", m.s, where);
    m.t = number(p, "t", m.t, where);
    m.dt = number(p, "dt", ens.dt, where);
    m.direct_paths = count(p, "direct_paths", ens.paths, where);
    m.outer_paths = count(p, "outer_paths", m.outer_paths, where);
    m.inner_paths = count(p, "inner_paths", m.inner_paths, where);
    m.replay_paths = count(p, "replay_paths", m.replay_paths, where);
    m.ks_threshold = number(p, "ks_threshold", m.ks_threshold, where);
    m.replay_tolerance = number(p, "replay_tolerance", m.replay_tolerance, where);
    m.seed = ens.seed;
    m.threads = ens.threads;
    out.reports.push_back(check_markov(model, m));
  } else if (sub == "audit") {
    const json p = check_params(cfg, sub, {"samples", "slack"});
    Xoshiro256 rng(derive_key(ens.seed, {static_cast<std::uint64_t>(StreamTag::audit)}));
    out.reports.push_back(audit_hypothesis(model, count(p, "samples", 10000, "checks.audit"), rng,
                                           number(p, "slack", 1e-6, "checks.audit")));
  } else if (sub == "constants") {
    const json p = check_params(cfg, sub, {"M", "C", "alpha"});
    const double M = number(p, "M", model.declared.M, "checks.constants");
    const double C = number(p, "C", model.declared.C, "checks.constants");
    const double alpha = number(p, "alpha", model.alpha, "checks.constants");
    const TheoremConstants k = compute_constants(M, C, alpha, bdg);
    TheoremReport r;
    r.check = "constants";
    r.status = CheckStatus::pass;
    r.bdg = bdg.value();
    r.details = {{"M", M}, {"C", C}, {"alpha", alpha}, {"C1", k.C1}, {"C2", k.C2}, {"gamma", k.gamma},
                 {"stability_regime", k.gamma < 0.0}};
    out.reports.push_back(std::move(r));
    char line[256];
    std::snprintf(line, sizeof line, "C1=%.12g C2=%.12g gamma=%.12g (M=%.12g, C=%.12g, alpha=%.12g, bdg=%.12g)\n", k.C1,
                  k.C2, k.gamma, M, C, alpha, bdg.value());
    out.message = line;
  }
  finish(out, sub, cfg, sink);
  return out;
}

}  // namespace mildlevy
