#include "circphase/config.hpp"

#include <fstream>
#include <set>

#include "circphase/error.hpp"
#include "circphase/rng.hpp"

namespace circphase {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigParse, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail("unknown key '" + where + key + "'");
  }
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for '" + where + key + "'");
  }
}

template <class T>
void read(const json& obj, const std::string& key, const std::string& where, T& dst) {
  if (obj.contains(key)) dst = get<T>(obj, key, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

int parse_depth(const json& v, const std::string& where) {
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "none")) return kUnlimitedDepth;
  if (v.is_number_integer() && v.get<long long>() >= 1 && v.get<long long>() < kUnlimitedDepth) {
    return static_cast<int>(v.get<long long>());
  }
  fail("bad value for '" + where + "max_depth' (positive integer or \"none\")");
}

ModelFamily parse_family(const std::string& name, const std::string& where) {
  const auto f = parse_model_family(name);
  if (!f) fail("unknown model '" + name + "' in '" + where + "'");
  return *f;
}

Modality parse_modality_or_fail(const std::string& name, const std::string& where) {
  const auto m = parse_modality(name);
  if (!m) fail("unknown modality '" + name + "' in '" + where + "'");
  return *m;
}

HyperParams parse_hyper(const json& obj, ModelFamily family, const std::string& where) {
  check_keys(obj, where,
             {"n_estimators", "max_depth", "max_features_fraction", "min_samples_leaf", "learning_rate", "bootstrap"});
  HyperParams hp = family == ModelFamily::RandomForest ? HyperParams::random_forest(200, kUnlimitedDepth)
                                                       : HyperParams::gradient_boosting(200, 3);
  read(obj, "n_estimators", where, hp.n_estimators);
  if (obj.contains("max_depth")) hp.max_depth = parse_depth(obj.at("max_depth"), where);
  read(obj, "max_features_fraction", where, hp.max_features_fraction);
  read(obj, "min_samples_leaf", where, hp.min_samples_leaf);
  read(obj, "learning_rate", where, hp.learning_rate);
  read(obj, "bootstrap", where, hp.bootstrap);
  try {
    hp.validate();
  } catch (const Error& e) {
    fail(where + ": " + e.what());
  }
  return hp;
}

void parse_synth(const json& obj, SynthParams& sp) {
  const std::string where = "synth.";
  check_keys(obj, where,
             {"n_participants", "days", "acrophase_lo", "acrophase_hi", "cbt_mesor", "cbt_amplitude", "noise",
              "masking_strength", "sleep_onset_hour", "wake_hour", "schedule_jitter_minutes", "start_minute"});
  read(obj, "n_participants", where, sp.n_participants);
  read(obj, "days", where, sp.days);
  read(obj, "acrophase_lo", where, sp.acrophase_lo);
  read(obj, "acrophase_hi", where, sp.acrophase_hi);
  read(obj, "cbt_mesor", where, sp.cbt_mesor);
  read(obj, "cbt_amplitude", where, sp.cbt_amplitude);
  read(obj, "masking_strength", where, sp.masking_strength);
  read(obj, "sleep_onset_hour", where, sp.sleep_onset_hour);
  read(obj, "wake_hour", where, sp.wake_hour);
  read(obj, "schedule_jitter_minutes", where, sp.schedule_jitter_minutes);
  read(obj, "start_minute", where, sp.start_minute);
  if (obj.contains("noise")) {
    const json& noise = obj.at("noise");
    if (noise.is_string() && noise.get<std::string>() == "none") {
      for (auto& [id, sd] : sp.noise_sd) sd = 0.0;
    } else if (noise.is_object()) {
      for (const auto& [name, value] : noise.items()) {
        const auto id = parse_channel_id(name);
        if (!id || !sp.noise_sd.count(*id)) fail("unknown key 'synth.noise." + name + "'");
        if (!value.is_number()) fail("bad value for 'synth.noise." + name + "'");
        sp.noise_sd[*id] = value.get<double>();
      }
    } else {
      fail("'synth.noise' must be an object or \"none\"");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    synth.validate();
    preprocess.validate();
    for (std::int64_t w : windows) window_config(w).validate();
    window_config(eval_window).validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (windows.empty()) fail("'windows' must not be empty");
  if (modalities.empty()) fail("'modalities' must not be empty");
  if (models.empty()) fail("'models' must not be empty");
  if (cv.k < 2) fail("'cv.k' must be at least 2");
  if (cv.inner_k < 2) fail("'cv.inner_k' must be at least 2");
  if (max_gap_minutes < 0) fail("'max_gap_minutes' must be non-negative");
  for (const auto& [family, g] : grid) {
    if (g.empty()) fail("grid for " + std::string(to_string(family)) + " is empty");
  }
}

const HyperGrid& ExperimentConfig::grid_for(ModelFamily family) const {
  static const HyperGrid rf = default_grid(ModelFamily::RandomForest);
  static const HyperGrid gbr = default_grid(ModelFamily::GradientBoosting);
  const auto it = grid.find(family);
  if (it != grid.end()) return it->second;
  return family == ModelFamily::RandomForest ? rf : gbr;
}

WindowConfig ExperimentConfig::window_config(std::int64_t window_minutes) const {
  WindowConfig w;
  w.window_minutes = window_minutes;
  w.stride_minutes = stride_minutes;
  w.min_coverage = min_coverage;
  return w;
}

std::uint64_t ExperimentConfig::plan_seed() const { return derive_seed(seed, "fold-plan"); }
std::uint64_t ExperimentConfig::run_seed() const { return derive_seed(seed, "models"); }

json ExperimentConfig::to_json() const {
  json j;
  j["version"] = kConfigVersion;
  j["seed"] = seed;
  if (data_dir) {
    j["data_dir"] = data_dir->generic_string();
  } else {
    json s;
    s["n_participants"] = synth.n_participants;
    s["days"] = synth.days;
    s["acrophase_lo"] = synth.acrophase_lo;
    s["acrophase_hi"] = synth.acrophase_hi;
    s["cbt_mesor"] = synth.cbt_mesor;
    s["cbt_amplitude"] = synth.cbt_amplitude;
    json noise = json::object();
    for (const auto& [id, sd] : synth.noise_sd) noise[std::string(to_string(id))] = sd;
    s["noise"] = noise;
    s["masking_strength"] = synth.masking_strength;
    s["sleep_onset_hour"] = synth.sleep_onset_hour;
    s["wake_hour"] = synth.wake_hour;
    s["schedule_jitter_minutes"] = synth.schedule_jitter_minutes;
    s["start_minute"] = synth.start_minute;
    j["synth"] = s;
  }
  j["output_dir"] = output_dir.generic_string();
  j["max_gap_minutes"] = max_gap_minutes;
  j["preprocess"] = {{"iqr_multiplier", preprocess.iqr_multiplier},
                     {"max_interp_gap_minutes", preprocess.max_interp_gap_minutes},
                     {"light_log_offset", preprocess.light_log_offset},
                     {"zscore_epsilon", preprocess.zscore_epsilon}};
  j["cosinor"] = {{"min_span_minutes", cosinor.min_span_minutes},
                  {"min_samples", cosinor.min_samples},
                  {"amplitude_epsilon", cosinor.amplitude_epsilon}};
  j["windows"] = windows;
  j["stride_minutes"] = stride_minutes;
  j["min_coverage"] = min_coverage;
  json mods = json::array();
  for (Modality m : modalities) mods.push_back(std::string(to_string(m)));
  j["modalities"] = mods;
  json fams = json::array();
  for (ModelFamily f : models) fams.push_back(std::string(short_name(f)));
  j["models"] = fams;
  json g = json::object();
  for (ModelFamily f : {ModelFamily::RandomForest, ModelFamily::GradientBoosting}) {
    json entries = json::array();
    for (const HyperParams& hp : grid_for(f)) {
      json e = {{"n_estimators", hp.n_estimators},
                {"max_features_fraction", hp.max_features_fraction},
                {"min_samples_leaf", hp.min_samples_leaf},
                {"learning_rate", hp.learning_rate},
                {"bootstrap", hp.bootstrap}};
      e["max_depth"] = hp.max_depth == kUnlimitedDepth ? json("none") : json(hp.max_depth);
      entries.push_back(e);
    }
    g[std::string(short_name(f))] = entries;
  }
  j["grid"] = g;
  j["cv"] = {{"k", cv.k}, {"inner_k", cv.inner_k}};
  j["eval"] = {{"window", eval_window},
               {"modality", std::string(to_string(eval_modality))},
               {"model", std::string(short_name(eval_model))}};
  if (case_participant) j["case_participant"] = *case_participant;
  return j;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "",
             {"version", "seed", "data_dir", "synth", "output_dir", "max_gap_minutes", "preprocess", "cosinor", "windows",
              "stride_minutes", "min_coverage", "modalities", "models", "grid", "cv", "eval", "case_participant", "jobs"});
  if (!doc.contains("version")) fail("missing 'version'");
  if (get<int>(doc, "version", "") != kConfigVersion) {
    fail("unsupported config version (expected " + std::to_string(kConfigVersion) + ")");
  }
  ExperimentConfig cfg;
  read(doc, "seed", "", cfg.seed);
  if (doc.contains("data_dir") && doc.contains("synth")) fail("'data_dir' and 'synth' are mutually exclusive");
  if (doc.contains("data_dir")) cfg.data_dir = resolve(base_dir, get<std::string>(doc, "data_dir", ""));
  if (doc.contains("synth")) parse_synth(doc.at("synth"), cfg.synth);
  cfg.output_dir = resolve(base_dir, doc.contains("output_dir") ? get<std::string>(doc, "output_dir", "") : "out");
  read(doc, "max_gap_minutes", "", cfg.max_gap_minutes);
  if (doc.contains("preprocess")) {
    const json& p = doc.at("preprocess");
    check_keys(p, "preprocess.", {"iqr_multiplier", "max_interp_gap_minutes", "light_log_offset", "zscore_epsilon"});
    read(p, "iqr_multiplier", "preprocess.", cfg.preprocess.iqr_multiplier);
    read(p, "max_interp_gap_minutes", "preprocess.", cfg.preprocess.max_interp_gap_minutes);
    read(p, "light_log_offset", "preprocess.", cfg.preprocess.light_log_offset);
    read(p, "zscore_epsilon", "preprocess.", cfg.preprocess.zscore_epsilon);
  }
  if (doc.contains("cosinor")) {
    const json& c = doc.at("cosinor");
    check_keys(c, "cosinor.", {"min_span_minutes", "min_samples", "amplitude_epsilon"});
    read(c, "min_span_minutes", "cosinor.", cfg.cosinor.min_span_minutes);
    read(c, "min_samples", "cosinor.", cfg.cosinor.min_samples);
    read(c, "amplitude_epsilon", "cosinor.", cfg.cosinor.amplitude_epsilon);
  }
  read(doc, "windows", "", cfg.windows);
  read(doc, "stride_minutes", "", cfg.stride_minutes);
  read(doc, "min_coverage", "", cfg.min_coverage);
  if (doc.contains("modalities")) {
    cfg.modalities.clear();
    for (const auto& name : get<std::vector<std::string>>(doc, "modalities", "")) {
      cfg.modalities.push_back(parse_modality_or_fail(name, "modalities"));
    }
  }
  if (doc.contains("models")) {
    cfg.models.clear();
    for (const auto& name : get<std::vector<std::string>>(doc, "models", "")) {
      cfg.models.push_back(parse_family(name, "models"));
    }
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) fail("'grid' must be an object keyed by model");
    for (const auto& [name, entries] : g.items()) {
      const ModelFamily family = parse_family(name, "grid");
      if (!entries.is_array()) fail("'grid." + name + "' must be an array");
      HyperGrid hg;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        hg.push_back(parse_hyper(entries[i], family, "grid." + name + "[" + std::to_string(i) + "]."));
      }
      cfg.grid[family] = hg;
    }
  }
  if (doc.contains("cv")) {
    const json& c = doc.at("cv");
    check_keys(c, "cv.", {"k", "inner_k"});
    read(c, "k", "cv.", cfg.cv.k);
    read(c, "inner_k", "cv.", cfg.cv.inner_k);
  }
  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, "eval.", {"window", "modality", "model"});
    read(e, "window", "eval.", cfg.eval_window);
    if (e.contains("modality")) cfg.eval_modality = parse_modality_or_fail(get<std::string>(e, "modality", "eval."), "eval");
    if (e.contains("model")) cfg.eval_model = parse_family(get<std::string>(e, "model", "eval."), "eval");
  }
  if (doc.contains("case_participant")) cfg.case_participant = get<std::string>(doc, "case_participant", "");
  read(doc, "jobs", "", cfg.jobs);
  cfg.synth.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace circphase
