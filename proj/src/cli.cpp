#include "circphase/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <fstream>
#include <ostream>
#include <sstream>

#include "circphase/config.hpp"
#include "circphase/error.hpp"
#include "circphase/eval.hpp"
#include "circphase/parallel.hpp"
#include "circphase/reports.hpp"
#include "circphase/rng.hpp"
#include "circphase/synth.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> window;
  std::optional<std::string> modality;
  std::optional<std::string> model;
  std::optional<std::size_t> jobs;
  std::optional<std::string> participant;
};

/// Collects written files and their content hashes for the run manifest.
class OutputSet {
 public:
  OutputSet(fs::path root, std::ostream& log) : root_(std::move(root)), log_(log) {}

  void write(const fs::path& relative, const std::string& text) {
    hashes_[relative.generic_string()] = write_text_file(root_ / relative, text);
    log_ << "wrote " << (root_ / relative).string() << '\n';
  }

  const fs::path& root() const { return root_; }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  fs::path root_;
  std::ostream& log_;
  std::map<std::string, std::string> hashes_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.synth.seed = *o.seed;
  }
  if (o.window) {
    cfg.eval_window = *o.window;
    cfg.windows = {*o.window};
  }
  if (o.modality) {
    const auto m = parse_modality(*o.modality);
    if (!m) throw Error(ErrorCode::ConfigParse, "unknown modality '" + *o.modality + "'");
    cfg.eval_modality = *m;
    cfg.modalities = {*m};
  }
  if (o.model) {
    const auto f = parse_model_family(*o.model);
    if (!f) throw Error(ErrorCode::ConfigParse, "unknown model '" + *o.model + "'");
    cfg.eval_model = *f;
    cfg.models = {*f};
  }
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.participant) cfg.case_participant = *o.participant;
  cfg.validate();
  return cfg;
}

std::vector<ParticipantRecording> load_recordings(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<ParticipantRecording> out;
  if (cfg.data_dir) {
    if (!fs::is_directory(*cfg.data_dir)) {
      throw Error(ErrorCode::ConfigParse, "data_dir " + cfg.data_dir->string() + " is not a directory");
    }
    for (const auto& id : list_participants(*cfg.data_dir)) {
      out.push_back(load_participant(*cfg.data_dir / id, id, cfg.max_gap_minutes));
    }
    if (out.empty()) throw Error(ErrorCode::Io, "no participant directories under " + cfg.data_dir->string());
    log << "loaded " << out.size() << " participants from " << cfg.data_dir->string() << '\n';
  } else {
    for (auto& p : generate_cohort(cfg.synth)) out.push_back(std::move(p.recording));
    log << "generated synthetic cohort of " << out.size() << " participants (seed " << cfg.synth.seed << ")\n";
  }
  return out;
}

Cohort load_cohort(const ExperimentConfig& cfg, std::ostream& log) {
  Cohort cohort = prepare_cohort(load_recordings(cfg, log), cfg.preprocess, cfg.cosinor);
  for (const auto& p : cohort.participants) {
    for (const auto& w : p.reference.warnings) log << "warning: " << p.id << ": " << w << '\n';
  }
  return cohort;
}

SearchOptions search_options(const ExperimentConfig& cfg) {
  SearchOptions o;
  o.inner_k = cfg.cv.inner_k;
  o.jobs = cfg.jobs == 0 ? default_jobs() : cfg.jobs;
  return o;
}

std::string csv_of(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

std::string dataset_csv(const FeatureDataset& ds) {
  std::ostringstream os;
  for (const auto& name : ds.feature_names) os << name << ',';
  os << "target_sin,target_cos,ref_theta,end_time_utc\n";
  for (const auto& row : ds.rows) {
    for (double v : row.features) os << num(v) << ',';
    os << num(row.target.y_sin) << ',' << num(row.target.y_cos) << ',' << num(row.ref_theta) << ','
       << format_utc_minute(row.end_minute) << '\n';
  }
  return os.str();
}

std::string config_label(Modality m, std::int64_t window) {
  return std::string(to_string(m)) + "_W" + std::to_string(window);
}

// ---------------------------------------------------------------------------------------------------------------
// Subcommands

void cmd_simulate(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  if (cfg.data_dir) throw Error(ErrorCode::ConfigParse, "simulate needs 'synth' parameters, not 'data_dir'");
  const auto cohort = generate_cohort(cfg.synth);
  std::ostringstream acro;
  acro << "participant_id,acrophase_radians\n";
  for (const auto& p : cohort) {
    const fs::path dir = out.root() / "data" / p.truth.participant_id;
    save_participant(dir, p.recording);
    log << "wrote " << dir.string() << '\n';
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream text;
      text << in.rdbuf();
      out.write(fs::relative(entry.path(), out.root()), text.str());
    }
    std::ostringstream truth;
    truth << "timestamp_utc,phase_radians\n";
    const SampleSeries& grid = p.recording.cbt;
    for (std::int64_t m = grid.start_minute; m < grid.end_minute(); m += 10) {
      truth << format_utc_minute(m) << ',' << num(p.truth.phase_at(m)) << '\n';
    }
    out.write(fs::path("truth") / (p.truth.participant_id + ".csv"), truth.str());
    acro << p.truth.participant_id << ',' << num(p.truth.acrophase) << '\n';
  }
  out.write("truth/acrophases.csv", acro.str());
}

void cmd_preprocess(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  std::ostringstream stats;
  stats << "participant_id,channel,mean,sd,n,degenerate\n";
  for (const auto& p : cohort.participants) {
    const fs::path dir = fs::path("preprocessed") / p.id;
    for (const auto& [id, series] : p.clean.recording.channels) {
      out.write(dir / (std::string(to_string(id)) + ".csv"), csv_of([&](std::ostream& os) { write_channel_csv(os, series); }));
    }
    out.write(dir / "cbt.csv", csv_of([&](std::ostream& os) { write_channel_csv(os, p.clean.recording.cbt); }));
    for (const auto& [id, s] : p.clean.stats) {
      stats << p.id << ',' << to_string(id) << ',' << num(s.mean) << ',' << num(s.sd) << ',' << s.n << ','
            << (s.degenerate ? 1 : 0) << '\n';
    }
  }
  out.write("preprocessed/norm_stats.csv", stats.str());
}

void cmd_fit_cosinor(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  std::ostringstream os;
  os << "participant_id,segment_start,M,A,phi,rmse,n\n";
  for (const auto& p : cohort.participants) {
    for (const auto& s : p.reference.segments) {
      os << p.id << ',' << format_utc_minute(s.interval.first) << ',' << num(s.fit.mesor) << ',' << num(s.fit.amplitude) << ',' << num(s.fit.acrophase) << ',' << num(s.fit.rmse)
         << ',' << s.fit.n_samples << '\n';
    }
  }
  out.write("cosinor_fits.csv", os.str());
}

void cmd_features(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  const WindowConfig win = cfg.window_config(cfg.eval_window);
  const auto data = build_cohort_datasets(cohort, cfg.eval_modality, win);
  const fs::path dir = fs::path("features") / config_label(cfg.eval_modality, cfg.eval_window);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const auto& w : data[i].warnings) log << "warning: " << cohort.participants[i].id << ": " << w << '\n';
    out.write(dir / (cohort.participants[i].id + ".csv"), dataset_csv(data[i]));
  }
}

void cmd_train(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  const auto data = build_cohort_datasets(cohort, cfg.eval_modality, cfg.window_config(cfg.eval_window));
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  const StackedRows rows = stack_rows(data, all);
  if (rows.x.rows() == 0) throw Error(ErrorCode::NoCoverage, "no training rows");
  const std::uint64_t seed = derive_seed(cfg.run_seed(), "train");
  const SearchOptions opts = search_options(cfg);
  const GridSearchResult gs =
      grid_search(data, cohort.ids(), all, cfg.grid_for(cfg.eval_model), derive_seed(seed, "grid"), opts);
  log << "selected " << gs.best.describe() << '\n';
  const auto model = fit_model(rows.x, rows.y, gs.best, derive_seed(seed, "model"), opts.jobs);
  std::ostringstream os;
  save_model(os, *model);
  out.write(fs::path("models") / (std::string(short_name(cfg.eval_model)) + "_" +
                                  config_label(cfg.eval_modality, cfg.eval_window) + ".model"),
            os.str());
}

void cmd_evaluate(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  const FoldPlan plan = participant_kfold(cohort.ids(), cfg.cv.k, cfg.plan_seed());
  const ExperimentKey key{cfg.eval_model, cfg.eval_modality, cfg.eval_window};
  const SearchOptions opts = search_options(cfg);
  const auto data = build_cohort_datasets(cohort, key.modality, cfg.window_config(key.window_minutes));
  const EvalReport report = run_cv(data, cohort.ids(), plan, key, cfg.grid_for(key.family), cfg.run_seed(), opts);
  log << "CMAE " << report.mean_cmae_hours << " +/- " << report.sd_cmae_hours << " h over " << plan.k << " folds\n";
  out.write("reports/evaluate.csv", csv_of([&](std::ostream& os) { write_predictions(os, report); }));
  out.write("reports/evaluate_folds.csv", csv_of([&](std::ostream& os) { write_fold_summary(os, report); }));

  // Day/night strata use leave-one-participant-out predictions across the whole cohort.
  const FoldPlan loo = participant_kfold(cohort.ids(), cohort.participants.size(), cfg.plan_seed());
  const EvalReport loo_report = run_cv(data, cohort.ids(), loo, key, cfg.grid_for(key.family),
                                       derive_seed(cfg.run_seed(), "loo"), opts);
  const DayNightResult dn = day_night_eval(loo_report.predictions);
  log << "day CMAE " << dn.day.cmae_hours << " h, night CMAE " << dn.night.cmae_hours << " h, U p = "
      << dn.test.p_value_two_sided << '\n';
  out.write("reports/day_night.csv", csv_of([&](std::ostream& os) { write_day_night(os, dn); }));
}

void cmd_sweep(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  const FoldPlan plan = participant_kfold(cohort.ids(), cfg.cv.k, cfg.plan_seed());
  std::vector<EvalReport> reports;
  for (std::int64_t w : cfg.windows) {
    reports.push_back(evaluate_config(cohort, plan, {cfg.eval_model, cfg.eval_modality, w}, cfg.grid_for(cfg.eval_model),
                                      cfg.window_config(w), cfg.run_seed(), search_options(cfg)));
    log << "W=" << w << " CMAE " << reports.back().mean_cmae_hours << " h\n";
  }
  out.write("reports/table4.csv", csv_of([&](std::ostream& os) { write_table4(os, reports); }));
  out.write("reports/fig3.csv", csv_of([&](std::ostream& os) { write_fig3(os, reports); }));
}

void cmd_ablate(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  const FoldPlan plan = participant_kfold(cohort.ids(), cfg.cv.k, cfg.plan_seed());
  std::map<ModelFamily, HyperGrid> grids;
  for (ModelFamily f : cfg.models) grids[f] = cfg.grid_for(f);
  const auto reports = modality_ablation(cohort, plan, cfg.modalities, cfg.models, grids,
                                         cfg.window_config(cfg.eval_window), cfg.run_seed(), search_options(cfg));
  for (const auto& r : reports) {
    log << to_string(r.key.modality) << ' ' << short_name(r.key.family) << " CMAE " << r.mean_cmae_hours << " h\n";
  }
  out.write("reports/table3.csv", csv_of([&](std::ostream& os) { write_table3(os, reports); }));
}

void cmd_case_study(const ExperimentConfig& cfg, OutputSet& out, std::ostream& log) {
  const Cohort cohort = load_cohort(cfg, log);
  if (cohort.participants.empty()) throw Error(ErrorCode::TooFewParticipants, "empty cohort");
  const std::string target = cfg.case_participant.value_or(cohort.participants.front().id);
  const CaseStudyTrace trace =
      loo_case_study(cohort, target, {cfg.eval_model, cfg.eval_modality, cfg.eval_window},
                     cfg.grid_for(cfg.eval_model), cfg.window_config(cfg.eval_window), cfg.run_seed(),
                     search_options(cfg));
  out.write("reports/case_" + target + ".csv", csv_of([&](std::ostream& os) { write_case_study(os, trace); }));
}

void write_manifest(const ExperimentConfig& cfg, const std::string& subcommand, const OutputSet& out) {
  nlohmann::json m;
  m["tool"] = "circphase";
  m["version"] = CIRCPHASE_VERSION;
  m["subcommand"] = subcommand;
  m["config"] = cfg.to_json();
  m["seeds"] = {{"master", cfg.seed}, {"fold_plan", cfg.plan_seed()}, {"models", cfg.run_seed()}};
  m["outputs"] = out.hashes();
  write_text_file(out.root() / "run_manifest.json", m.dump(2) + "\n");
}

using Handler = void (*)(const ExperimentConfig&, OutputSet&, std::ostream&);

const std::vector<std::pair<std::string, std::pair<std::string, Handler>>>& subcommands() {
  static const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> table = {
      {"simulate", {"Generate the synthetic cohort and its ground-truth phases", cmd_simulate}},
      {"preprocess", {"Clean and normalize every participant's channels", cmd_preprocess}},
      {"fit-cosinor", {"Fit the CBT cosinor reference per coverage segment", cmd_fit_cosinor}},
      {"features", {"Export causal window features for one modality and window", cmd_features}},
      {"train", {"Grid-search and train one model on all participants", cmd_train}},
      {"evaluate", {"Participant cross-validation plus day/night analysis", cmd_evaluate}},
      {"sweep", {"Window-length sweep (table4.csv, fig3.csv)", cmd_sweep}},
      {"ablate", {"Modality x model ablation (table3.csv)", cmd_ablate}},
      {"case-study", {"Leave-one-out trace for one participant", cmd_case_study}},
  };
  return table;
}

}  // namespace

int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circadian phase estimation from causal windows of wearable data", "circphase"};
  app.set_version_flag("--version", std::string(CIRCPHASE_VERSION));
  app.require_subcommand(1);

  Overrides o;
  std::string chosen;
  for (const auto& [name, entry] : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--window", o.window, "Window length in minutes");
    sub->add_option("--modality", o.modality, "Modality M1..M7");
    sub->add_option("--model", o.model, "Model family: rf or gbr");
    sub->add_option("--jobs", o.jobs, "Worker threads (default: all cores)");
    sub->add_option("--participant", o.participant, "Case-study participant id");
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitConfigError;
  }

  try {
    const ExperimentConfig cfg = resolve_config(o);
    const auto it = std::find_if(subcommands().begin(), subcommands().end(),
                                 [&](const auto& entry) { return entry.first == chosen; });
    if (it == subcommands().end()) throw Error(ErrorCode::UnknownSubcommand, "unknown subcommand '" + chosen + "'");
    OutputSet outputs(cfg.output_dir, err);
    it->second.second(cfg, outputs, err);
    write_manifest(cfg, chosen, outputs);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitConfigError : kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
}

}  // namespace circphase
