#include "circphase/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "circphase/error.hpp"
#include "circphase/rng.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

std::vector<std::string> Cohort::ids() const {
  std::vector<std::string> out;
  out.reserve(participants.size());
  for (const auto& p : participants) out.push_back(p.id);
  return out;
}

std::size_t Cohort::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < participants.size(); ++i) {
    if (participants[i].id == id) return i;
  }
  throw Error(ErrorCode::UnknownParticipant, "no participant '" + id + "' in the cohort");
}

Cohort prepare_cohort(std::vector<ParticipantRecording> recordings, const PreprocessConfig& preprocess,
                      const CosinorOptions& cosinor) {
  std::sort(recordings.begin(), recordings.end(),
            [](const ParticipantRecording& a, const ParticipantRecording& b) { return a.participant_id < b.participant_id; });
  Cohort cohort;
  cohort.participants.reserve(recordings.size());
  for (auto& rec : recordings) {
    PreparedParticipant p;
    p.id = rec.participant_id;
    p.clean = preprocess_recording(rec, preprocess);
    // Fit on the outlier-cleaned native samples; interpolated minutes only define the coverage intervals.
    const SampleSeries native_cbt = remove_outliers_iqr(rec.cbt, preprocess.iqr_multiplier);
    p.reference = fit_per_segment(native_cbt, p.clean.recording.cbt_coverage, cosinor);
    p.raw = std::move(rec);
    cohort.participants.push_back(std::move(p));
  }
  return cohort;
}

std::vector<FeatureDataset> build_cohort_datasets(const Cohort& cohort, Modality modality, const WindowConfig& win) {
  const ModalityConfig mc = modality_config(modality);
  std::vector<FeatureDataset> out;
  out.reserve(cohort.participants.size());
  for (const auto& p : cohort.participants) out.push_back(build_dataset(p.clean.recording, p.reference, mc, win));
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Folds

std::vector<std::string> FoldPlan::test_ids(std::size_t fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::vector<std::string> FoldPlan::train_ids(std::size_t fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments) {
    if (f != fold) out.push_back(id);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [id, f] : assignments) ++sizes[f];
  return sizes;
}

FoldPlan participant_kfold(std::vector<std::string> ids, std::size_t k, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error(ErrorCode::InvalidParams, "duplicate participant id in fold plan");
  }
  if (k < 2) throw Error(ErrorCode::InvalidParams, "cross-validation needs at least 2 folds");
  if (ids.size() < k) {
    throw Error(ErrorCode::TooFewParticipants,
                std::to_string(ids.size()) + " participants cannot fill " + std::to_string(k) + " folds");
  }
  Rng rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(ids[i], ids[j]);
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) plan.assignments[ids[i]] = i % k;
  return plan;
}

StackedRows stack_rows(const std::vector<FeatureDataset>& data, const std::vector<std::size_t>& participants) {
  StackedRows out;
  std::size_t p = 0;
  for (std::size_t i : participants) {
    if (!data[i].rows.empty()) p = data[i].n_features();
  }
  out.x = Matrix(0, p);
  out.y = Matrix(0, 2);
  for (std::size_t i : participants) {
    for (const FeatureRow& row : data[i].rows) {
      if (row.features.size() != p) throw Error(ErrorCode::DimensionMismatch, "feature width differs across datasets");
      out.x.append_row(row.features);
      const double t[2] = {row.target.y_sin, row.target.y_cos};
      out.y.append_row(t);
      out.keys.push_back({row.participant_id, row.end_minute, row.ref_theta});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Grid search

namespace {

std::vector<std::size_t> indices_of(const std::vector<std::string>& ids, const std::vector<std::string>& wanted) {
  std::vector<std::size_t> out;
  for (const auto& w : wanted) {
    const auto it = std::find(ids.begin(), ids.end(), w);
    if (it == ids.end()) throw Error(ErrorCode::UnknownParticipant, "no participant '" + w + "'");
    out.push_back(static_cast<std::size_t>(it - ids.begin()));
  }
  return out;
}

std::vector<double> ref_thetas(const StackedRows& rows) {
  std::vector<double> out;
  out.reserve(rows.keys.size());
  for (const auto& k : rows.keys) out.push_back(k.ref_theta);
  return out;
}

// Entries that differ only in n_estimators share one fit of the largest size: both ensembles are prefix-stable.
HyperParams without_size(HyperParams hp) {
  hp.n_estimators = 0;
  return hp;
}

bool smaller_model(const HyperParams& a, const HyperParams& b) {
  if (a.n_estimators != b.n_estimators) return a.n_estimators < b.n_estimators;
  return a.max_depth < b.max_depth;
}

}  // namespace

GridSearchResult grid_search(const std::vector<FeatureDataset>& data, const std::vector<std::string>& ids,
                             const std::vector<std::size_t>& train, const HyperGrid& grid, std::uint64_t seed,
                             const SearchOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidHyperparams, "hyperparameter grid is empty");
  for (const auto& hp : grid) hp.validate();
  if (grid.size() == 1) return {grid.front(), {}};

  std::vector<std::string> train_ids;
  for (std::size_t i : train) train_ids.push_back(ids.at(i));
  if (train_ids.size() < options.inner_k) {
    throw Error(ErrorCode::TooFewParticipants, "grid search needs at least " + std::to_string(options.inner_k) +
                                                   " training participants, got " + std::to_string(train_ids.size()));
  }
  const FoldPlan inner = participant_kfold(train_ids, options.inner_k, derive_seed(seed, "inner-plan"));

  std::vector<double> sum(grid.size(), 0.0);
  std::size_t used_folds = 0;
  for (std::size_t f = 0; f < inner.k; ++f) {
    const StackedRows tr = stack_rows(data, indices_of(ids, inner.train_ids(f)));
    const StackedRows te = stack_rows(data, indices_of(ids, inner.test_ids(f)));
    if (tr.x.rows() == 0 || te.x.rows() == 0) continue;
    ++used_folds;
    const std::vector<double> ref = ref_thetas(te);
    const std::uint64_t fold_seed = derive_seed(seed, "inner/" + std::to_string(f));

    std::vector<bool> done(grid.size(), false);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (done[g]) continue;
      const HyperParams shape = without_size(grid[g]);
      HyperParams largest = grid[g];
      for (std::size_t h = g; h < grid.size(); ++h) {
        if (without_size(grid[h]) == shape) largest.n_estimators = std::max(largest.n_estimators, grid[h].n_estimators);
      }
      const auto model = fit_model(tr.x, tr.y, largest, fold_seed, options.jobs);
      for (std::size_t h = g; h < grid.size(); ++h) {
        if (done[h] || !(without_size(grid[h]) == shape)) continue;
        const PhasePredictions pred = predict_phase(*model, te.x, static_cast<std::size_t>(grid[h].n_estimators));
        sum[h] += metrics_report(pred.theta, ref).cmae_hours;
        done[h] = true;
      }
    }
  }
  if (used_folds == 0) throw Error(ErrorCode::EmptyFold, "no inner fold has both training and test rows");

  GridSearchResult result;
  result.inner_cmae_hours.resize(grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.inner_cmae_hours[g] = sum[g] / static_cast<double>(used_folds);
    if (g == 0) continue;
    const double a = result.inner_cmae_hours[g];
    const double b = result.inner_cmae_hours[best];
    if (a < b || (a == b && smaller_model(grid[g], grid[best]))) best = g;
  }
  result.best = grid[best];
  return result;
}

// ---------------------------------------------------------------------------------------------------------------
// Cross-validation

EvalReport run_cv(const std::vector<FeatureDataset>& data, const std::vector<std::string>& ids, const FoldPlan& plan,
                  const ExperimentKey& key, const HyperGrid& grid, std::uint64_t seed, const SearchOptions& options) {
  if (data.size() != ids.size()) throw Error(ErrorCode::DimensionMismatch, "one dataset per participant expected");
  for (const auto& hp : grid) {
    if (hp.family != key.family) throw Error(ErrorCode::InvalidHyperparams, "grid entry of another model family");
  }
  for (const auto& id : ids) {
    if (!plan.assignments.count(id)) throw Error(ErrorCode::UnknownParticipant, "participant '" + id + "' not in fold plan");
  }

  EvalReport report;
  report.key = key;
  std::vector<double> all_pred, all_ref;
  for (std::size_t f = 0; f < plan.k; ++f) {
    const std::vector<std::string> test_ids = plan.test_ids(f);
    const std::vector<std::string> train_ids = plan.train_ids(f);
    std::vector<std::string> overlap;
    std::set_intersection(test_ids.begin(), test_ids.end(), train_ids.begin(), train_ids.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) throw Error(ErrorCode::Leakage, "participant '" + overlap.front() + "' on both sides of fold");

    const std::vector<std::size_t> train = indices_of(ids, train_ids);
    const std::vector<std::size_t> test = indices_of(ids, test_ids);
    const StackedRows tr = stack_rows(data, train);
    const StackedRows te = stack_rows(data, test);
    if (te.x.rows() == 0) throw Error(ErrorCode::EmptyFold, "fold " + std::to_string(f) + " has no test rows");
    if (tr.x.rows() == 0) throw Error(ErrorCode::EmptyFold, "fold " + std::to_string(f) + " has no training rows");
    std::set<std::string> train_seen;
    for (const auto& k : tr.keys) train_seen.insert(k.participant_id);
    for (const auto& k : te.keys) {
      if (train_seen.count(k.participant_id)) throw Error(ErrorCode::Leakage, "test row of a training participant");
    }

    const std::uint64_t fold_seed = derive_seed(seed, "fold/" + std::to_string(f));
    const GridSearchResult gs = grid_search(data, ids, train, grid, derive_seed(fold_seed, "grid"), options);
    const auto model = fit_model(tr.x, tr.y, gs.best, derive_seed(fold_seed, "model"), options.jobs);
    const PhasePredictions pred = predict_phase(*model, te.x);
    const std::vector<double> ref = ref_thetas(te);
    report.per_fold.push_back(metrics_report(pred.theta, ref));
    report.chosen.push_back(gs.best);
    report.zero_vectors += pred.zero_vectors;
    for (std::size_t r = 0; r < te.keys.size(); ++r) {
      report.predictions.push_back({te.keys[r].participant_id, te.keys[r].end_minute, ref[r], pred.theta[r], f});
    }
    all_pred.insert(all_pred.end(), pred.theta.begin(), pred.theta.end());
    all_ref.insert(all_ref.end(), ref.begin(), ref.end());
  }

  const auto k = static_cast<double>(report.per_fold.size());
  double mean = 0.0;
  for (const auto& m : report.per_fold) mean += m.cmae_hours;
  mean /= k;
  double ss = 0.0;
  for (const auto& m : report.per_fold) ss += (m.cmae_hours - mean) * (m.cmae_hours - mean);
  report.mean_cmae_hours = mean;
  report.sd_cmae_hours = report.per_fold.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  const MetricsReport pooled = metrics_report(all_pred, all_ref);
  report.pooled_within_1h = pooled.within_1h;
  report.pooled_within_2h = pooled.within_2h;
  return report;
}

EvalReport evaluate_config(const Cohort& cohort, const FoldPlan& plan, const ExperimentKey& key,
                           const HyperGrid& grid, const WindowConfig& win, std::uint64_t seed,
                           const SearchOptions& options) {
  WindowConfig w = win;
  w.window_minutes = key.window_minutes;
  w.validate();
  return run_cv(build_cohort_datasets(cohort, key.modality, w), cohort.ids(), plan, key, grid, seed, options);
}

std::vector<EvalReport> window_sweep(const Cohort& cohort, const FoldPlan& plan, Modality modality,
                                     ModelFamily family, const std::vector<std::int64_t>& windows,
                                     const HyperGrid& grid, const WindowConfig& base, std::uint64_t seed,
                                     const SearchOptions& options) {
  if (windows.empty()) throw Error(ErrorCode::InvalidParams, "window list is empty");
  std::vector<EvalReport> out;
  for (std::int64_t w : windows) {
    out.push_back(evaluate_config(cohort, plan, {family, modality, w}, grid, base, seed, options));
  }
  return out;
}

std::vector<EvalReport> modality_ablation(const Cohort& cohort, const FoldPlan& plan,
                                          const std::vector<Modality>& modalities,
                                          const std::vector<ModelFamily>& families,
                                          const std::map<ModelFamily, HyperGrid>& grids, const WindowConfig& win,
                                          std::uint64_t seed, const SearchOptions& options) {
  win.validate();
  std::vector<EvalReport> out;
  for (Modality m : modalities) {
    const std::vector<FeatureDataset> data = build_cohort_datasets(cohort, m, win);
    for (ModelFamily family : families) {
      const auto it = grids.find(family);
      const HyperGrid& grid = it != grids.end() ? it->second : default_grid(family);
      out.push_back(run_cv(data, cohort.ids(), plan, {family, m, win.window_minutes}, grid, seed, options));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------------------------
// Day / night and case study

bool is_daytime(std::int64_t end_minute) { return minute_of_day(end_minute) >= kDayStartMinuteOfDay; }

DayNightResult day_night_eval(const std::vector<PooledPrediction>& predictions) {
  std::vector<double> day_pred, day_ref, night_pred, night_ref, day_err, night_err;
  for (const auto& p : predictions) {
    const bool day = is_daytime(p.end_minute);
    (day ? day_pred : night_pred).push_back(p.pred_theta);
    (day ? day_ref : night_ref).push_back(p.ref_theta);
    (day ? day_err : night_err).push_back(wrapped_abs_error(p.pred_theta, p.ref_theta));
  }
  if (day_err.empty()) throw Error(ErrorCode::EmptyStratum, "no daytime predictions");
  if (night_err.empty()) throw Error(ErrorCode::EmptyStratum, "no nighttime predictions");
  DayNightResult out;
  out.day = metrics_report(day_pred, day_ref);
  out.night = metrics_report(night_pred, night_ref);
  out.test = mann_whitney_u(day_err, night_err);
  return out;
}

CaseStudyTrace loo_case_study(const Cohort& cohort, const std::string& target, const ExperimentKey& key,
                              const HyperGrid& grid, const WindowConfig& win, std::uint64_t seed,
                              const SearchOptions& options) {
  const std::size_t t = cohort.index_of(target);
  if (cohort.participants.size() < 2) throw Error(ErrorCode::TooFewParticipants, "case study needs 2 participants");
  WindowConfig w = win;
  w.window_minutes = key.window_minutes;
  w.validate();
  const std::vector<FeatureDataset> data = build_cohort_datasets(cohort, key.modality, w);
  const std::vector<std::string> ids = cohort.ids();
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != t) train.push_back(i);
  }
  const StackedRows tr = stack_rows(data, train);
  const StackedRows te = stack_rows(data, {t});
  if (te.x.rows() == 0) throw Error(ErrorCode::EmptyFold, "participant '" + target + "' has no evaluable rows");
  if (tr.x.rows() == 0) throw Error(ErrorCode::EmptyFold, "no training rows outside '" + target + "'");

  const std::uint64_t job_seed = derive_seed(seed, "case/" + target);
  const GridSearchResult gs = grid_search(data, ids, train, grid, derive_seed(job_seed, "grid"), options);
  const auto model = fit_model(tr.x, tr.y, gs.best, derive_seed(job_seed, "model"), options.jobs);
  const PhasePredictions pred = predict_phase(*model, te.x);

  CaseStudyTrace trace;
  trace.participant_id = target;
  trace.params = gs.best;
  const ParticipantRecording& raw = cohort.participants[t].raw;
  for (ChannelId c : kIngestedChannels) {
    if (c == ChannelId::Cbt || raw.has_channel(c)) trace.channels.push_back(c);
  }
  for (std::size_t r = 0; r < te.keys.size(); ++r) {
    CaseStudyRow row;
    row.end_minute = te.keys[r].end_minute;
    row.ref_theta = te.keys[r].ref_theta;
    row.pred_theta = pred.theta[r];
    row.abs_err_hours = wrapped_abs_error_hours(row.pred_theta, row.ref_theta);
    for (ChannelId c : trace.channels) {
      const SampleSeries& s = c == ChannelId::Cbt ? raw.cbt : raw.channel(c);
      double v = std::numeric_limits<double>::quiet_NaN();
      const std::int64_t off = row.end_minute - s.start_minute;
      if (off >= 0 && off % s.step_minutes == 0) {
        const auto i = static_cast<std::size_t>(off / s.step_minutes);
        if (i < s.size() && s.valid[i]) v = s.values[i];
      }
      row.raw_values.push_back(v);
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace circphase
