#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "circphase/circular.hpp"
#include "circphase/cosinor.hpp"
#include "circphase/data_model.hpp"
#include "circphase/features.hpp"
#include "circphase/matrix.hpp"
#include "circphase/preprocess.hpp"
#include "circphase/tree_models.hpp"
#include "circphase/utest.hpp"

namespace circphase {

/// A participant after cleaning, with the per-segment cosinor reference fitted on the outlier-cleaned native CBT
/// samples within each coverage interval.
struct PreparedParticipant {
  std::string id;
  ParticipantRecording raw;
  PreprocessedRecording clean;
  SegmentFits reference;
};

struct Cohort {
  std::vector<PreparedParticipant> participants;  // sorted by id

  std::vector<std::string> ids() const;
  /// Index of a participant; throws UnknownParticipant.
  std::size_t index_of(const std::string& id) const;
};

Cohort prepare_cohort(std::vector<ParticipantRecording> recordings, const PreprocessConfig& preprocess,
                      const CosinorOptions& cosinor = {});

/// Feature rows for every participant of the cohort, in cohort order.
std::vector<FeatureDataset> build_cohort_datasets(const Cohort& cohort, Modality modality, const WindowConfig& win);

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignments;  // participant -> fold

  std::vector<std::string> test_ids(std::size_t fold) const;
  std::vector<std::string> train_ids(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Sorts the ids, shuffles them with a seeded Fisher-Yates pass and assigns folds round-robin, so sizes differ by
/// at most one. Throws TooFewParticipants when there are fewer ids than folds.
FoldPlan participant_kfold(std::vector<std::string> ids, std::size_t k, std::uint64_t seed);

/// Row metadata kept alongside a stacked design matrix.
struct RowKey {
  std::string participant_id;
  std::int64_t end_minute = 0;
  double ref_theta = 0.0;
};

struct StackedRows {
  Matrix x;
  Matrix y;  // columns (sin, cos)
  std::vector<RowKey> keys;
};

/// Rows of the selected participants (by cohort index), concatenated in the given order.
StackedRows stack_rows(const std::vector<FeatureDataset>& data, const std::vector<std::size_t>& participants);

struct SearchOptions {
  std::size_t inner_k = 3;
  std::size_t jobs = 1;
};

struct GridSearchResult {
  HyperParams best;
  std::vector<double> inner_cmae_hours;  // per grid entry; empty when the grid has one entry
};

/// Inner participant k-fold over the training participants only. Picks the entry with the lowest mean inner
/// CMAE; ties go to fewer estimators, then the shallower depth, then the earlier entry.
/// `ids[i]` names the participant of `data[i]`.
GridSearchResult grid_search(const std::vector<FeatureDataset>& data, const std::vector<std::string>& ids,
                             const std::vector<std::size_t>& train, const HyperGrid& grid, std::uint64_t seed, const SearchOptions& options = {});

struct PooledPrediction {
  std::string participant_id;
  std::int64_t end_minute = 0;
  double ref_theta = 0.0;
  double pred_theta = 0.0;
  std::size_t fold = 0;
};

struct ExperimentKey {
  ModelFamily family = ModelFamily::RandomForest;
  Modality modality = Modality::M5;
  std::int64_t window_minutes = 480;
};

struct EvalReport {
  ExperimentKey key;
  std::vector<MetricsReport> per_fold;
  std::vector<HyperParams> chosen;  // per fold
  double mean_cmae_hours = 0.0;
  double sd_cmae_hours = 0.0;  // sample sd across folds (n - 1); 0 for a single fold
  /// Within-1h / 2h fractions over all pooled test predictions.
  double pooled_within_1h = 0.0;
  double pooled_within_2h = 0.0;
  std::size_t zero_vectors = 0;
  std::vector<PooledPrediction> predictions;  // fold order, then participant and time order
};

/// Participant-based cross-validation: per fold, grid search on the training participants, refit on all their
/// rows, predict the held-out participants. Verifies train/test participant sets are disjoint (Leakage) and that
/// each fold has test rows (EmptyFold).
EvalReport run_cv(const std::vector<FeatureDataset>& data, const std::vector<std::string>& ids, const FoldPlan& plan,
                  const ExperimentKey& key, const HyperGrid& grid, std::uint64_t seed,
                  const SearchOptions& options = {});

/// Builds datasets for one configuration and runs run_cv on them.
EvalReport evaluate_config(const Cohort& cohort, const FoldPlan& plan, const ExperimentKey& key,
                           const HyperGrid& grid, const WindowConfig& win, std::uint64_t seed,
                           const SearchOptions& options = {});

/// One run_cv per window length, all with the same fold plan.
std::vector<EvalReport> window_sweep(const Cohort& cohort, const FoldPlan& plan, Modality modality,
                                     ModelFamily family, const std::vector<std::int64_t>& windows,
                                     const HyperGrid& grid, const WindowConfig& base, std::uint64_t seed,
                                     const SearchOptions& options = {});

/// Modality x family at one window length; reports ordered by modality, then family.
std::vector<EvalReport> modality_ablation(const Cohort& cohort, const FoldPlan& plan,
                                          const std::vector<Modality>& modalities,
                                          const std::vector<ModelFamily>& families,
                                          const std::map<ModelFamily, HyperGrid>& grids, const WindowConfig& win,
                                          std::uint64_t seed, const SearchOptions& options = {});

/// Daytime is [08:00, 24:00) of the end time's clock hour, night [00:00, 08:00).
inline constexpr std::int64_t kDayStartMinuteOfDay = 8 * 60;
bool is_daytime(std::int64_t end_minute);

struct DayNightResult {
  MetricsReport day;
  MetricsReport night;
  /// Sample 1 = daytime absolute errors, sample 2 = nighttime absolute errors.
  UTestResult test;
};

/// Throws EmptyStratum when either stratum has no predictions.
DayNightResult day_night_eval(const std::vector<PooledPrediction>& predictions);

struct CaseStudyRow {
  std::int64_t end_minute = 0;
  double ref_theta = 0.0;
  double pred_theta = 0.0;
  double abs_err_hours = 0.0;
  std::vector<double> raw_values;  // one per CaseStudyTrace::channels; NaN where missing
};

struct CaseStudyTrace {
  std::string participant_id;
  HyperParams params;
  std::vector<ChannelId> channels;
  std::vector<CaseStudyRow> rows;
};

/// Leave-one-out: grid search and training on every other participant, prediction over the target's coverage.
CaseStudyTrace loo_case_study(const Cohort& cohort, const std::string& target, const ExperimentKey& key,
                              const HyperGrid& grid, const WindowConfig& win, std::uint64_t seed,
                              const SearchOptions& options = {});

}  // namespace circphase
