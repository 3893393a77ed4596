#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "circphase/cosinor.hpp"
#include "circphase/features.hpp"
#include "circphase/preprocess.hpp"
#include "circphase/synth.hpp"
#include "circphase/tree_models.hpp"

#include <json.hpp>

namespace circphase {

inline constexpr int kConfigVersion = 1;

struct CvConfig {
  std::size_t k = 5;
  std::size_t inner_k = 3;
};

/// One experiment description. Relative paths are resolved against the directory of the config file.
struct ExperimentConfig {
  std::uint64_t seed = 1;  // master seed: synthetic cohort, fold plans and model seeds derive from it
  std::optional<std::filesystem::path> data_dir;
  SynthParams synth;  // used when data_dir is absent
  std::filesystem::path output_dir = "out";
  std::int64_t max_gap_minutes = 5;
  PreprocessConfig preprocess;
  CosinorOptions cosinor;
  std::vector<std::int64_t> windows{kDefaultWindows.begin(), kDefaultWindows.end()};
  std::int64_t stride_minutes = 10;
  double min_coverage = 0.8;
  std::vector<Modality> modalities{kAllModalities.begin(), kAllModalities.end()};
  std::vector<ModelFamily> models{ModelFamily::RandomForest, ModelFamily::GradientBoosting};
  std::map<ModelFamily, HyperGrid> grid;  // per family; families absent here use default_grid
  CvConfig cv;
  std::int64_t eval_window = 480;
  Modality eval_modality = Modality::M5;
  ModelFamily eval_model = ModelFamily::RandomForest;
  std::optional<std::string> case_participant;
  std::size_t jobs = 0;  // 0 = all available cores

  /// Throws ConfigParse for inconsistent values.
  void validate() const;
  const HyperGrid& grid_for(ModelFamily family) const;
  WindowConfig window_config(std::int64_t window_minutes) const;
  std::uint64_t plan_seed() const;
  std::uint64_t run_seed() const;
  /// Canonical JSON form, as recorded in the run manifest.
  nlohmann::json to_json() const;
};

/// Parses a config document. Unknown keys anywhere are rejected with ConfigParse.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace circphase
