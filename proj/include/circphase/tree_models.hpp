#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "circphase/matrix.hpp"
#include "circphase/rng.hpp"

namespace circphase {

/// "No depth limit": min_samples_leaf and purity are the effective stoppers.
inline constexpr int kUnlimitedDepth = INT_MAX;

/// Split sends x[feature] <= threshold left and > threshold right. Leaves have feature == -1.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<double, 2> value{0.0, 0.0};  // leaf mean per output; unused outputs are 0

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t n_outputs) : nodes_(std::move(nodes)), n_outputs_(n_outputs) {}

  const std::array<double, 2>& predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_outputs() const { return n_outputs_; }
  int depth() const;
  std::size_t n_leaves() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_outputs_ = 2;
};

struct TreeParams {
  int max_depth = kUnlimitedDepth;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // features tried per node; 0 = all
};

/// Feature columns plus each column's row order sorted by value. Built once per training matrix and reused by
/// every tree and boosting stage fitted on it.
class PresortedFeatures {
 public:
  explicit PresortedFeatures(const Matrix& x);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double value(std::size_t row, std::size_t col) const { return columns_[col * rows_ + row]; }
  std::span<const std::int32_t> order(std::size_t col) const { return {orders_.data() + col * rows_, rows_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> columns_;
  std::vector<std::int32_t> orders_;
};

/// Greedy CART on one or two outputs. Each node picks the (feature, threshold) maximizing variance reduction
/// summed over outputs; thresholds are midpoints between consecutive distinct values; leaves hold output means.
/// `weights` are integer multiplicities (bootstrap counts); empty means all ones. `rng` drives per-node feature
/// subsampling when params.max_features < cols.
RegressionTree build_tree(const PresortedFeatures& x, std::span<const double> y0, std::span<const double> y1,
                          std::span<const std::uint32_t> weights, const TreeParams& params, Rng* rng);

/// Convenience wrapper: Y has one or two columns.
RegressionTree fit_tree(const Matrix& x, const Matrix& y, const TreeParams& params, Rng* rng = nullptr);

enum class ModelFamily { RandomForest, GradientBoosting };

std::string_view to_string(ModelFamily f);
/// Accepts "rf", "random_forest", "gbr", "gradient_boosting".
std::optional<ModelFamily> parse_model_family(std::string_view name);
std::string_view short_name(ModelFamily f);  // "rf" / "gbr"

struct HyperParams {
  ModelFamily family = ModelFamily::RandomForest;
  int n_estimators = 200;
  int max_depth = kUnlimitedDepth;
  double max_features_fraction = 1.0 / 3.0;
  std::size_t min_samples_leaf = 1;
  double learning_rate = 0.1;
  bool bootstrap = true;

  void validate() const;
  std::string describe() const;
  bool operator==(const HyperParams&) const = default;

  static HyperParams random_forest(int n_trees, int max_depth);
  static HyperParams gradient_boosting(int n_estimators, int max_depth);
};

using HyperGrid = std::vector<HyperParams>;

/// RF: trees {200, 400} x depth {10, none}. GBR: estimators {200, 400} x depth {2, 3}.
HyperGrid default_grid(ModelFamily family);

/// A fitted estimator of the (sin, cos) phase encoding.
class PhaseModel {
 public:
  virtual ~PhaseModel() = default;
  virtual ModelFamily family() const = 0;
  virtual std::size_t n_features() const = 0;
  /// Number of ensemble members (trees or boosting stages per output).
  virtual std::size_t n_members() const = 0;
  /// Raw (y_sin, y_cos) using the first `members` ensemble members.
  virtual std::array<double, 2> predict_raw(std::span<const double> x, std::size_t members) const = 0;
  std::array<double, 2> predict_raw(std::span<const double> x) const { return predict_raw(x, n_members()); }
};

class ForestModel final : public PhaseModel {
 public:
  ForestModel(std::vector<RegressionTree> trees, HyperParams params, std::uint64_t seed, std::size_t n_features)
      : trees_(std::move(trees)), params_(params), seed_(seed), n_features_(n_features) {}

  ModelFamily family() const override { return ModelFamily::RandomForest; }
  std::size_t n_features() const override { return n_features_; }
  std::size_t n_members() const override { return trees_.size(); }
  using PhaseModel::predict_raw;
  std::array<double, 2> predict_raw(std::span<const double> x, std::size_t members) const override;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const HyperParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<RegressionTree> trees_;
  HyperParams params_;
  std::uint64_t seed_ = 0;
  std::size_t n_features_ = 0;
};

class BoostedModel final : public PhaseModel {
 public:
  BoostedModel(std::array<double, 2> init, std::array<std::vector<RegressionTree>, 2> stages, HyperParams params,
               std::uint64_t seed, std::size_t n_features)
      : init_(init), stages_(std::move(stages)), params_(params), seed_(seed), n_features_(n_features) {}

  ModelFamily family() const override { return ModelFamily::GradientBoosting; }
  std::size_t n_features() const override { return n_features_; }
  std::size_t n_members() const override { return stages_[0].size(); }
  using PhaseModel::predict_raw;
  /// init + sum over the first `members` stages of learning_rate * stage(x), per output.
  std::array<double, 2> predict_raw(std::span<const double> x, std::size_t members) const override;

  const std::array<double, 2>& init() const { return init_; }
  const std::array<std::vector<RegressionTree>, 2>& stages() const { return stages_; }
  const HyperParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  /// Training mean squared error (summed over outputs) after 0..n stages; filled by fit_gradient_boosting.
  std::vector<double> training_loss;

 private:
  std::array<double, 2> init_{0.0, 0.0};
  std::array<std::vector<RegressionTree>, 2> stages_;
  HyperParams params_;
  std::uint64_t seed_ = 0;
  std::size_t n_features_ = 0;
};

/// Bootstrap + per-node feature subsampling of ceil(fraction * p) features. Tree i uses derive_seed(seed, i), so
/// the first k trees of a larger forest equal a k-tree forest with the same seed. `jobs` > 1 builds trees in
/// parallel with identical results.
ForestModel fit_random_forest(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed,
                              std::size_t jobs = 1);

/// Independent squared-error boosting per output: init = mean, each stage a depth-limited tree on residuals.
BoostedModel fit_gradient_boosting(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed);

std::unique_ptr<PhaseModel> fit_model(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed,
                                      std::size_t jobs = 1);

struct PhasePredictions {
  std::vector<double> theta;
  std::size_t zero_vectors = 0;  // rows whose raw output was (0, 0), decoded as 0
};

/// atan2 decode of raw outputs without renormalization.
PhasePredictions predict_phase(const PhaseModel& model, const Matrix& x);
PhasePredictions predict_phase(const PhaseModel& model, const Matrix& x, std::size_t members);

/// Versioned text format; doubles are written as hex floats so predictions round-trip bit-exactly.
void save_model(std::ostream& out, const PhaseModel& model);
std::unique_ptr<PhaseModel> load_model(std::istream& in);

}  // namespace circphase
