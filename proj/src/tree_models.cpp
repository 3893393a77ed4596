#include "circphase/tree_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "circphase/circular.hpp"
#include "circphase/error.hpp"
#include "circphase/parallel.hpp"

namespace circphase {

// ---------------------------------------------------------------------------------------------------------------
// Trees

const std::array<double, 2>& RegressionTree::predict(std::span<const double> x) const {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                          : node->right)];
  }
  return node->value;
}

int RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

std::size_t RegressionTree::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

PresortedFeatures::PresortedFeatures(const Matrix& x) : rows_(x.rows()), cols_(x.cols()) {
  columns_.resize(rows_ * cols_);
  orders_.resize(rows_ * cols_);
  for (std::size_t c = 0; c < cols_; ++c) {
    double* col = columns_.data() + c * rows_;
    for (std::size_t r = 0; r < rows_; ++r) {
      col[r] = x(r, c);
      if (!std::isfinite(col[r])) throw Error(ErrorCode::NonFinite, "non-finite feature value");
    }
    std::int32_t* ord = orders_.data() + c * rows_;
    std::iota(ord, ord + rows_, 0);
    std::stable_sort(ord, ord + rows_, [col](std::int32_t a, std::int32_t b) { return col[a] < col[b]; });
  }
}

namespace {

struct BuildTask {
  std::size_t begin;
  std::size_t end;
  int depth;
  std::size_t node;
};

}  // namespace

RegressionTree build_tree(const PresortedFeatures& x, std::span<const double> y0, std::span<const double> y1,
                          std::span<const std::uint32_t> weights, const TreeParams& params, Rng* rng) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const bool two = !y1.empty();
  if (y0.size() != n || (two && y1.size() != n)) throw Error(ErrorCode::DimensionMismatch, "target length differs from rows");
  if (!weights.empty() && weights.size() != n) throw Error(ErrorCode::DimensionMismatch, "weight length differs from rows");
  if (p == 0) throw Error(ErrorCode::DimensionMismatch, "no features");
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

  std::vector<std::uint32_t> w(n, 1);
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w.begin());
  const auto m = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](std::uint32_t v) { return v > 0; }));
  if (m == 0) throw Error(ErrorCode::DegenerateData, "no rows with positive weight");

  // Per-feature sorted row lists restricted to in-sample rows, plus one list in row order used for node
  // statistics so that they do not depend on column order. Every node owns the same [begin, end) slice in each
  // list.
  std::vector<std::int32_t> idx((p + 1) * m);
  for (std::size_t f = 0; f < p; ++f) {
    std::size_t k = 0;
    for (std::int32_t r : x.order(f)) {
      if (w[static_cast<std::size_t>(r)] > 0) idx[f * m + k++] = r;
    }
  }
  {
    std::size_t k = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (w[r] > 0) idx[p * m + k++] = static_cast<std::int32_t>(r);
    }
  }

  const std::size_t mtry = (params.max_features == 0 || params.max_features >= p) ? p : params.max_features;
  std::vector<std::size_t> feats(p);
  std::iota(feats.begin(), feats.end(), 0);
  std::vector<std::size_t> candidates;
  std::vector<std::uint8_t> goes_left(n, 0);
  std::vector<std::int32_t> tmp(m);

  std::vector<TreeNode> nodes(1);
  std::vector<BuildTask> stack{{0, m, 0, 0}};
  while (!stack.empty()) {
    const BuildTask task = stack.back();
    stack.pop_back();
    const std::int32_t* rows = idx.data() + p * m + task.begin;

    double wsum = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t k = 0; k < task.end - task.begin; ++k) {
      const auto r = static_cast<std::size_t>(rows[k]);
      const double wr = w[r];
      wsum += wr;
      s0 += wr * y0[r];
      if (two) s1 += wr * y1[r];
    }
    const double m0 = s0 / wsum;
    const double m1 = two ? s1 / wsum : 0.0;
    double sse = 0.0;
    for (std::size_t k = 0; k < task.end - task.begin; ++k) {
      const auto r = static_cast<std::size_t>(rows[k]);
      const double d0 = y0[r] - m0;
      const double d1 = two ? y1[r] - m1 : 0.0;
      sse += w[r] * (d0 * d0 + d1 * d1);
    }
    nodes[task.node].value = {m0, m1};

    const double purity_tol = 1e-24 * wsum * (1.0 + m0 * m0 + m1 * m1);
    if (task.depth >= params.max_depth || wsum < 2.0 * static_cast<double>(min_leaf) || sse <= purity_tol ||
        task.end - task.begin < 2) {
      continue;
    }

    candidates.clear();
    if (mtry < p) {
      for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng ? rng->below(p - i) : 0);
        std::swap(feats[i], feats[j]);
      }
      candidates.assign(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(mtry));
      std::sort(candidates.begin(), candidates.end());
    } else {
      candidates.assign(feats.size(), 0);
      std::iota(candidates.begin(), candidates.end(), 0);
    }

    // Variance reduction of a split with centred left sums (c0, c1) and weights wl, wr:
    // (c0^2 + c1^2) * W / (wl * wr).
    double best_gain = 1e-12 * sse;
    std::int64_t best_feature = -1;
    std::size_t best_pos = 0;
    double best_threshold = 0.0;
    const double min_leaf_w = static_cast<double>(min_leaf);
    for (std::size_t f : candidates) {
      const std::int32_t* ord = idx.data() + f * m;
      double wl = 0.0, c0 = 0.0, c1 = 0.0;
      for (std::size_t k = task.begin; k + 1 < task.end; ++k) {
        const auto r = static_cast<std::size_t>(ord[k]);
        const double wr = w[r];
        wl += wr;
        c0 += wr * (y0[r] - m0);
        if (two) c1 += wr * (y1[r] - m1);
        const double wright = wsum - wl;
        if (wright < min_leaf_w) break;
        if (wl < min_leaf_w) continue;
        const double xv = x.value(r, f);
        const double xn = x.value(static_cast<std::size_t>(ord[k + 1]), f);
        if (!(xn > xv)) continue;
        const double gain = (c0 * c0 + c1 * c1) * wsum / (wl * wright);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::int64_t>(f);
          best_pos = k;
          double thr = xv + 0.5 * (xn - xv);
          if (!(thr < xn)) thr = xv;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) continue;

    const auto bf = static_cast<std::size_t>(best_feature);
    const std::int32_t* bord = idx.data() + bf * m;
    for (std::size_t k = task.begin; k < task.end; ++k) goes_left[static_cast<std::size_t>(bord[k])] = k <= best_pos ? 1 : 0;
    const std::size_t n_left = best_pos - task.begin + 1;
    for (std::size_t f = 0; f <= p; ++f) {
      if (f == bf) continue;
      std::int32_t* ord = idx.data() + f * m;
      std::size_t li = 0;
      std::size_t ri = n_left;
      for (std::size_t k = task.begin; k < task.end; ++k) {
        const std::int32_t r = ord[k];
        if (goes_left[static_cast<std::size_t>(r)]) {
          tmp[li++] = r;
        } else {
          tmp[ri++] = r;
        }
      }
      std::copy(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(task.end - task.begin), ord + task.begin);
    }

    const auto left = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    TreeNode& node = nodes[task.node];
    node.feature = static_cast<std::int32_t>(bf);
    node.threshold = best_threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({task.begin + n_left, task.end, task.depth + 1, static_cast<std::size_t>(left + 1)});
    stack.push_back({task.begin, task.begin + n_left, task.depth + 1, static_cast<std::size_t>(left)});
  }
  return RegressionTree(std::move(nodes), two ? 2 : 1);
}

RegressionTree fit_tree(const Matrix& x, const Matrix& y, const TreeParams& params, Rng* rng) {
  if (y.rows() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  if (y.cols() != 1 && y.cols() != 2) throw Error(ErrorCode::DimensionMismatch, "Y must have one or two columns");
  std::vector<double> y0(y.rows()), y1;
  for (std::size_t r = 0; r < y.rows(); ++r) y0[r] = y(r, 0);
  if (y.cols() == 2) {
    y1.resize(y.rows());
    for (std::size_t r = 0; r < y.rows(); ++r) y1[r] = y(r, 1);
  }
  return build_tree(PresortedFeatures(x), y0, y1, {}, params, rng);
}

// ---------------------------------------------------------------------------------------------------------------
// Hyperparameters

std::string_view to_string(ModelFamily f) {
  return f == ModelFamily::RandomForest ? "random_forest" : "gradient_boosting";
}

std::string_view short_name(ModelFamily f) { return f == ModelFamily::RandomForest ? "rf" : "gbr"; }

std::optional<ModelFamily> parse_model_family(std::string_view name) {
  if (name == "rf" || name == "random_forest" || name == "RF") return ModelFamily::RandomForest;
  if (name == "gbr" || name == "gradient_boosting" || name == "GBR") return ModelFamily::GradientBoosting;
  return std::nullopt;
}

void HyperParams::validate() const {
  if (n_estimators < 1) throw Error(ErrorCode::InvalidHyperparams, "n_estimators must be positive");
  if (max_depth < 1) throw Error(ErrorCode::InvalidHyperparams, "max_depth must be positive");
  if (!(max_features_fraction > 0.0 && max_features_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidHyperparams, "max_features_fraction must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) throw Error(ErrorCode::InvalidHyperparams, "min_samples_leaf must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidHyperparams, "learning_rate must be non-negative");
  }
}

std::string HyperParams::describe() const {
  std::ostringstream os;
  os << short_name(family) << "(n=" << n_estimators << ",depth=";
  if (max_depth == kUnlimitedDepth) {
    os << "none";
  } else {
    os << max_depth;
  }
  if (family == ModelFamily::GradientBoosting) os << ",lr=" << learning_rate;
  os << ")";
  return os.str();
}

HyperParams HyperParams::random_forest(int n_trees, int max_depth) {
  HyperParams hp;
  hp.family = ModelFamily::RandomForest;
  hp.n_estimators = n_trees;
  hp.max_depth = max_depth;
  hp.max_features_fraction = 1.0 / 3.0;
  hp.min_samples_leaf = 1;
  hp.bootstrap = true;
  return hp;
}

HyperParams HyperParams::gradient_boosting(int n_estimators, int max_depth) {
  HyperParams hp;
  hp.family = ModelFamily::GradientBoosting;
  hp.n_estimators = n_estimators;
  hp.max_depth = max_depth;
  hp.max_features_fraction = 1.0;
  hp.min_samples_leaf = 5;
  hp.learning_rate = 0.1;
  hp.bootstrap = false;
  return hp;
}

HyperGrid default_grid(ModelFamily family) {
  if (family == ModelFamily::RandomForest) {
    return {HyperParams::random_forest(200, 10), HyperParams::random_forest(200, kUnlimitedDepth),
            HyperParams::random_forest(400, 10), HyperParams::random_forest(400, kUnlimitedDepth)};
  }
  return {HyperParams::gradient_boosting(200, 2), HyperParams::gradient_boosting(200, 3),
          HyperParams::gradient_boosting(400, 2), HyperParams::gradient_boosting(400, 3)};
}

// ---------------------------------------------------------------------------------------------------------------
// Ensembles

namespace {

void split_targets(const Matrix& y, std::vector<double>& y0, std::vector<double>& y1) {
  if (y.cols() != 2) throw Error(ErrorCode::DimensionMismatch, "phase targets must have two columns");
  y0.resize(y.rows());
  y1.resize(y.rows());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    y0[r] = y(r, 0);
    y1[r] = y(r, 1);
  }
}

void check_training_shape(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  if (x.rows() < 10) throw Error(ErrorCode::InvalidHyperparams, "ensembles need at least 10 training rows");
  if (x.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "no features");
}

void check_features(const PhaseModel& model, std::span<const double> x) {
  if (x.size() != model.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.n_features()) + " features, got " +
                                                  std::to_string(x.size()));
  }
}

}  // namespace

std::array<double, 2> ForestModel::predict_raw(std::span<const double> x, std::size_t members) const {
  check_features(*this, x);
  members = std::min(members, trees_.size());
  if (members == 0) throw Error(ErrorCode::InvalidHyperparams, "forest prefix must contain at least one tree");
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < members; ++i) {
    const auto& v = trees_[i].predict(x);
    a += v[0];
    b += v[1];
  }
  return {a / static_cast<double>(members), b / static_cast<double>(members)};
}

std::array<double, 2> BoostedModel::predict_raw(std::span<const double> x, std::size_t members) const {
  check_features(*this, x);
  std::array<double, 2> out = init_;
  for (std::size_t o = 0; o < 2; ++o) {
    const std::size_t count = std::min(members, stages_[o].size());
    for (std::size_t s = 0; s < count; ++s) out[o] += params_.learning_rate * stages_[o][s].predict(x)[0];
  }
  return out;
}

ForestModel fit_random_forest(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed,
                              std::size_t jobs) {
  hp.validate();
  check_training_shape(x, y);
  std::vector<double> y0, y1;
  split_targets(y, y0, y1);
  const PresortedFeatures pf(x);
  const std::size_t p = x.cols();
  TreeParams tp;
  tp.max_depth = hp.max_depth;
  tp.min_samples_leaf = hp.min_samples_leaf;
  tp.max_features = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(hp.max_features_fraction * static_cast<double>(p) - 1e-12)), 1, p);

  const std::size_t n = x.rows();
  std::vector<RegressionTree> trees(static_cast<std::size_t>(hp.n_estimators));
  parallel_for(trees.size(), jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::vector<std::uint32_t> counts;
    if (hp.bootstrap) {
      counts.assign(n, 0);
      for (std::size_t d = 0; d < n; ++d) ++counts[static_cast<std::size_t>(rng.below(n))];
    }
    trees[i] = build_tree(pf, y0, y1, counts, tp, &rng);
  });
  return ForestModel(std::move(trees), hp, seed, p);
}

BoostedModel fit_gradient_boosting(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed) {
  hp.validate();
  check_training_shape(x, y);
  std::vector<double> y0, y1;
  split_targets(y, y0, y1);
  const PresortedFeatures pf(x);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  TreeParams tp;
  tp.max_depth = hp.max_depth;
  tp.min_samples_leaf = hp.min_samples_leaf;
  tp.max_features = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(hp.max_features_fraction * static_cast<double>(p) - 1e-12)), 1, p);
  std::array<double, 2> init{};
  std::array<std::vector<RegressionTree>, 2> stages;
  const auto n_stages = static_cast<std::size_t>(hp.n_estimators);
  std::vector<double> loss(n_stages + 1, 0.0);
  std::vector<double> residual(n);
  std::vector<double> fitted(n);
  for (std::size_t o = 0; o < 2; ++o) {
    const std::vector<double>& target = o == 0 ? y0 : y1;
    // One stream per output so that a shorter run is an exact prefix of a longer one.
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(o)));
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(n);
    init[o] = mean;
    std::fill(fitted.begin(), fitted.end(), mean);
    auto mse = [&] {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += (target[r] - fitted[r]) * (target[r] - fitted[r]);
      return s / static_cast<double>(n);
    };
    loss[0] += mse();
    stages[o].reserve(n_stages);
    for (std::size_t s = 0; s < n_stages; ++s) {
      for (std::size_t r = 0; r < n; ++r) residual[r] = target[r] - fitted[r];
      RegressionTree tree = build_tree(pf, residual, {}, {}, tp, &rng);
      for (std::size_t r = 0; r < n; ++r) fitted[r] += hp.learning_rate * tree.predict(x.row(r))[0];
      stages[o].push_back(std::move(tree));
      loss[s + 1] += mse();
    }
  }
  BoostedModel model(init, std::move(stages), hp, seed, p);
  model.training_loss = std::move(loss);
  return model;
}

std::unique_ptr<PhaseModel> fit_model(const Matrix& x, const Matrix& y, const HyperParams& hp, std::uint64_t seed,
                                      std::size_t jobs) {
  if (hp.family == ModelFamily::RandomForest) {
    return std::make_unique<ForestModel>(fit_random_forest(x, y, hp, seed, jobs));
  }
  return std::make_unique<BoostedModel>(fit_gradient_boosting(x, y, hp, seed));
}

PhasePredictions predict_phase(const PhaseModel& model, const Matrix& x, std::size_t members) {
  if (x.rows() > 0 && x.cols() != model.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.n_features()) +
                                                  " features, got " + std::to_string(x.cols()));
  }
  PhasePredictions out;
  out.theta.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto raw = model.predict_raw(x.row(r), members);
    bool zero = false;
    out.theta.push_back(decode_phase_or_zero(raw[0], raw[1], zero));
    if (zero) ++out.zero_vectors;
  }
  return out;
}

PhasePredictions predict_phase(const PhaseModel& model, const Matrix& x) {
  return predict_phase(model, x, model.n_members());
}

}  // namespace circphase
