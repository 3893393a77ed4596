#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>

#include "circphase/error.hpp"
#include "circphase/tree_models.hpp"

namespace circphase {

namespace {

constexpr std::string_view kMagic = "circphase-model";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void write_tree(std::ostream& out, const RegressionTree& tree) {
  out << "tree " << tree.n_outputs() << ' ' << tree.nodes().size() << '\n';
  for (const TreeNode& n : tree.nodes()) {
    out << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << hex(n.value[0]) << ' '
        << hex(n.value[1]) << '\n';
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string token() {
    std::string t;
    if (!(in_ >> t)) throw Error(ErrorCode::ModelFormat, "unexpected end of model file");
    return t;
  }

  void expect(std::string_view word) {
    const std::string t = token();
    if (t != word) throw Error(ErrorCode::ModelFormat, "expected '" + std::string(word) + "', found '" + t + "'");
  }

  double real() {
    const std::string t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') throw Error(ErrorCode::ModelFormat, "bad number '" + t + "'");
    return v;
  }

  long long integer() {
    const std::string t = token();
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0') throw Error(ErrorCode::ModelFormat, "bad integer '" + t + "'");
    return v;
  }

  std::uint64_t unsigned_integer() {
    const std::string t = token();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0') throw Error(ErrorCode::ModelFormat, "bad integer '" + t + "'");
    return v;
  }

  std::size_t count(std::size_t limit) {
    const long long v = integer();
    if (v < 0 || static_cast<unsigned long long>(v) > limit) throw Error(ErrorCode::ModelFormat, "count out of range");
    return static_cast<std::size_t>(v);
  }

 private:
  std::istream& in_;
};

RegressionTree read_tree(Reader& r, std::size_t n_features) {
  r.expect("tree");
  const std::size_t n_outputs = r.count(2);
  const std::size_t n_nodes = r.count(1u << 30);
  if (n_outputs == 0 || n_nodes == 0) throw Error(ErrorCode::ModelFormat, "empty tree");
  std::vector<TreeNode> nodes(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    TreeNode& n = nodes[i];
    n.feature = static_cast<std::int32_t>(r.integer());
    n.threshold = r.real();
    n.left = static_cast<std::int32_t>(r.integer());
    n.right = static_cast<std::int32_t>(r.integer());
    n.value = {r.real(), r.real()};
    if (!n.is_leaf()) {
      const bool ok = static_cast<std::size_t>(n.feature) < n_features && n.left > static_cast<std::int32_t>(i) &&
                      n.right > static_cast<std::int32_t>(i) && static_cast<std::size_t>(n.left) < n_nodes &&
                      static_cast<std::size_t>(n.right) < n_nodes;
      if (!ok) throw Error(ErrorCode::ModelFormat, "malformed tree node " + std::to_string(i));
    }
  }
  return RegressionTree(std::move(nodes), n_outputs);
}

}  // namespace

void save_model(std::ostream& out, const PhaseModel& model) {
  const HyperParams* hp = nullptr;
  std::uint64_t seed = 0;
  if (const auto* rf = dynamic_cast<const ForestModel*>(&model)) {
    hp = &rf->params();
    seed = rf->seed();
  } else if (const auto* gb = dynamic_cast<const BoostedModel*>(&model)) {
    hp = &gb->params();
    seed = gb->seed();
  } else {
    throw Error(ErrorCode::ModelFormat, "unsupported model type");
  }
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "family " << to_string(model.family()) << '\n';
  out << "n_features " << model.n_features() << '\n';
  out << "seed " << seed << '\n';
  out << "params " << hp->n_estimators << ' ' << hp->max_depth << ' ' << hex(hp->max_features_fraction) << ' '
      << hp->min_samples_leaf << ' ' << hex(hp->learning_rate) << ' ' << (hp->bootstrap ? 1 : 0) << '\n';
  if (const auto* rf = dynamic_cast<const ForestModel*>(&model)) {
    out << "trees " << rf->trees().size() << '\n';
    for (const auto& t : rf->trees()) write_tree(out, t);
  } else {
    const auto& gb = dynamic_cast<const BoostedModel&>(model);
    out << "init " << hex(gb.init()[0]) << ' ' << hex(gb.init()[1]) << '\n';
    out << "stages " << gb.stages()[0].size() << '\n';
    for (const auto& output : gb.stages()) {
      for (const auto& t : output) write_tree(out, t);
    }
  }
  out << "end\n";
  if (!out) throw Error(ErrorCode::Io, "failed to write model");
}

std::unique_ptr<PhaseModel> load_model(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  if (r.integer() != kFormatVersion) throw Error(ErrorCode::ModelFormat, "unsupported model format version");
  r.expect("family");
  const auto family = parse_model_family(r.token());
  if (!family) throw Error(ErrorCode::ModelFormat, "unknown model family");
  r.expect("n_features");
  const std::size_t n_features = r.count(1u << 24);
  r.expect("seed");
  const std::uint64_t seed = r.unsigned_integer();
  r.expect("params");
  HyperParams hp;
  hp.family = *family;
  hp.n_estimators = static_cast<int>(r.integer());
  hp.max_depth = static_cast<int>(r.integer());
  hp.max_features_fraction = r.real();
  hp.min_samples_leaf = static_cast<std::size_t>(r.integer());
  hp.learning_rate = r.real();
  hp.bootstrap = r.integer() != 0;
  try {
    hp.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ModelFormat, e.what());
  }

  std::unique_ptr<PhaseModel> model;
  if (*family == ModelFamily::RandomForest) {
    r.expect("trees");
    const std::size_t n = r.count(1u << 24);
    if (n == 0) throw Error(ErrorCode::ModelFormat, "forest has no trees");
    std::vector<RegressionTree> trees;
    trees.reserve(n);
    for (std::size_t i = 0; i < n; ++i) trees.push_back(read_tree(r, n_features));
    model = std::make_unique<ForestModel>(std::move(trees), hp, seed, n_features);
  } else {
    r.expect("init");
    const std::array<double, 2> init{r.real(), r.real()};
    r.expect("stages");
    const std::size_t n = r.count(1u << 24);
    std::array<std::vector<RegressionTree>, 2> stages;
    for (auto& output : stages) {
      output.reserve(n);
      for (std::size_t i = 0; i < n; ++i) output.push_back(read_tree(r, n_features));
    }
    model = std::make_unique<BoostedModel>(init, std::move(stages), hp, seed, n_features);
  }
  r.expect("end");
  return model;
}

}  // namespace circphase
