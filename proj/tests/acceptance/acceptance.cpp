// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "../support/tree_check.hpp"
#include "circphase/circular.hpp"
#include "circphase/cli.hpp"
#include "circphase/config.hpp"
#include "circphase/cosinor.hpp"
#include "circphase/eval.hpp"
#include "circphase/reports.hpp"
#include "circphase/synth.hpp"
#include "circphase/tree_models.hpp"
#include "circphase/utest.hpp"

using namespace circphase;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols, bool discrete) {
  std::uniform_real_distribution<double> u(0, 1);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = discrete ? std::floor(u(gen) * 5) : u(gen);
  }
  return m;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

// ---------------------------------------------------------------------------------------------------------------

Outcome cosinor_exactness() {
  const double mesor = 37.0, amplitude = 0.4, acrophase = 1.0;
  std::vector<std::int64_t> t;
  std::vector<double> v;
  const std::int64_t start = SynthParams::kDefaultStartMinute;
  for (std::int64_t m = start; m < start + 3 * 1440; m += 5) {
    t.push_back(m);
    v.push_back(mesor + amplitude * std::cos(kOmegaPerMinute * static_cast<double>(m % 1440) + acrophase));
  }
  const auto begin = std::chrono::steady_clock::now();
  const CosinorFit fit = fit_cosinor(t, v);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();

  const auto normal = oracle::cosinor_normal_equations(std::vector<double>(t.begin(), t.end()), v);
  const double oracle_phase = std::atan2(-normal[2], normal[1]);
  const double dm = std::fabs(fit.mesor - mesor);
  const double da = std::fabs(fit.amplitude - amplitude);
  const double dphi = oracle::angular_distance(fit.acrophase, acrophase);
  const double doracle = oracle::angular_distance(fit.acrophase, oracle_phase);
  return {dm <= 1e-9 && da <= 1e-9 && dphi <= 1e-9 && doracle <= 1e-9 && seconds < 1.0,
          fmt("|dM|=%.2e |dA|=%.2e dphi=%.2e rad, vs normal equations %.2e rad, %zu samples, %.4f s", dm, da, dphi,
              doracle, t.size(), seconds)};
}

Outcome circular_codec() {
  std::mt19937_64 gen(20211004);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  const std::vector<double> scales{1e-6, 1.0, 1e6};
  double worst = 0.0, worst_scaled = 0.0;
  std::vector<std::size_t> mismatch(scales.size(), 0);
  std::size_t binary_mismatch = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double theta = u(gen);
    const EncodedTarget e = encode_phase(theta);
    const double back = decode_phase(e.y_sin, e.y_cos);
    worst = std::max(worst, oracle::angular_distance(back, theta));
    for (std::size_t k = 0; k < scales.size(); ++k) {
      const double scaled = decode_phase(scales[k] * e.y_sin, scales[k] * e.y_cos);
      if (!same_bits(scaled, back)) ++mismatch[k];
      worst_scaled = std::max(worst_scaled, std::fabs(scaled - back));
    }
    for (double c : {0x1p-20, 0x1p20}) binary_mismatch += !same_bits(decode_phase(c * e.y_sin, c * e.y_cos), back);
  }
  const bool exact = std::all_of(mismatch.begin(), mismatch.end(), [](std::size_t m) { return m == 0; });
  return {worst <= 1e-12 && exact,
          fmt("max round-trip error %.2e rad over 1e6 phases; decodes differing from c = 1 bits: c=1e-6 %zu, "
              "c=1 %zu, c=1e6 %zu (max deviation %.2e rad); power-of-two scales 2^-20, 2^20: %zu differ",
              worst, mismatch[0], mismatch[1], mismatch[2], worst_scaled, binary_mismatch)};
}

Outcome metric_oracle() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-3 * kTwoPi, 3 * kTwoPi);
  std::vector<double> pred(10000), ref(10000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = u(gen);
    ref[i] = wrap_two_pi(u(gen));
  }
  double worst = 0.0;
  for (int q : {1, 2}) {
    const double mine = circular_moment(pred, ref, q);
    worst = std::max(worst, std::fabs(mine - oracle::circular_moment(pred, ref, q)));
  }
  const std::vector<double> p1{hours_to_phase(23.5)}, r1{hours_to_phase(0.5)};
  const double wrap_hours = metrics_report(p1, r1).cmae_hours;
  const double wrap_direct = wrapped_abs_error_hours(p1[0], r1[0]);
  const double wrap_reverse = wrapped_abs_error_hours(r1[0], p1[0]);
  const bool wrap_ok = wrap_hours == 1.0 && wrap_direct == 1.0 && wrap_reverse == 1.0;
  return {worst <= 1e-12 && wrap_ok,
          fmt("max |xi_q - direct sum| = %.2e over 1e4 pairs (q = 1, 2); 23.5 h vs 0.5 h -> %.17g h", worst,
              wrap_hours)};
}

Outcome tree_oracle() {
  const auto begin = std::chrono::steady_clock::now();
  std::mt19937_64 gen(424242);
  std::size_t mismatches = 0, splits = 0;
  std::string first;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 49, p = 1 + gen() % 3;
    const int depth = 1 + static_cast<int>(gen() % 2);
    const Matrix x = random_matrix(gen, n, p, trial % 4 == 0);
    const Matrix y = random_matrix(gen, n, 2, trial % 8 == 1);
    TreeParams params;
    params.max_depth = depth;
    const RegressionTree tree = fit_tree(x, y, params);
    splits += tree.nodes().size() - tree.n_leaves();
    const std::string m = testing_support::compare_with_brute_force(tree, rows_of(x), rows_of(y), 1, depth);
    if (!m.empty()) {
      ++mismatches;
      if (first.empty()) first = fmt("trial %d: ", trial) + m;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  return {mismatches == 0 && seconds < 30.0,
          fmt("200 instances, %zu splits checked, %zu mismatches, %.2f s", splits, mismatches, seconds) +
              (first.empty() ? "" : " (" + first + ")")};
}

Outcome causality() {
  SynthParams sp;
  sp.n_participants = 6;
  sp.days = 6;
  sp.seed = 5;
  std::vector<ParticipantRecording> recs;
  for (auto& p : generate_cohort(sp)) recs.push_back(p.recording);
  const Cohort cohort = prepare_cohort(recs, PreprocessConfig{});

  std::mt19937_64 gen(99);
  std::size_t rows_checked = 0, violations = 0, changed_after = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t target = gen() % cohort.participants.size();
    const std::int64_t window = kDefaultWindows[gen() % kDefaultWindows.size()];
    const Modality modality = kAllModalities[gen() % kAllModalities.size()];
    const ModalityConfig mc = modality_config(modality);
    const WindowConfig win{window, 10, 0.8};

    std::vector<FeatureDataset> data = build_cohort_datasets(cohort, modality, win);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i != target) train.push_back(i);
    }
    const StackedRows stacked = stack_rows(data, train);
    const auto model = fit_model(stacked.x, stacked.y, HyperParams::random_forest(10, 8), derive_seed(7, trial));

    const PreparedParticipant& p = cohort.participants[target];
    const FeatureDataset& base = data[target];
    if (base.rows.size() < 2) continue;
    const std::int64_t cut = base.rows[gen() % (base.rows.size() - 1)].end_minute;
    ParticipantRecording perturbed = p.clean.recording;
    for (auto& [id, s] : perturbed.channels) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.minute_at(i) > cut) {
          s.values[i] = s.valid[i] ? 5.0 - 2.0 * s.values[i] : 1.0;
          s.valid[i] = (i % 7) != 0;
        }
      }
    }
    const FeatureDataset after = build_dataset(perturbed, p.reference, mc, win);

    std::vector<std::size_t> base_rows, after_rows;
    for (std::size_t r = 0; r < base.rows.size() && base.rows[r].end_minute <= cut; ++r) base_rows.push_back(r);
    for (std::size_t r = 0; r < after.rows.size() && after.rows[r].end_minute <= cut; ++r) after_rows.push_back(r);
    if (base_rows.size() != after_rows.size()) {
      ++violations;
      continue;
    }
    Matrix xa(base_rows.size(), base.n_features()), xb(base_rows.size(), base.n_features());
    for (std::size_t r = 0; r < base_rows.size(); ++r) {
      const FeatureRow& a = base.rows[r];
      const FeatureRow& b = after.rows[r];
      bool same = a.end_minute == b.end_minute && a.features.size() == b.features.size();
      for (std::size_t f = 0; same && f < a.features.size(); ++f) {
        same = same_bits(a.features[f], b.features[f]);
        xa(r, f) = a.features[f];
        xb(r, f) = b.features[f];
      }
      if (!same) ++violations;
    }
    const PhasePredictions pa = predict_phase(*model, xa), pb = predict_phase(*model, xb);
    for (std::size_t r = 0; r < base_rows.size(); ++r) {
      if (!same_bits(pa.theta[r], pb.theta[r])) ++violations;
    }
    rows_checked += base_rows.size();
    if (after.rows.size() > base_rows.size() && base.rows.size() > base_rows.size() &&
        after.rows.back().features != base.rows.back().features) {
      ++changed_after;
    }
  }
  return {violations == 0 && rows_checked > 0,
          fmt("50 configurations, %zu rows with end time <= cut compared (features and predictions), %zu "
              "violations; later rows changed in %zu configurations",
              rows_checked, violations, changed_after)};
}

// Criteria 6-9 share one set of cross-validation runs per master seed.

struct SeedRuns {
  std::uint64_t seed = 0;
  std::map<std::string, EvalReport> reports;  // "M5/480", "M5/30", "M1/480", "M3/480"
  FoldPlan plan;
  double seconds_m5_480 = 0.0;
  double seconds_total = 0.0;
};

const std::vector<std::uint64_t> kMasterSeeds{1, 2, 3};

std::string report_bytes(const EvalReport& r) {
  std::ostringstream out;
  write_table4(out, {r});
  write_fig3(out, {r});
  write_fold_summary(out, r);
  write_predictions(out, r);
  return out.str();
}

EvalReport run_experiment(const Cohort& cohort, const FoldPlan& plan, const ExperimentConfig& cfg, Modality m,
                          std::int64_t window) {
  return evaluate_config(cohort, plan, {ModelFamily::RandomForest, m, window}, default_grid(ModelFamily::RandomForest),
                         WindowConfig{window, cfg.stride_minutes, cfg.min_coverage}, cfg.run_seed());
}

SeedRuns run_seed(std::uint64_t seed) {
  SeedRuns out;
  out.seed = seed;
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.synth.seed = seed;
  const auto begin = std::chrono::steady_clock::now();
  std::vector<ParticipantRecording> recs;
  for (auto& p : generate_cohort(cfg.synth)) recs.push_back(p.recording);
  const Cohort cohort = prepare_cohort(recs, cfg.preprocess, cfg.cosinor);
  out.plan = participant_kfold(cohort.ids(), cfg.cv.k, cfg.plan_seed());
  out.reports["M5/480"] = run_experiment(cohort, out.plan, cfg, Modality::M5, 480);
  out.seconds_m5_480 = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  out.reports["M5/30"] = run_experiment(cohort, out.plan, cfg, Modality::M5, 30);
  out.reports["M1/480"] = run_experiment(cohort, out.plan, cfg, Modality::M1, 480);
  out.reports["M3/480"] = run_experiment(cohort, out.plan, cfg, Modality::M3, 480);
  out.seconds_total = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  std::printf("  seed %llu: M5/480 %.3f h, M5/30 %.3f h, M1/480 %.3f h, M3/480 %.3f h (%.0f s)\n",
              static_cast<unsigned long long>(seed), out.reports["M5/480"].mean_cmae_hours,
              out.reports["M5/30"].mean_cmae_hours, out.reports["M1/480"].mean_cmae_hours,
              out.reports["M3/480"].mean_cmae_hours, out.seconds_total);
  std::fflush(stdout);
  return out;
}

Outcome end_to_end(const std::vector<SeedRuns>& runs) {
  bool pass = true;
  std::string detail = "RF, M5, W=480, 5-fold CMAE:";
  for (const SeedRuns& r : runs) {
    const EvalReport& rep = r.reports.at("M5/480");
    pass = pass && rep.mean_cmae_hours <= 2.0;
    detail += fmt(" seed %llu %.3f +/- %.3f h (%.0f s);", static_cast<unsigned long long>(r.seed),
                  rep.mean_cmae_hours, rep.sd_cmae_hours, r.seconds_m5_480);
  }
  detail.pop_back();
  return {pass, detail};
}

Outcome window_trend(const std::vector<SeedRuns>& runs) {
  int wins = 0;
  std::string detail;
  for (const SeedRuns& r : runs) {
    const double long_w = r.reports.at("M5/480").mean_cmae_hours, short_w = r.reports.at("M5/30").mean_cmae_hours;
    wins += long_w < short_w ? 1 : 0;
    detail += fmt(" seed %llu W480 %.3f vs W30 %.3f h;", static_cast<unsigned long long>(r.seed), long_w, short_w);
  }
  detail.pop_back();
  return {wins >= 2, fmt("%d/3 seeds improve:", wins) + detail};
}

Outcome modality_order(const std::vector<SeedRuns>& runs) {
  double m1 = 0, m3 = 0, m5 = 0;
  for (const SeedRuns& r : runs) {
    m1 += r.reports.at("M1/480").mean_cmae_hours;
    m3 += r.reports.at("M3/480").mean_cmae_hours;
    m5 += r.reports.at("M5/480").mean_cmae_hours;
  }
  const double n = static_cast<double>(runs.size());
  m1 /= n;
  m3 /= n;
  m5 /= n;
  bool each = true;
  for (const SeedRuns& r : runs) {
    const double a = r.reports.at("M1/480").mean_cmae_hours, b = r.reports.at("M3/480").mean_cmae_hours,
                 c = r.reports.at("M5/480").mean_cmae_hours;
    each = each && a < b && c <= a + 0.25;
  }
  return {m1 < m3 && m5 <= m1 + 0.25,
          fmt("mean over seeds: M1 %.3f h, M3 %.3f h, M5 %.3f h; holds on every seed: %s", m1, m3, m5,
              each ? "yes" : "no")};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"circphase"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome leakage_and_determinism(const std::vector<SeedRuns>& runs) {
  std::size_t overlaps = 0, misplaced = 0;
  for (const SeedRuns& r : runs) {
    for (std::size_t f = 0; f < r.plan.k; ++f) {
      const auto test = r.plan.test_ids(f);
      const std::set<std::string> test_set(test.begin(), test.end());
      for (const auto& id : r.plan.train_ids(f)) overlaps += test_set.count(id);
    }
    for (const auto& [name, rep] : r.reports) {
      for (const PooledPrediction& p : rep.predictions) misplaced += r.plan.assignments.at(p.participant_id) != p.fold;
    }
  }

  ExperimentConfig cfg;
  cfg.seed = kMasterSeeds.front();
  cfg.synth.seed = cfg.seed;
  std::vector<ParticipantRecording> recs;
  for (auto& p : generate_cohort(cfg.synth)) recs.push_back(p.recording);
  const Cohort cohort = prepare_cohort(recs, cfg.preprocess, cfg.cosinor);
  const FoldPlan plan = participant_kfold(cohort.ids(), cfg.cv.k, cfg.plan_seed());
  const EvalReport again = run_experiment(cohort, plan, cfg, Modality::M5, 480);
  const bool same_report = report_bytes(again) == report_bytes(runs.front().reports.at("M5/480"));

  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "circphase_acceptance";
  fs::remove_all(root);
  std::size_t cli_files = 0, cli_diffs = 0;
  bool cli_ok = true;
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / run);
    std::ofstream(root / run / "config.json") << R"({"version": 1, "seed": 4,
      "synth": {"n_participants": 6, "days": 5}, "output_dir": "out", "windows": [60, 240],
      "modalities": ["M1", "M5"], "models": ["RF", "GBR"],
      "grid": {"RF": [{"n_estimators": 10, "max_depth": 6}, {"n_estimators": 20, "max_depth": 6}],
               "GBR": [{"n_estimators": 20, "max_depth": 2}]},
      "cv": {"k": 3, "inner_k": 2}, "eval": {"window": 240, "modality": "M5", "model": "RF"}})";
    const std::string config = (root / run / "config.json").string();
    for (const char* sub : {"sweep", "ablate", "evaluate", "case-study"}) cli_ok = cli_ok && cli({sub, "--config", config}) == 0;
  }
  for (const auto& entry : fs::directory_iterator(root / "a" / "out" / "reports")) {
    ++cli_files;
    if (slurp(entry.path()) != slurp(root / "b" / "out" / "reports" / entry.path().filename())) ++cli_diffs;
  }
  fs::remove_all(root);

  return {overlaps == 0 && misplaced == 0 && same_report && cli_ok && cli_diffs == 0 && cli_files > 0,
          fmt("%zu CV runs with disjoint folds (%zu overlaps, %zu misplaced predictions); rerun of seed 1 M5/480 "
              "report %s; CLI rerun: %zu report files, %zu differ",
              runs.size() * runs.front().reports.size() + 1, overlaps, misplaced,
              same_report ? "byte-identical" : "DIFFERS", cli_files, cli_diffs)};
}

Outcome utest_validity() {
  std::mt19937_64 gen(31337);
  double worst = 0.0, worst_normal = 0.0;
  std::size_t samples = 0, bad_identical = 0;
  for (std::size_t n1 = 1; n1 <= 7; ++n1) {
    for (std::size_t n2 = 1; n2 <= 7; ++n2) {
      for (int s = 0; s < 100; ++s) {
        std::vector<double> a(n1), b(n2);
        const bool ties = s % 2 == 0;
        std::normal_distribution<double> nd(0, 1);
        for (double& v : a) v = ties ? static_cast<double>(gen() % 4) : nd(gen);
        for (double& v : b) v = ties ? static_cast<double>(gen() % 4) : nd(gen) + 0.3 * static_cast<double>(s % 5);
        const double exact = oracle::exact_u_p_value(a, b);
        worst = std::max(worst, std::fabs(mann_whitney_u(a, b).p_value_two_sided - exact));
        worst_normal = std::max(worst_normal, std::fabs(mann_whitney_u_normal(a, b).p_value_two_sided - exact));
        ++samples;
      }
      std::vector<double> same(std::max(n1, n2));
      for (double& v : same) v = std::floor(std::normal_distribution<double>(0, 2)(gen));
      const std::vector<double> a(same.begin(), same.begin() + static_cast<long>(n1));
      const std::vector<double> b(same.begin(), same.begin() + static_cast<long>(n2));
      if (n1 == n2 && mann_whitney_u(a, b).u_statistic != static_cast<double>(n1 * n2) / 2.0) ++bad_identical;
      const std::vector<double> flat1(n1, 3.0), flat2(n2, 3.0);
      if (mann_whitney_u(flat1, flat2).u_statistic != static_cast<double>(n1 * n2) / 2.0) ++bad_identical;
    }
  }
  return {worst <= 0.05 && bad_identical == 0,
          fmt("%zu samples over n1, n2 <= 7: max |p - enumeration| = %.2e (normal approximation alone: %.3f); "
              "identical-sample U = n1 n2 / 2 failures: %zu",
              samples, worst, worst_normal, bad_identical)};
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    const auto begin = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds);
    std::fflush(stdout);
  };

  report(1, "cosinor exactness", cosinor_exactness);
  report(2, "circular codec", circular_codec);
  report(3, "metric oracle", metric_oracle);
  report(4, "tree oracle", tree_oracle);
  report(5, "causality", causality);

  std::vector<SeedRuns> runs;
  std::string run_error;
  try {
    if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) {
      for (std::uint64_t seed : kMasterSeeds) runs.push_back(run_seed(seed));
    }
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  auto shared = [&](Outcome (*fn)(const std::vector<SeedRuns>&)) {
    return [&, fn]() -> Outcome {
      if (!run_error.empty()) return {false, "cross-validation runs failed: " + run_error};
      return fn(runs);
    };
  };
  report(6, "end-to-end synthetic", shared(end_to_end));
  report(7, "window-length trend", shared(window_trend));
  report(8, "modality ordering", shared(modality_order));
  report(9, "no leakage and determinism", shared(leakage_and_determinism));
  report(10, "U-test validity", utest_validity);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
