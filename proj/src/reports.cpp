#include "circphase/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "circphase/error.hpp"
#include "circphase/rng.hpp"
#include "circphase/timeutil.hpp"

namespace circphase {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string pct(double fraction) { return num(100.0 * fraction); }

std::string params_cell(const HyperParams& hp) { return hp.describe(); }

}  // namespace

void write_table3(std::ostream& out, const std::vector<EvalReport>& reports) {
  std::vector<ModelFamily> families;
  std::vector<Modality> modalities;
  std::map<std::pair<Modality, ModelFamily>, const EvalReport*> cell;
  for (const auto& r : reports) {
    if (std::find(families.begin(), families.end(), r.key.family) == families.end()) families.push_back(r.key.family);
    if (std::find(modalities.begin(), modalities.end(), r.key.modality) == modalities.end()) {
      modalities.push_back(r.key.modality);
    }
    cell[{r.key.modality, r.key.family}] = &r;
  }
  out << "modality,description";
  for (ModelFamily f : families) out << ',' << short_name(f) << "_cmae_mean_hours," << short_name(f) << "_cmae_sd_hours";
  out << '\n';
  for (Modality m : modalities) {
    out << to_string(m) << ',' << modality_description(m);
    for (ModelFamily f : families) {
      const auto it = cell.find({m, f});
      if (it == cell.end()) {
        out << ",,";
      } else {
        out << ',' << num(it->second->mean_cmae_hours) << ',' << num(it->second->sd_cmae_hours);
      }
    }
    out << '\n';
  }
}

void write_table4(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "window_minutes,modality,model,cmae_mean_hours,cmae_sd_hours,within_1h_pct,within_2h_pct\n";
  for (const auto& r : reports) {
    out << r.key.window_minutes << ',' << to_string(r.key.modality) << ',' << short_name(r.key.family) << ','
        << num(r.mean_cmae_hours) << ',' << num(r.sd_cmae_hours) << ',' << pct(r.pooled_within_1h) << ','
        << pct(r.pooled_within_2h) << '\n';
  }
}

void write_fig3(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "window_minutes,modality,model,fold,n,cmae_hours,params\n";
  for (const auto& r : reports) {
    for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
      out << r.key.window_minutes << ',' << to_string(r.key.modality) << ',' << short_name(r.key.family) << ',' << f
          << ',' << r.per_fold[f].n << ',' << num(r.per_fold[f].cmae_hours) << ',' << params_cell(r.chosen[f]) << '\n';
    }
  }
}

void write_case_study(std::ostream& out, const CaseStudyTrace& trace) {
  out << "end_time,ref_theta,pred_theta,abs_err_hours";
  for (ChannelId c : trace.channels) out << ',' << to_string(c);
  out << '\n';
  for (const auto& row : trace.rows) {
    out << format_utc_minute(row.end_minute) << ',' << num(row.ref_theta) << ',' << num(row.pred_theta) << ','
        << num(row.abs_err_hours);
    for (double v : row.raw_values) out << ',' << num(v);
    out << '\n';
  }
}

void write_day_night(std::ostream& out, const DayNightResult& result) {
  out << "stratum,n,cmae_hours,within_1h_pct,within_2h_pct,u_statistic,p_value_two_sided,test\n";
  const char* method = result.test.exact ? "exact" : "normal";
  for (const auto& [name, m] : {std::pair<const char*, const MetricsReport*>{"day", &result.day}, {"night", &result.night}}) {
    out << name << ',' << m->n << ',' << num(m->cmae_hours) << ',' << pct(m->within_1h) << ',' << pct(m->within_2h)
        << ',' << num(result.test.u_statistic) << ',' << num(result.test.p_value_two_sided) << ',' << method << '\n';
  }
}

void write_predictions(std::ostream& out, const EvalReport& report) {
  out << "participant_id,fold,end_time,ref_theta,pred_theta,abs_err_hours\n";
  for (const auto& p : report.predictions) {
    out << p.participant_id << ',' << p.fold << ',' << format_utc_minute(p.end_minute) << ',' << num(p.ref_theta) << ','
        << num(p.pred_theta) << ',' << num(wrapped_abs_error_hours(p.pred_theta, p.ref_theta)) << '\n';
  }
}

void write_fold_summary(std::ostream& out, const EvalReport& report) {
  out << "fold,n,cmae_hours,xi1,xi2,within_1h_pct,within_2h_pct,params\n";
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
    const MetricsReport& m = report.per_fold[f];
    out << f << ',' << m.n << ',' << num(m.cmae_hours) << ',' << num(m.xi.at(1)) << ',' << num(m.xi.at(2)) << ','
        << pct(m.within_1h) << ',' << pct(m.within_2h) << ',' << params_cell(report.chosen[f]) << '\n';
  }
  out << "mean," << report.predictions.size() << ',' << num(report.mean_cmae_hours) << ",,," << pct(report.pooled_within_1h)
      << ',' << pct(report.pooled_within_2h) << ",sd=" << num(report.sd_cmae_hours) << '\n';
}

std::string content_hash(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
  return content_hash(text);
}

}  // namespace circphase
