#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "circphase/eval.hpp"

namespace circphase {

/// Wide modality table: one row per modality, mean and sd CMAE per model family.
/// Header: modality,description,<family>_cmae_mean_hours,<family>_cmae_sd_hours,...
void write_table3(std::ostream& out, const std::vector<EvalReport>& reports);

/// One row per window length.
/// Header: window_minutes,modality,model,cmae_mean_hours,cmae_sd_hours,within_1h_pct,within_2h_pct
void write_table4(std::ostream& out, const std::vector<EvalReport>& reports);

/// Per-fold CMAE for every report. Header: window_minutes,modality,model,fold,n,cmae_hours,params
void write_fig3(std::ostream& out, const std::vector<EvalReport>& reports);

/// Header: end_time,ref_theta,pred_theta,abs_err_hours,<raw channel>...
void write_case_study(std::ostream& out, const CaseStudyTrace& trace);

/// Header: stratum,n,cmae_hours,within_1h_pct,within_2h_pct,u_statistic,p_value_two_sided,test
void write_day_night(std::ostream& out, const DayNightResult& result);

/// Pooled test predictions. Header: participant_id,fold,end_time,ref_theta,pred_theta,abs_err_hours
void write_predictions(std::ostream& out, const EvalReport& report);

/// Per-fold metrics of one report plus a summary row.
/// Header: fold,n,cmae_hours,xi1,xi2,within_1h_pct,within_2h_pct,params
void write_fold_summary(std::ostream& out, const EvalReport& report);

/// Writes `text` to `path` (creating parent directories) and returns its FNV-1a content hash as 16 hex digits.
std::string write_text_file(const std::filesystem::path& path, const std::string& text);

/// FNV-1a content hash as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace circphase
