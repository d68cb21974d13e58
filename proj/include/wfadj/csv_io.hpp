#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wfadj/data_model.hpp"
#include "wfadj/multinomial.hpp"
#include "wfadj/replication.hpp"
#include "wfadj/survival.hpp"
#include "wfadj/waterfall.hpp"

namespace wfadj::csv {

namespace fs = std::filesystem;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Reads `patient_id,start_day,discontinuation_day` and
/// `patient_id,offset_day,change_pct`. Throws InputError naming the file,
/// line and column of the first problem.
std::vector<PatientCourse> read_cohort(const fs::path& patients, const fs::path& scans);
void write_cohort(std::span<const PatientCourse> cohort, const fs::path& patients,
                  const fs::path& scans);

/// `z,p_event` rows.
std::vector<WeightedObservation> read_observations(const fs::path& path);

std::string interim_csv(const InterimDataset& ds, const CategoryPosterior* posterior);
std::string theta_csv(const CategoryPosterior& posterior);
std::string theta_csv(const CategoryProbabilities& theta);
std::string event_probs_csv(const CategoryPosterior& posterior);
std::string curve_csv(const StepCurve& curve);
/// `fraction_start,fraction_end,value,lower,upper`; fractions are scaled by
/// `patient_count` when it is positive.
std::string waterfall_csv(const WaterfallCurve& wf, int patient_count = 0);
std::string summary_csv(const ReplicationResult& result);

/// Parses waterfall_csv output. Count-scaled files are normalised by their
/// last fraction_end.
WaterfallCurve read_waterfall(const fs::path& path);

void write_file(const fs::path& path, std::string_view content);

}  // namespace wfadj::csv
