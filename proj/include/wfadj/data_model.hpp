#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfadj {

using Day = std::int64_t;

/// Malformed or physically impossible input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The data cut left nobody with an observed scan.
class NoEvaluablePatients : public std::runtime_error {
 public:
  NoEvaluablePatients() : std::runtime_error("no evaluable patients at the data cut") {}
};

struct Scan {
  Day offset_day = 0;       // days since treatment start, > 0
  double change_pct = 0.0;  // tumor size change from baseline, >= -100
};

/// Full longitudinal record of one patient.
struct PatientCourse {
  std::string patient_id;
  Day start_day = 0;
  std::vector<Scan> scans;
  std::optional<Day> discontinuation_day;

  /// Throws InputError when the record violates the ingestion rules.
  void validate() const;
  std::vector<double> changes() const;
};

/// One patient's view at an interim look.
///
/// `z` is the negated current best change and `u` the 1-based scan index
/// where it first occurred. `candidate_set` holds the sorted categories the
/// final best scan may fall into; it is the singleton {min(u, K)} unless the
/// patient is ongoing and passes the filter (or the filter is disabled).
/// `filter_pass` always records the filter outcome.
struct InterimRecord {
  std::string patient_id;
  std::vector<double> observed_changes;
  double z = 0.0;
  int u = 1;
  bool ongoing = false;
  bool filter_pass = false;
  std::vector<int> candidate_set;

  int n_observed() const { return static_cast<int>(observed_changes.size()); }
  /// Category of the current best scan once K is fixed.
  int u_category() const { return candidate_set.empty() ? u : candidate_set.front(); }
  /// True when the patient may still improve (more than one candidate).
  bool latent() const { return candidate_set.size() > 1; }
};

struct InterimDataset {
  Day cut_day = 0;
  std::vector<InterimRecord> records;  // sorted by patient_id
  int K = 1;
};

struct CutOptions {
  /// When false every ongoing patient is treated as able to improve.
  bool filter_enabled = true;
};

struct BestChange {
  double z = 0.0;
  int u = 1;
};

/// Negated minimum and the earliest 1-based index attaining it.
BestChange best_change(std::span<const double> observed_changes);

/// Ongoing-patient filter: fails when the last two scans are equal or any
/// scan is strictly larger than the one before it.
bool filter_pass(std::span<const double> observed_changes);

/// Candidate final-best categories for a record given K. With `use_filter`
/// false an ongoing patient stays open even when `filter_pass` is false.
std::vector<int> candidate_scans(const InterimRecord& record, int n_observed, int K,
                                 bool use_filter = true);

/// Builds the interim view of `cohort` at `cut_day`.
///
/// Keeps patients with start_day <= cut_day and at least one scan on or
/// before the cut. Throws InputError on duplicate ids or invalid courses and
/// NoEvaluablePatients when nobody remains.
InterimDataset apply_cut(std::span<const PatientCourse> cohort, Day cut_day,
                         const CutOptions& options = {});

}  // namespace wfadj
