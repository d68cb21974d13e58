#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wfadj/data_model.hpp"
#include "wfadj/multinomial.hpp"
#include "wfadj/survival.hpp"
#include "wfadj/waterfall.hpp"

namespace wfadj {

/// Result of the full adjustment on one interim dataset.
struct Adjustment {
  InterimDataset dataset;
  CategoryPosterior posterior;
  StepCurve survival;          // weighted KM with bands, floored
  WaterfallCurve adjusted;     // transform_bands(survival)
  WaterfallCurve unadjusted;   // sorted current best changes
};

/// Gibbs estimate, weighted KM with bands, floor and waterfall transforms.
Adjustment adjust(InterimDataset dataset, const GibbsConfig& gibbs, double ci_level = 0.95);

/// Event/censoring weights for each record from posterior event probabilities.
std::vector<WeightedObservation> weighted_observations(const InterimDataset& dataset,
                                                       const CategoryPosterior& posterior);

/// Reassigns start days: patient i receives the start day of patient
/// permutation[i]. Discontinuation keeps its offset from the start.
std::vector<PatientCourse> permute_starts(std::span<const PatientCourse> cohort,
                                          std::span<const std::size_t> permutation);

/// Uniformly random permutation of start days (Fisher-Yates on a seeded
/// 64-bit Mersenne twister).
std::vector<PatientCourse> shuffle_starts(std::span<const PatientCourse> cohort,
                                          std::uint64_t seed);

/// Conventional waterfall of final best change over all scans of the selected
/// patients. Throws std::invalid_argument on an empty subset, an unknown id or
/// a patient without a discontinuation day.
WaterfallCurve ground_truth_curve(std::span<const PatientCourse> cohort,
                                  std::span<const std::string> patient_subset);
/// Ground truth over the whole cohort.
WaterfallCurve ground_truth_curve(std::span<const PatientCourse> cohort);

enum class TruthSubset { AllPatients, EnrolledAtCut };

struct ReplicationConfig {
  int n_replicates = 100;
  std::uint64_t base_seed = 1;
  Day cut_day = 0;
  GibbsConfig gibbs;
  bool filter_enabled = true;
  double ci_level = 0.95;
  TruthSubset truth = TruthSubset::AllPatients;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct ReplicateOutcome {
  int index = 0;  // 1-based
  std::uint64_t seed = 0;
  bool skipped = false;
  int n_patients = 0;
  int n_ongoing = 0;
  WaterfallCurve adjusted;
  WaterfallCurve unadjusted;
  WaterfallCurve truth;
};

struct DeviationRow {
  double fraction = 0.0;
  double mean_adj_dev = 0.0;
  double mean_unadj_dev = 0.0;
  int n_effective = 0;
};

struct ReplicationResult {
  std::vector<ReplicateOutcome> replicates;
  std::vector<DeviationRow> summary;  // 101-point fraction grid
  WaterfallCurve truth_all;

  std::vector<std::uint64_t> skipped_seeds() const;
  /// Mean of the summary deviations over grid fractions in [lo, hi].
  std::pair<double, double> mean_deviation(double lo, double hi) const;
};

/// Shuffles starts with seed base_seed + r for r = 1..n, re-cuts and runs the
/// adjusted and unadjusted pipelines on each replicate.
ReplicationResult run_replications(std::span<const PatientCourse> cohort,
                                   const ReplicationConfig& config);

struct SynthesisConfig {
  int n_patients = 40;
  Day scan_interval_days = 42;
  int max_scans = 8;
  double improvement_decay = 0.6;
  std::uint64_t seed = 1;
  Day accrual_days = 360;
  double noise_sd = 1.0;
  /// Final depth ~ Normal(mean, sd), clamped into [-100, 60].
  double depth_mean = -70.0;
  double depth_sd = 35.0;
};

/// Synthetic complete-follow-up cohort.
///
/// Each patient draws a final depth d and a best-scan index b from a
/// geometric law with success probability 1 - decay (truncated at
/// max_scans). Scans 1..b follow d * (1 - decay^j) plus noise, kept strictly
/// improving; one to three worse scans follow and the patient discontinues
/// after the last of them. Growing tumors (d > 0) are best at scan 1.
std::vector<PatientCourse> synthesize_cohort(const SynthesisConfig& config);

/// Noise-free improvement phase: d * (1 - decay^j) for j = 1..n.
std::vector<double> geometric_trajectory(double depth, double decay, int n);

}  // namespace wfadj
