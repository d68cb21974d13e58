#include "wfadj/replication.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace wfadj {

std::vector<WeightedObservation> weighted_observations(const InterimDataset& dataset,
                                                       const CategoryPosterior& posterior) {
  std::vector<WeightedObservation> obs;
  obs.reserve(dataset.records.size());
  for (const auto& r : dataset.records) {
    auto it = posterior.event_probs.find(r.patient_id);
    const double p = (r.latent() && it != posterior.event_probs.end()) ? it->second : 1.0;
    obs.push_back({r.z, std::clamp(p, 0.0, 1.0)});
  }
  return obs;
}

Adjustment adjust(InterimDataset dataset, const GibbsConfig& gibbs, double ci_level) {
  Adjustment a;
  a.posterior = gibbs_sample(dataset, gibbs);
  const auto obs = weighted_observations(dataset, a.posterior);
  a.survival = enforce_floor(weighted_km(obs, ci_level));
  a.adjusted = transform_bands(a.survival);
  a.unadjusted = unadjusted_waterfall(dataset);
  a.dataset = std::move(dataset);
  return a;
}

std::vector<PatientCourse> permute_starts(std::span<const PatientCourse> cohort,
                                          std::span<const std::size_t> permutation) {
  if (permutation.size() != cohort.size()) {
    throw std::invalid_argument("permutation size must equal cohort size");
  }
  std::vector<bool> used(cohort.size(), false);
  for (auto j : permutation) {
    if (j >= cohort.size() || used[j]) throw std::invalid_argument("not a permutation");
    used[j] = true;
  }
  std::vector<PatientCourse> out(cohort.begin(), cohort.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Day new_start = cohort[permutation[i]].start_day;
    if (out[i].discontinuation_day) {
      *out[i].discontinuation_day += new_start - out[i].start_day;
    }
    out[i].start_day = new_start;
  }
  return out;
}

std::vector<PatientCourse> shuffle_starts(std::span<const PatientCourse> cohort,
                                          std::uint64_t seed) {
  if (cohort.empty()) throw std::invalid_argument("shuffle_starts: empty cohort");
  std::vector<std::size_t> perm(cohort.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  boost::random::mt19937_64 rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return permute_starts(cohort, perm);
}

WaterfallCurve ground_truth_curve(std::span<const PatientCourse> cohort,
                                  std::span<const std::string> patient_subset) {
  if (patient_subset.empty()) throw std::invalid_argument("ground_truth_curve: empty subset");
  std::map<std::string, const PatientCourse*> by_id;
  for (const auto& pc : cohort) by_id[pc.patient_id] = &pc;

  std::vector<std::pair<std::string, double>> bars;
  for (const auto& id : patient_subset) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::invalid_argument("ground_truth_curve: unknown patient " + id);
    const auto& pc = *it->second;
    if (!pc.discontinuation_day) {
      throw std::invalid_argument("ground_truth_curve: patient " + id +
                                  " lacks complete follow-up");
    }
    if (pc.scans.empty()) {
      throw std::invalid_argument("ground_truth_curve: patient " + id + " has no scans");
    }
    const auto changes = pc.changes();
    bars.emplace_back(id, 0.0 - best_change(changes).z);
  }
  std::sort(bars.begin(), bars.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return sorted_waterfall(std::move(bars));
}

WaterfallCurve ground_truth_curve(std::span<const PatientCourse> cohort) {
  std::vector<std::string> ids;
  for (const auto& pc : cohort) ids.push_back(pc.patient_id);
  return ground_truth_curve(cohort, ids);
}

void ReplicationConfig::validate() const {
  if (n_replicates < 1) throw std::invalid_argument("n_replicates must be at least 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("ci_level must lie in (0, 1)");
}

std::vector<std::uint64_t> ReplicationResult::skipped_seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& r : replicates) {
    if (r.skipped) out.push_back(r.seed);
  }
  return out;
}

std::pair<double, double> ReplicationResult::mean_deviation(double lo, double hi) const {
  double adj = 0.0, unadj = 0.0;
  int n = 0;
  for (const auto& row : summary) {
    if (row.fraction < lo - 1e-12 || row.fraction > hi + 1e-12 || row.n_effective == 0) continue;
    adj += row.mean_adj_dev;
    unadj += row.mean_unadj_dev;
    ++n;
  }
  if (n == 0) return {0.0, 0.0};
  return {adj / n, unadj / n};
}

namespace {

ReplicateOutcome run_one(std::span<const PatientCourse> cohort, const ReplicationConfig& config,
                         const WaterfallCurve& truth_all, int index) {
  ReplicateOutcome out;
  out.index = index;
  out.seed = config.base_seed + static_cast<std::uint64_t>(index);
  const auto shuffled = shuffle_starts(cohort, out.seed);

  InterimDataset ds;
  try {
    ds = apply_cut(shuffled, config.cut_day, CutOptions{config.filter_enabled});
  } catch (const NoEvaluablePatients&) {
    out.skipped = true;
    return out;
  }
  out.n_patients = static_cast<int>(ds.records.size());
  for (const auto& r : ds.records) out.n_ongoing += r.ongoing ? 1 : 0;

  if (config.truth == TruthSubset::EnrolledAtCut) {
    std::vector<std::string> ids;
    for (const auto& r : ds.records) ids.push_back(r.patient_id);
    out.truth = ground_truth_curve(shuffled, ids);
  } else {
    out.truth = truth_all;
  }

  auto gibbs = config.gibbs;
  gibbs.seed = out.seed;
  auto a = adjust(std::move(ds), gibbs, config.ci_level);
  out.adjusted = std::move(a.adjusted);
  out.unadjusted = std::move(a.unadjusted);
  return out;
}

}  // namespace

ReplicationResult run_replications(std::span<const PatientCourse> cohort,
                                   const ReplicationConfig& config) {
  config.validate();
  ReplicationResult result;
  result.truth_all = ground_truth_curve(cohort);
  result.replicates.resize(static_cast<std::size_t>(config.n_replicates));

  unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1U, static_cast<unsigned>(config.n_replicates));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < config.n_replicates; i = next++) {
      try {
        result.replicates[i] = run_one(cohort, config, result.truth_all, i + 1);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  // Reduction in replicate order.
  for (int g = 0; g <= 100; ++g) {
    DeviationRow row;
    row.fraction = g / 100.0;
    for (const auto& r : result.replicates) {
      if (r.skipped) continue;
      row.mean_adj_dev += r.adjusted.value_at(row.fraction) - r.truth.value_at(row.fraction);
      row.mean_unadj_dev += r.unadjusted.value_at(row.fraction) - r.truth.value_at(row.fraction);
      ++row.n_effective;
    }
    if (row.n_effective > 0) {
      row.mean_adj_dev /= row.n_effective;
      row.mean_unadj_dev /= row.n_effective;
    }
    result.summary.push_back(row);
  }
  return result;
}

std::vector<double> geometric_trajectory(double depth, double decay, int n) {
  std::vector<double> out;
  double remaining = 1.0;
  for (int j = 1; j <= n; ++j) {
    remaining *= decay;
    out.push_back(depth * (1.0 - remaining));
  }
  return out;
}

std::vector<PatientCourse> synthesize_cohort(const SynthesisConfig& config) {
  if (config.n_patients < 1) throw std::invalid_argument("n_patients must be at least 1");
  if (!(config.improvement_decay > 0.0 && config.improvement_decay < 1.0)) {
    throw std::invalid_argument("improvement_decay must lie in (0, 1)");
  }
  if (config.scan_interval_days < 1) throw std::invalid_argument("scan interval must be positive");
  if (config.max_scans < 1) throw std::invalid_argument("max_scans must be at least 1");
  if (config.accrual_days < 0) throw std::invalid_argument("accrual_days must be non-negative");

  boost::random::mt19937_64 rng(config.seed);
  boost::random::uniform_01<double> unif;
  boost::random::normal_distribution<double> noise(0.0, std::max(config.noise_sd, 0.0));
  boost::random::normal_distribution<double> depth_law(config.depth_mean, config.depth_sd);
  boost::random::uniform_int_distribution<Day> start_law(0, config.accrual_days);
  boost::random::uniform_int_distribution<int> after_law(1, 3);
  boost::random::uniform_int_distribution<Day> jitter_law(-3, 3);
  boost::random::uniform_int_distribution<Day> stop_law(1, 21);
  boost::random::uniform_real_distribution<double> growth_law(1.0, 12.0);

  std::vector<PatientCourse> cohort;
  for (int i = 1; i <= config.n_patients; ++i) {
    PatientCourse pc;
    char id[16];
    std::snprintf(id, sizeof id, "P%04d", i);
    pc.patient_id = id;
    pc.start_day = start_law(rng);

    const double depth = std::clamp(depth_law(rng), -100.0, 60.0);
    const double sd = config.noise_sd;
    auto jitter = [&](double x) { return sd > 0.0 ? x + noise(rng) : x; };

    std::vector<double> values;
    if (depth <= 0.0) {
      int best = 1;
      while (best < config.max_scans && unif(rng) < config.improvement_decay) ++best;
      const auto path = geometric_trajectory(depth, config.improvement_decay, best);
      for (double x : path) {
        x = jitter(x);
        if (!values.empty()) x = std::min(x, values.back() - 0.5);
        values.push_back(std::max(x, -100.0));
      }
      const int after = after_law(rng);
      for (int k = 0; k < after; ++k) values.push_back(values.back() + growth_law(rng));
    } else {
      const int n = 1 + after_law(rng);
      for (double x : geometric_trajectory(depth, config.improvement_decay, n)) {
        x = jitter(x);
        if (!values.empty()) x = std::max(x, values.back() + 0.5);
        values.push_back(std::max(x, -100.0));
      }
    }

    Day offset = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      Day next = static_cast<Day>(j + 1) * config.scan_interval_days;
      if (config.scan_interval_days > 6) next += jitter_law(rng);
      offset = std::max(next, offset + 1);
      // Keep six decimals so the cohort survives a CSV round trip unchanged.
      const double v = std::round(values[j] * 1e6) / 1e6;
      pc.scans.push_back({offset, std::max(v, -100.0)});
    }
    pc.discontinuation_day = pc.start_day + offset + stop_law(rng);
    cohort.push_back(std::move(pc));
  }
  return cohort;
}

}  // namespace wfadj
