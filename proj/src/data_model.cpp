#include "wfadj/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace wfadj {

void PatientCourse::validate() const {
  if (patient_id.empty()) throw InputError("patient_id must not be empty");
  Day prev = 0;
  for (const auto& s : scans) {
    if (s.offset_day <= prev) {
      throw InputError("patient " + patient_id +
                       ": scan offsets must be positive and strictly increasing");
    }
    if (!std::isfinite(s.change_pct) || s.change_pct < -100.0) {
      throw InputError("patient " + patient_id + ": change_pct must be finite and >= -100");
    }
    prev = s.offset_day;
  }
  if (discontinuation_day && !scans.empty() &&
      *discontinuation_day < start_day + scans.back().offset_day) {
    throw InputError("patient " + patient_id + ": discontinuation precedes the last scan");
  }
}

std::vector<double> PatientCourse::changes() const {
  std::vector<double> out;
  out.reserve(scans.size());
  for (const auto& s : scans) out.push_back(s.change_pct);
  return out;
}

BestChange best_change(std::span<const double> observed_changes) {
  if (observed_changes.empty()) throw std::invalid_argument("best_change: no observed scans");
  // min_element returns the first minimum, which is the earliest-scan rule.
  auto it = std::min_element(observed_changes.begin(), observed_changes.end());
  return {-*it, static_cast<int>(it - observed_changes.begin()) + 1};
}

bool filter_pass(std::span<const double> observed_changes) {
  const auto n = observed_changes.size();
  if (n >= 2 && observed_changes[n - 1] == observed_changes[n - 2]) return false;
  for (std::size_t i = 1; i < n; ++i) {
    if (observed_changes[i] > observed_changes[i - 1]) return false;
  }
  return true;
}

std::vector<int> candidate_scans(const InterimRecord& record, int n_observed, int K,
                                 bool use_filter) {
  if (K < 1) throw std::invalid_argument("candidate_scans: K must be positive");
  const int u = std::min(record.u, K);
  std::vector<int> out{u};
  if (record.ongoing && (record.filter_pass || !use_filter)) {
    for (int k = std::min(n_observed + 1, K); k <= K; ++k) {
      if (k != u) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
  }
  return out;
}

InterimDataset apply_cut(std::span<const PatientCourse> cohort, Day cut_day,
                         const CutOptions& options) {
  std::set<std::string> seen;
  InterimDataset ds;
  ds.cut_day = cut_day;

  for (const auto& pc : cohort) {
    pc.validate();
    if (!seen.insert(pc.patient_id).second) {
      throw InputError("duplicate patient_id: " + pc.patient_id);
    }
    if (pc.start_day > cut_day) continue;

    InterimRecord rec;
    rec.patient_id = pc.patient_id;
    for (const auto& s : pc.scans) {
      if (pc.start_day + s.offset_day > cut_day) break;
      rec.observed_changes.push_back(s.change_pct);
    }
    if (rec.observed_changes.empty()) continue;

    const auto best = best_change(rec.observed_changes);
    rec.z = best.z;
    rec.u = best.u;
    rec.ongoing = !pc.discontinuation_day || *pc.discontinuation_day > cut_day;
    rec.filter_pass = filter_pass(rec.observed_changes);
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw NoEvaluablePatients();

  std::sort(ds.records.begin(), ds.records.end(),
            [](const auto& a, const auto& b) { return a.patient_id < b.patient_id; });

  int j_latent = 0;
  int u_max = 0;
  for (const auto& r : ds.records) {
    u_max = std::max(u_max, r.u);
    if (r.ongoing && (r.filter_pass || !options.filter_enabled)) j_latent = std::max(j_latent, r.u);
  }
  ds.K = j_latent > 0 ? j_latent + 1 : u_max;

  for (auto& r : ds.records) r.candidate_set = candidate_scans(r, r.n_observed(), ds.K, options.filter_enabled);
  return ds;
}

}  // namespace wfadj
