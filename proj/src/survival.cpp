#include "wfadj/survival.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace wfadj {
namespace {

std::vector<WeightedObservation> sorted_checked(std::span<const WeightedObservation> obs) {
  if (obs.empty()) throw std::invalid_argument("weighted_km: no observations");
  std::vector<WeightedObservation> out(obs.begin(), obs.end());
  for (const auto& o : out) {
    if (!std::isfinite(o.z)) throw std::invalid_argument("weighted_km: z must be finite");
    if (!(o.p_event >= 0.0 && o.p_event <= 1.0)) {
      throw std::invalid_argument("weighted_km: p_event must lie in [0, 1]");
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.z < b.z; });
  return out;
}

std::vector<double> distinct_z(const std::vector<WeightedObservation>& sorted) {
  std::vector<double> zs;
  for (const auto& o : sorted) {
    if (zs.empty() || zs.back() != o.z) zs.push_back(o.z);
  }
  return zs;
}

}  // namespace

double StepCurve::operator()(double z) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), z,
                             [](double v, const Breakpoint& b) { return v < b.z; });
  return it == breakpoints.begin() ? 1.0 : std::prev(it)->value;
}

KmTable weighted_km_table(std::span<const WeightedObservation> observations) {
  const auto sorted = sorted_checked(observations);
  KmTable table;
  double survival = 1.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    KmStep step;
    step.z = sorted[i].z;
    step.at_risk = static_cast<double>(sorted.size() - i);
    for (; i < sorted.size() && sorted[i].z == step.z; ++i) step.events += sorted[i].p_event;
    survival *= 1.0 - step.events / step.at_risk;
    step.survival = survival;
    table.push_back(step);
  }
  return table;
}

StepCurve weighted_km(std::span<const WeightedObservation> observations) {
  StepCurve curve;
  for (const auto& s : weighted_km_table(observations)) {
    curve.breakpoints.push_back({s.z, s.survival});
  }
  return curve;
}

StepCurve weighted_km(std::span<const WeightedObservation> observations, double level) {
  const auto table = weighted_km_table(observations);
  StepCurve curve;
  for (const auto& s : table) curve.breakpoints.push_back({s.z, s.survival});
  curve.bands = greenwood_bands(table, level);
  return curve;
}

std::vector<Band> greenwood_bands(const KmTable& table, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  const double zq =
      boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);

  std::vector<Band> bands;
  bands.reserve(table.size());
  double var = 0.0;
  bool degenerate = false;
  for (const auto& s : table) {
    if (s.events > 0.0) {
      const double remaining = s.at_risk - s.events;
      if (remaining <= 0.0) {
        degenerate = true;
      } else {
        var += s.events / (s.at_risk * remaining);
      }
    }
    if (degenerate || !(s.survival > 0.0)) {
      bands.push_back({0.0, 1.0});
      continue;
    }
    const double se = std::sqrt(var);
    bands.push_back({std::clamp(s.survival * std::exp(-zq * se), 0.0, 1.0),
                     std::clamp(s.survival * std::exp(zq * se), 0.0, 1.0)});
  }
  return bands;
}

StepCurve scenario_average_oracle(std::span<const WeightedObservation> observations,
                                  int max_fractional) {
  const auto sorted = sorted_checked(observations);
  const auto zs = distinct_z(sorted);

  std::vector<std::size_t> fractional;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].p_event > 0.0 && sorted[i].p_event < 1.0) fractional.push_back(i);
  }
  if (static_cast<int>(fractional.size()) > max_fractional) {
    throw std::invalid_argument("scenario_average_oracle: too many fractional observations (" +
                                std::to_string(fractional.size()) + ")");
  }

  std::vector<double> average(zs.size(), 0.0);
  std::vector<bool> is_event(sorted.size());
  const std::size_t n_scenarios = std::size_t{1} << fractional.size();
  for (std::size_t mask = 0; mask < n_scenarios; ++mask) {
    double prob = 1.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) is_event[i] = sorted[i].p_event >= 1.0;
    for (std::size_t j = 0; j < fractional.size(); ++j) {
      const auto& o = sorted[fractional[j]];
      const bool event = (mask >> j) & 1U;
      is_event[fractional[j]] = event;
      prob *= event ? o.p_event : 1.0 - o.p_event;
    }

    // Conventional product-limit curve for this scenario.
    double survival = 1.0;
    std::size_t i = 0;
    for (std::size_t d = 0; d < zs.size(); ++d) {
      const double at_risk = static_cast<double>(sorted.size() - i);
      int deaths = 0;
      for (; i < sorted.size() && sorted[i].z == zs[d]; ++i) deaths += is_event[i] ? 1 : 0;
      survival *= 1.0 - deaths / at_risk;
      average[d] += prob * survival;
    }
  }

  StepCurve curve;
  for (std::size_t d = 0; d < zs.size(); ++d) curve.breakpoints.push_back({zs[d], average[d]});
  return curve;
}

StepCurve enforce_floor(StepCurve curve) {
  if (curve.terminal_value() <= 0.0) return curve;
  if (!curve.breakpoints.empty() && curve.breakpoints.back().z >= kFloorZ) {
    curve.breakpoints.back().value = 0.0;
    if (curve.bands) curve.bands->back() = {0.0, 0.0};
    return curve;
  }
  curve.breakpoints.push_back({kFloorZ, 0.0});
  if (curve.bands) curve.bands->push_back({0.0, 0.0});
  return curve;
}

}  // namespace wfadj
