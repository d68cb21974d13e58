#include "wfadj/waterfall.hpp"

#include <algorithm>
#include <stdexcept>

namespace wfadj {
namespace {

// Segment covering the fractions just left of 1 - tail.
const WaterfallSegment& segment_by_tail(const WaterfallCurve& wf, double tail) {
  for (const auto& s : wf.segments) {
    if (s.tail_mass <= tail) return s;
  }
  return wf.segments.back();
}

StepCurve band_curve(const StepCurve& curve, bool upper) {
  StepCurve out;
  double running = 1.0;
  for (std::size_t i = 0; i < curve.breakpoints.size(); ++i) {
    const auto& b = (*curve.bands)[i];
    running = std::min(running, upper ? b.upper : b.lower);
    out.breakpoints.push_back({curve.breakpoints[i].z, running});
  }
  return enforce_floor(std::move(out));
}

}  // namespace

const WaterfallSegment& WaterfallCurve::segment_at(double fraction) const {
  if (segments.empty()) throw std::logic_error("empty waterfall curve");
  return segment_by_tail(*this, 1.0 - fraction);
}

double WaterfallCurve::value_at(double fraction) const { return segment_at(fraction).value; }

WaterfallCurve survival_to_waterfall(const StepCurve& curve) {
  if (curve.breakpoints.empty() || curve.terminal_value() != 0.0) {
    throw std::invalid_argument(
        "survival_to_waterfall: curve must end at 0; apply enforce_floor first");
  }
  WaterfallCurve wf;
  double previous = 1.0;
  for (const auto& b : curve.breakpoints) {
    if (b.value > previous) {
      throw std::invalid_argument("survival_to_waterfall: curve is not non-increasing");
    }
    if (b.value < previous) {
      const double v = 0.0 - b.z;
      wf.segments.push_back({b.value, v, v, v});
      previous = b.value;
    }
  }
  return wf;
}

StepCurve waterfall_to_survival(const WaterfallCurve& wf) {
  StepCurve curve;
  for (std::size_t i = 0; i < wf.segments.size(); ++i) {
    const auto& s = wf.segments[i];
    if (i > 0 && s.value > wf.segments[i - 1].value) {
      throw std::invalid_argument("waterfall_to_survival: values must be non-increasing");
    }
    const double z = 0.0 - s.value;
    if (!curve.breakpoints.empty() && curve.breakpoints.back().z == z) {
      curve.breakpoints.back().value = s.tail_mass;
    } else {
      curve.breakpoints.push_back({z, s.tail_mass});
    }
  }
  return curve;
}

WaterfallCurve sorted_waterfall(std::vector<std::pair<std::string, double>> bars) {
  if (bars.empty()) throw std::invalid_argument("waterfall needs at least one bar");
  std::stable_sort(bars.begin(), bars.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  WaterfallCurve wf;
  const auto n = bars.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double tail = static_cast<double>(n - i - 1) / static_cast<double>(n);
    const double v = bars[i].second;
    wf.segments.push_back({tail, v, v, v});
  }
  return wf;
}

WaterfallCurve unadjusted_waterfall(const InterimDataset& dataset) {
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& r : dataset.records) bars.emplace_back(r.patient_id, 0.0 - r.z);
  std::sort(bars.begin(), bars.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return sorted_waterfall(std::move(bars));
}

WaterfallCurve transform_bands(const StepCurve& curve) {
  if (!curve.bands || curve.bands->size() != curve.breakpoints.size()) {
    throw std::invalid_argument("transform_bands: curve carries no bands");
  }
  const auto point = survival_to_waterfall(enforce_floor(curve));
  const auto low = survival_to_waterfall(band_curve(curve, true));
  const auto high = survival_to_waterfall(band_curve(curve, false));

  std::vector<double> tails;
  for (const auto* wf : {&point, &low, &high}) {
    for (const auto& s : wf->segments) tails.push_back(s.tail_mass);
  }
  std::sort(tails.begin(), tails.end(), std::greater<>());
  tails.erase(std::unique(tails.begin(), tails.end()), tails.end());

  WaterfallCurve out;
  out.has_bands = true;
  for (double t : tails) {
    out.segments.push_back({t, segment_by_tail(point, t).value, segment_by_tail(low, t).value,
                            segment_by_tail(high, t).value});
  }
  return out;
}

}  // namespace wfadj
