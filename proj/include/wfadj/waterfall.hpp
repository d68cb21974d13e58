#pragma once

#include <string>
#include <vector>

#include "wfadj/data_model.hpp"
#include "wfadj/survival.hpp"

namespace wfadj {

/// One bar (or run of bars) of a waterfall curve.
///
/// `tail_mass` is the fraction of patients to the right of the segment, so
/// the segment covers fractions (1 - previous tail_mass, 1 - tail_mass].
/// Keeping the complement instead of the cumulative fraction lets the
/// survival levels round-trip bit-exactly.
struct WaterfallSegment {
  double tail_mass = 0.0;
  double value = 0.0;  // percent change, BTSC scale
  double lower = 0.0;
  double upper = 0.0;

  double fraction_end() const { return 1.0 - tail_mass; }
};

struct WaterfallCurve {
  std::vector<WaterfallSegment> segments;
  bool has_bands = false;

  double fraction_start(std::size_t i) const {
    return i == 0 ? 0.0 : segments[i - 1].fraction_end();
  }
  double width(std::size_t i) const {
    return (i == 0 ? 1.0 : segments[i - 1].tail_mass) - segments[i].tail_mass;
  }
  /// W(f), left-continuous in f; f <= 0 maps to the first segment.
  double value_at(double fraction) const;
  const WaterfallSegment& segment_at(double fraction) const;
};

/// Rotated/reversed survival curve: each survival jump of size s at z
/// becomes a segment of width s at value -z. Breakpoints without a drop
/// produce no segment. Throws std::invalid_argument unless the curve ends
/// at 0. Ignores bands.
WaterfallCurve survival_to_waterfall(const StepCurve& curve);

/// Exact inverse of survival_to_waterfall. Adjacent segments with equal
/// values merge into one jump. Throws std::invalid_argument when values
/// increase left to right.
StepCurve waterfall_to_survival(const WaterfallCurve& wf);

/// Sorted bars of current best change, width 1/n each, ties ordered by
/// patient_id.
WaterfallCurve unadjusted_waterfall(const InterimDataset& dataset);

/// Conventional waterfall of arbitrary best-change values (ties in input order).
WaterfallCurve sorted_waterfall(std::vector<std::pair<std::string, double>> bars);

/// Waterfall of a banded survival curve. Each band is floored at z = 100,
/// reduced to its running minimum and inverted like the point curve; the
/// upper survival band gives the lower waterfall band. The point curve and
/// both bands are laid on the union of their fraction breakpoints.
WaterfallCurve transform_bands(const StepCurve& curve);

}  // namespace wfadj
