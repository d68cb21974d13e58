#pragma once

#include <string>
#include <vector>

#include "wfadj/waterfall.hpp"

namespace wfadj {

enum class SeriesStyle { Normal, Faint, Emphasized };

struct PlotSeries {
  WaterfallCurve curve;
  std::string label;  // empty -> "curve-<n>"
  SeriesStyle style = SeriesStyle::Normal;
};

struct PlotOptions {
  std::string title;
  /// When positive the x-axis is labelled in patients (fraction * count).
  int patient_count = 0;
};

/// Deterministic 800x500 SVG 1.1 document with one step path per series,
/// translucent band regions and reference lines at +20, 0 and -30 percent.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options = {});

}  // namespace wfadj
