#include "wfadj/render.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wfadj {
namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  std::array<char, 32> buf{};
  if (std::abs(v) < 0.005) v = 0.0;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 2);
  (void)ec;
  return {buf.data(), end};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Scale {
  double y_min = -100, y_max = 100;
  double x(double f) const { return kLeft + f * kPlotW; }
  double y(double v) const { return kTop + (y_max - v) / (y_max - y_min) * kPlotH; }
};

// Step path through the segments, using value/lower/upper as selected.
template <class Pick>
std::string step_path(const WaterfallCurve& wf, const Scale& sc, Pick pick, bool reverse = false) {
  std::ostringstream os;
  const auto n = wf.segments.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = reverse ? n - 1 - k : k;
    const double a = wf.fraction_start(i), b = wf.segments[i].fraction_end();
    const double y = sc.y(pick(wf.segments[i]));
    const double from = reverse ? b : a, to = reverse ? a : b;
    if (k == 0) {
      os << (reverse ? "L" : "M") << num(sc.x(from)) << ' ' << num(y);
    } else {
      os << " V" << num(y);
    }
    os << " H" << num(sc.x(to));
  }
  return os.str();
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  if (series.empty()) throw std::invalid_argument("render_svg: nothing to plot");

  Scale sc;
  double top = 20.0;
  for (const auto& s : series) {
    for (const auto& seg : s.curve.segments) {
      top = std::max({top, seg.value, s.curve.has_bands ? seg.upper : seg.value});
    }
  }
  sc.y_max = std::max(40.0, std::ceil((top + 1e-9) / 20.0) * 20.0);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\""
     << " viewBox=\"0 0 800 500\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  if (!options.title.empty()) {
    os << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\"24\" text-anchor=\"middle\""
       << " font-family=\"sans-serif\" font-size=\"15\">" << escape(options.title) << "</text>\n";
  }

  // Axes and grid.
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (double v = sc.y_min; v <= sc.y_max + 1e-9; v += 20.0) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(sc.y(v)) << "\" x2=\""
       << num(kLeft + kPlotW) << "\" y2=\"" << num(sc.y(v))
       << "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sc.y(v) + 4)
       << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  for (int t = 0; t <= 10; ++t) {
    const double f = t / 10.0;
    const std::string label = options.patient_count > 0 ? num(f * options.patient_count) : num(f);
    os << "<text x=\"" << num(sc.x(f)) << "\" y=\"" << num(kTop + kPlotH + 16)
       << "\" text-anchor=\"middle\">" << label << "</text>\n";
  }
  os << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\"" << num(kHeight - 10)
     << "\" text-anchor=\"middle\">"
     << (options.patient_count > 0 ? "patients" : "fraction of patients") << "</text>\n";
  os << "<text x=\"16\" y=\"" << num(kTop + kPlotH / 2) << "\" text-anchor=\"middle\""
     << " transform=\"rotate(-90 16 " << num(kTop + kPlotH / 2)
     << ")\">best change from baseline (%)</text>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kPlotW)
     << "\" height=\"" << num(kPlotH) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (double ref : {20.0, 0.0, -30.0}) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(sc.y(ref)) << "\" x2=\""
       << num(kLeft + kPlotW) << "\" y2=\"" << num(sc.y(ref)) << "\" stroke=\""
       << (ref == 0.0 ? "#555555" : "#999999") << "\" stroke-width=\"1\""
       << (ref == 0.0 ? "" : " stroke-dasharray=\"4 3\"") << "/>\n";
  }
  os << "</g>\n";

  // Bands first so lines stay on top.
  int colour = 0;
  std::vector<std::string> colours;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string c = s.style == SeriesStyle::Emphasized ? "#000000"
                    : s.style == SeriesStyle::Faint    ? "#7fa7cf"
                                                       : kPalette[colour++ % kPalette.size()];
    colours.push_back(c);
    if (!s.curve.has_bands || s.curve.segments.empty()) continue;
    os << "<path class=\"band\" d=\"" << step_path(s.curve, sc, [](const auto& g) { return g.upper; }) << ' '
       << step_path(s.curve, sc, [](const auto& g) { return g.lower; }, true) << " Z\" fill=\""
       << c << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.curve.segments.empty()) continue;
    const char* width = s.style == SeriesStyle::Emphasized ? "2.5"
                        : s.style == SeriesStyle::Faint    ? "0.8"
                                                           : "1.6";
    os << "<path class=\"series\" d=\"" << step_path(s.curve, sc, [](const auto& g) { return g.value; })
       << "\" fill=\"none\" stroke=\"" << colours[i] << "\" stroke-width=\"" << width << '"'
       << (s.style == SeriesStyle::Faint ? " stroke-opacity=\"0.35\"" : "") << "/>\n";
  }

  // Legend: faint series collapse into a single entry.
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = kTop + 10;
  bool faint_listed = false;
  std::size_t faint_count = 0;
  for (const auto& s : series) faint_count += s.style == SeriesStyle::Faint ? 1 : 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string label = s.label.empty() ? "curve-" + std::to_string(i + 1) : s.label;
    if (s.style == SeriesStyle::Faint) {
      if (faint_listed) continue;
      faint_listed = true;
      if (faint_count > 1) label = "replicates (" + std::to_string(faint_count) + ")";
    }
    const double lx = kLeft + kPlotW + 12;
    os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << colours[i] << "\" stroke-width=\"2.5\"/>\n";
    os << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4) << "\">" << escape(label)
       << "</text>\n";
    ly += 18;
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace wfadj
