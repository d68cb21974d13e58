#pragma once

#include <optional>
#include <span>
#include <vector>

namespace wfadj {

/// A patient's negated best change with the probability that it is final.
/// Conceptually an event pseudo-observation of weight p_event plus a
/// censored one of weight 1 - p_event at the same z.
struct WeightedObservation {
  double z = 0.0;
  double p_event = 1.0;
};

struct Breakpoint {
  double z = 0.0;
  double value = 1.0;  // survival at and after z
};

struct Band {
  double lower = 0.0;
  double upper = 1.0;
};

/// Right-continuous survival step function of -BTSC. Equals 1 before the
/// first breakpoint.
struct StepCurve {
  std::vector<Breakpoint> breakpoints;
  std::optional<std::vector<Band>> bands;

  double terminal_value() const { return breakpoints.empty() ? 1.0 : breakpoints.back().value; }
  /// S(z) under the right-continuous convention.
  double operator()(double z) const;
};

/// One distinct z of the weighted product-limit estimator.
struct KmStep {
  double z = 0.0;
  double at_risk = 0.0;  // observations with z_i >= z
  double events = 0.0;   // summed p_event at z
  double survival = 1.0;
};

using KmTable = std::vector<KmStep>;

/// Weighted product-limit table: at each distinct z, survival is multiplied
/// by 1 - (sum of p_event at z) / (number with z_i >= z). Censored mass at z
/// stays in the risk set at z.
KmTable weighted_km_table(std::span<const WeightedObservation> observations);

/// weighted_km_table as a StepCurve without bands.
StepCurve weighted_km(std::span<const WeightedObservation> observations);

/// Curve with log-scale Greenwood bands at `level`.
StepCurve weighted_km(std::span<const WeightedObservation> observations, double level);

/// Probability-weighted average of the conventional KM curves of every
/// event/censoring assignment of the fractional-weight observations.
/// Refuses more than `max_fractional` such observations.
StepCurve scenario_average_oracle(std::span<const WeightedObservation> observations,
                                  int max_fractional = 20);

/// Pointwise log-scale Greenwood bands using weighted event counts. Steps
/// whose variance is undefined (risk set exhausted) get (0, 1).
std::vector<Band> greenwood_bands(const KmTable& table, double level);

/// Forces the curve to 0 at z = 100 (-BTSC cannot exceed 100) when it ends above 0.
StepCurve enforce_floor(StepCurve curve);

inline constexpr double kFloorZ = 100.0;

}  // namespace wfadj
