// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "test_support.hpp"
#include "wfadj/cli.hpp"
#include "wfadj/multinomial.hpp"
#include "wfadj/replication.hpp"
#include "wfadj/survival.hpp"
#include "wfadj/waterfall.hpp"

using namespace wfadj;
using namespace wfadj::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kMleTol = 1e-9;
constexpr double kGibbsTol = 0.01;
constexpr double kToyKmTol = 1e-12;
constexpr double kScenarioTol = 1e-10;
constexpr double kWidthSumTol = 1e-12;
constexpr double kToyWidthTol = 1e-12;
constexpr double kRuntime1 = 1.0;
constexpr double kRuntime2 = 10.0;
constexpr double kRuntime4 = 60.0;
constexpr double kRuntime7 = 300.0;

// Synthetic bias scenario.
constexpr int kBiasPatients = 40;
constexpr int kBiasReplicates = 100;
constexpr Day kBiasCutDay = 400;
constexpr std::uint64_t kBiasCohortSeed = 1;
constexpr std::uint64_t kBiasBaseSeed = 1000;
constexpr double kTailFrom = 0.75;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const InterimRecord& record(const InterimDataset& ds, const std::string& id) {
  for (const auto& r : ds.records) {
    if (r.patient_id == id) return r;
  }
  throw std::runtime_error("no record " + id);
}

Outcome toy_mle() {
  const auto ds = toy_dataset();
  const auto em = em_mle(ds);
  const std::vector<double> expect{1.0 / 6, 1.0 / 6, 1.0 / 3, 1.0 / 3};
  double err = 0.0;
  for (int k = 1; k <= 4; ++k) err = std::max(err, std::abs(em.theta[k] - expect[k - 1]));
  const double p2 = event_probability(em.theta, record(ds, "P2"));
  const double p4 = event_probability(em.theta, record(ds, "P4"));
  const double perr = std::max(std::abs(p2 - 0.5), std::abs(p4 - 0.5));
  return {em.converged && err <= kMleTol && perr <= kMleTol,
          fmt("max |theta - (1/6,1/6,1/3,1/3)| = %.2e, max |p - 1/2| = %.2e", err, perr)};
}

Outcome gibbs_posterior() {
  // Oracle: the flat-prior posterior is a three-component Dirichlet mixture.
  const auto w = mixture_weights(kToyMixture);
  std::vector<double> mean(4, 0.0);
  double p_oracle = 0.0;
  for (std::size_t c = 0; c < kToyMixture.size(); ++c) {
    const auto& a = kToyMixture[c].alpha;
    const double total = std::accumulate(a.begin(), a.end(), 0.0);
    for (int k = 0; k < 4; ++k) mean[k] += w[c] * a[k] / total;
    p_oracle += w[c] * a[2] / (a[2] + a[3]);
  }
  GibbsConfig cfg;  // flat prior, 50k iterations, 5k burn-in
  const auto post = gibbs_sample(toy_dataset(), cfg);
  double err = 0.0;
  for (int k = 1; k <= 4; ++k) err = std::max(err, std::abs(post.mean_theta[k] - mean[k - 1]));
  const double perr = std::max(std::abs(post.event_probs.at("P2") - p_oracle),
                               std::abs(post.event_probs.at("P4") - p_oracle));
  return {cfg.iterations == 50'000 && cfg.burn_in == 5'000 && err <= kGibbsTol && perr <= kGibbsTol,
          fmt("max |mean - oracle| = %.4f, max |p - %.3f|", err, p_oracle) + fmt(" = %.4f", perr)};
}

Outcome toy_weighted_km() {
  const auto obs = toy_observations();
  const auto km = weighted_km(obs);
  const std::vector<double> expect{5.0 / 6, 0.75, 0.5625, 0.46875, 0.234375, 0.0};
  if (km.breakpoints.size() != expect.size()) return {false, "wrong number of breakpoints"};
  double err = 0.0;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    err = std::max(err, std::abs(km.breakpoints[i].value - expect[i]));
  }

  // The four equally likely event/censoring scenarios for P2 and P4, each a
  // conventional product-limit curve.
  std::vector<double> table(expect.size(), 0.0);
  for (int s = 0; s < 4; ++s) {
    std::vector<std::pair<double, bool>> data;
    for (const auto& o : obs) {
      bool event = true;
      if (o.z == -10) event = (s & 1) != 0;
      if (o.z == 25) event = (s & 2) != 0;
      data.emplace_back(o.z, event);
    }
    const auto pl = product_limit(data);
    for (std::size_t i = 0; i < expect.size(); ++i) table[i] += 0.25 * pl.at(km.breakpoints[i].z);
  }
  const auto lib_avg = scenario_average_oracle(obs);
  double table_err = 0.0;
  bool lib_exact = lib_avg.breakpoints.size() == km.breakpoints.size();
  for (std::size_t i = 0; i < expect.size(); ++i) {
    table_err = std::max(table_err, std::abs(km.breakpoints[i].value - table[i]));
    if (lib_exact) lib_exact = lib_avg.breakpoints[i].value == km.breakpoints[i].value;
  }
  return {err <= kToyKmTol && table_err <= kToyKmTol && lib_exact,
          fmt("max |S - expected| = %.2e, max |S - scenario average| = %.2e", err, table_err) +
              (lib_exact ? ", scenario_average_oracle identical" : ", scenario_average_oracle differs")};
}

Outcome scenario_equivalence() {
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const auto obs = random_observations(rng, 2 + t % 24, 10, t % 2 == 0);
    const auto km = weighted_km(obs);
    const auto avg = scenario_average_oracle(obs);
    if (km.breakpoints.size() != avg.breakpoints.size()) {
      ++bad;
      continue;
    }
    for (std::size_t i = 0; i < km.breakpoints.size(); ++i) {
      worst = std::max(worst, std::abs(km.breakpoints[i].value - avg.breakpoints[i].value));
    }
  }
  return {bad == 0 && worst <= kScenarioTol, fmt("500 instances, max difference %.2e", worst)};
}

Outcome conventional_reduction() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> grid(-20, 20), size(1, 40);
  std::uniform_real_distribution<double> cont(-100.0, 100.0);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<WeightedObservation> obs;
    std::vector<std::pair<double, bool>> data;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      const double z = t % 2 ? grid(rng) * 5.0 : cont(rng);
      obs.push_back({z, 1.0});
      data.emplace_back(z, true);
    }
    const auto km = weighted_km(obs);
    const auto pl = product_limit(data);
    if (km.breakpoints.size() != pl.size()) {
      ++mismatches;
      continue;
    }
    std::size_t i = 0;
    for (const auto& [z, s] : pl) {
      if (km.breakpoints[i].z != z || km.breakpoints[i].value != s) ++mismatches;
      ++i;
    }
  }
  return {mismatches == 0, fmt("1000 datasets, %.0f mismatching breakpoints", mismatches)};
}

Outcome round_trip() {
  std::mt19937_64 rng(31337);
  int failures = 0;
  double worst_sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = random_floored_curve(rng);
    const auto wf = survival_to_waterfall(c);
    const auto back = waterfall_to_survival(wf);
    bool same = back.breakpoints.size() == c.breakpoints.size();
    for (std::size_t i = 0; same && i < c.breakpoints.size(); ++i) {
      same = back.breakpoints[i].z == c.breakpoints[i].z && back.breakpoints[i].value == c.breakpoints[i].value;
    }
    failures += same ? 0 : 1;
    double total = 0.0;
    for (std::size_t i = 0; i < wf.segments.size(); ++i) total += wf.width(i);
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }

  const auto toy = survival_to_waterfall(weighted_km(toy_observations()));
  const std::vector<double> widths{1.0 / 6, 1.0 / 12, 0.1875, 0.09375, 0.234375, 0.234375};
  const std::vector<double> values{30, 10, 0, -25, -35, -90};
  bool toy_ok = toy.segments.size() == widths.size();
  double toy_sum = 0.0, toy_err = 0.0;
  for (std::size_t i = 0; toy_ok && i < widths.size(); ++i) {
    toy_ok = toy.segments[i].value == values[i];
    toy_err = std::max(toy_err, std::abs(toy.width(i) - widths[i]));
    toy_sum += toy.width(i);
  }
  toy_ok = toy_ok && toy_err <= kToyWidthTol && std::abs(toy_sum - 1.0) <= kWidthSumTol;
  return {failures == 0 && worst_sum <= kWidthSumTol && toy_ok,
          fmt("%.0f round-trip failures in 1000, toy width error %.2e", failures, toy_err) +
              fmt(", |sum - 1| = %.2e", std::abs(toy_sum - 1.0))};
}

Outcome bias_reduction() {
  SynthesisConfig sc;
  sc.n_patients = kBiasPatients;
  sc.seed = kBiasCohortSeed;
  const auto cohort = synthesize_cohort(sc);
  ReplicationConfig rc;
  rc.n_replicates = kBiasReplicates;
  rc.base_seed = kBiasBaseSeed;
  rc.cut_day = kBiasCutDay;
  rc.truth = TruthSubset::AllPatients;
  const auto result = run_replications(cohort, rc);
  const auto [adj, unadj] = result.mean_deviation(kTailFrom, 1.0);
  const auto skipped = result.skipped_seeds().size();
  return {unadj > 0.0 && std::abs(adj) < std::abs(unadj),
          fmt("tail deviation: unadjusted %+.3f, adjusted %+.3f", unadj, adj) +
              fmt(" (%.0f replicates, %.0f skipped)", kBiasReplicates, static_cast<double>(skipped))};
}

Outcome floor_rule() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> z(-99.0, 99.0), p(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 30);
  int failures = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<WeightedObservation> obs;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) obs.push_back({z(rng), p(rng) < 0.5 ? 1.0 : p(rng)});
    auto top = std::max_element(obs.begin(), obs.end(),
                                [](const auto& a, const auto& b) { return a.z < b.z; });
    top->p_event = 0.999 * p(rng);  // p < 1 at the maximal z
    const auto raw = weighted_km(obs, 0.95);
    const auto floored = enforce_floor(raw);
    const auto& last = floored.breakpoints.back();
    bool ok = raw.terminal_value() > 0.0 && last.z == kFloorZ && last.value == 0.0 &&
              floored.breakpoints.size() == raw.breakpoints.size() + 1;
    for (std::size_t i = 0; ok && i < raw.breakpoints.size(); ++i) {
      ok = floored.breakpoints[i].value == raw.breakpoints[i].value;
    }
    ok = ok && floored.bands && floored.bands->back().lower == 0.0 && floored.bands->back().upper == 0.0;
    ok = ok && enforce_floor(floored).breakpoints.size() == floored.breakpoints.size();
    failures += ok ? 0 : 1;
  }
  return {failures == 0, fmt("%.0f of 100 random curves violate the floor rule", failures)};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = os.str();
  }
  return files;
}

int cli_run(std::vector<std::string> args) {
  args.insert(args.begin(), "wfadj");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Outcome determinism() {
  const fs::path tmp = fs::temp_directory_path() / ("wfadj_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  const fs::path toy = fs::path(WFADJ_FIXTURES) / "toy";
  bool ok = true;
  std::size_t files = 0;
  for (int run = 0; run < 2; ++run) {
    const auto out = tmp / ("adjust" + std::to_string(run));
    ok = ok && cli_run({"adjust", "--patients", (toy / "patients.csv").string(), "--scans",
                        (toy / "scans.csv").string(), "--cut-day", "180", "--seed", "11", "--svg",
                        "--out", out.string()}) == 0;
  }
  ok = ok && cli_run({"simulate", "--n", "30", "--seed", "5", "--out", (tmp / "cohort").string()}) == 0;
  for (int run = 0; run < 2; ++run) {
    const auto out = tmp / ("replicate" + std::to_string(run));
    ok = ok && cli_run({"replicate", "--patients", (tmp / "cohort" / "patients.csv").string(), "--scans",
                        (tmp / "cohort" / "scans.csv").string(), "--cut-day", "300", "--replicates", "10",
                        "--iterations", "5000", "--burn-in", "1000", "--seed", "3", "--svg", "--out",
                        out.string()}) == 0;
  }
  if (ok) {
    const auto a0 = tree(tmp / "adjust0"), a1 = tree(tmp / "adjust1");
    const auto r0 = tree(tmp / "replicate0"), r1 = tree(tmp / "replicate1");
    ok = !a0.empty() && !r0.empty() && a0 == a1 && r0 == r1;
    files = a0.size() + r0.size();
  }
  fs::remove_all(tmp);
  return {ok, fmt("adjust and replicate output trees compared byte for byte (%.0f files each run)",
                  static_cast<double>(files))};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double limit_s;  // 0 = no runtime bound
  };
  const std::vector<Criterion> criteria{
      {1, "toy MLE and event probabilities", toy_mle, kRuntime1},
      {2, "Gibbs posterior mean and event probabilities", gibbs_posterior, kRuntime2},
      {3, "weighted KM on the toy observations", toy_weighted_km, 0},
      {4, "weighted KM equals the scenario average", scenario_equivalence, kRuntime4},
      {5, "unit weights reduce to conventional KM", conventional_reduction, 0},
      {6, "waterfall transform round trip and toy segments", round_trip, 0},
      {7, "bias reduction on shuffled synthetic replicates", bias_reduction, kRuntime7},
      {8, "floor rule", floor_rule, 0},
      {9, "byte-identical reruns", determinism, 0},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.2f s exceeds %.0f s", secs, c.limit_s);
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %d. %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
