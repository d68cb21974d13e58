#include "wfadj/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "wfadj/csv_io.hpp"
#include "wfadj/render.hpp"
#include "wfadj/replication.hpp"

namespace wfadj::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kShortChain = 1000;

struct Options {
  std::string patients, scans;
  std::optional<Day> cut_day;
  std::uint64_t seed = 20240101;
  int iterations = 50'000;
  int burn_in = 5'000;
  double ci_level = 0.95;
  bool no_filter = false;
  std::string out = "out";
  bool svg = false;
  bool counts = false;

  // km
  std::string observations;
  // replicate
  int replicates = 100;
  std::string truth = "all";
  unsigned threads = 0;
  // simulate
  SynthesisConfig synth;
  // plot
  std::vector<std::string> inputs;
  std::vector<std::string> labels;
  std::string title;
};

GibbsConfig gibbs_config(const Options& o) {
  GibbsConfig g;
  g.iterations = o.iterations;
  g.burn_in = o.burn_in;
  g.seed = o.seed;
  return g;
}

void require_inputs(const Options& o) {
  if (o.patients.empty() || o.scans.empty()) {
    throw std::invalid_argument("--patients and --scans are required");
  }
  if (!o.cut_day) throw std::invalid_argument("--cut-day is required");
}

InterimDataset load_interim(const Options& o) {
  require_inputs(o);
  const auto cohort = csv::read_cohort(o.patients, o.scans);
  return apply_cut(cohort, *o.cut_day, CutOptions{!o.no_filter});
}

void warn_short_chain(const Options& o, std::ostream& err) {
  if (o.iterations - o.burn_in < kShortChain) {
    err << "warning: only " << (o.iterations - o.burn_in)
        << " post-burn-in Gibbs iterations; estimates may be noisy\n";
  }
}

void add_cut_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--patients", o.patients, "patients.csv (patient_id,start_day,discontinuation_day)");
  cmd->add_option("--scans", o.scans, "scans.csv (patient_id,offset_day,change_pct)");
  cmd->add_option("--cut-day", o.cut_day, "interim data cut (calendar day)");
  cmd->add_flag("--no-filter", o.no_filter, "treat every ongoing patient as able to improve");
}

void add_gibbs_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--iterations", o.iterations, "Gibbs iterations")->capture_default_str();
  cmd->add_option("--burn-in", o.burn_in, "Gibbs burn-in iterations")->capture_default_str();
}

void add_output_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_flag("--svg", o.svg, "also render SVG plots");
  auto* fr = cmd->add_flag("--fractions", "x-axis as patient fraction (default)");
  auto* ct = cmd->add_flag("--counts", o.counts, "x-axis as patient counts");
  fr->excludes(ct);
}

int cmd_adjust(const Options& o, std::ostream& out, std::ostream& err) {
  if (!(o.ci_level > 0.0 && o.ci_level < 1.0)) throw std::invalid_argument("--ci-level must lie in (0, 1)");
  warn_short_chain(o, err);
  auto a = adjust(load_interim(o), gibbs_config(o), o.ci_level);
  const int n = o.counts ? static_cast<int>(a.dataset.records.size()) : 0;
  const fs::path dir = o.out;
  const auto mle = em_mle(a.dataset);

  csv::write_file(dir / "interim.csv", csv::interim_csv(a.dataset, &a.posterior));
  csv::write_file(dir / "theta.csv", csv::theta_csv(a.posterior));
  csv::write_file(dir / "theta_mle.csv", csv::theta_csv(mle.theta));
  csv::write_file(dir / "event_probs.csv", csv::event_probs_csv(a.posterior));
  csv::write_file(dir / "survival.csv", csv::curve_csv(a.survival));
  csv::write_file(dir / "waterfall_adjusted.csv", csv::waterfall_csv(a.adjusted, n));
  csv::write_file(dir / "waterfall_unadjusted.csv", csv::waterfall_csv(a.unadjusted, n));
  if (o.svg) {
    PlotOptions po;
    po.title = "Waterfall curves at cut day " + std::to_string(*o.cut_day);
    po.patient_count = n;
    csv::write_file(dir / "waterfall.svg",
                    render_svg({{a.adjusted, "adjusted", SeriesStyle::Normal},
                                {a.unadjusted, "unadjusted", SeriesStyle::Normal}},
                               po));
  }
  out << "patients: " << a.dataset.records.size() << ", K = " << a.dataset.K << '\n';
  for (const auto& r : a.dataset.records) {
    if (r.latent()) {
      out << "  " << r.patient_id << " p_event = " << csv::format_double(a.posterior.event_probs.at(r.patient_id)) << '\n';
    }
  }
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  warn_short_chain(o, err);
  const auto ds = load_interim(o);
  const auto mle = em_mle(ds);
  const auto post = gibbs_sample(ds, gibbs_config(o));
  const fs::path dir = o.out;
  csv::write_file(dir / "interim.csv", csv::interim_csv(ds, &post));
  csv::write_file(dir / "theta_mle.csv", csv::theta_csv(mle.theta));
  csv::write_file(dir / "theta.csv", csv::theta_csv(post));
  csv::write_file(dir / "event_probs.csv", csv::event_probs_csv(post));

  out << "K = " << ds.K << "\ncategory,mle,posterior_mean\n";
  for (int k = 1; k <= ds.K; ++k) {
    out << k << ',' << csv::format_double(mle.theta[k]) << ','
        << csv::format_double(post.mean_theta[k]) << '\n';
  }
  if (!mle.converged) err << "warning: EM did not converge in " << mle.iterations << " iterations\n";
  for (int k : mle.unsupported_categories) {
    err << "note: category " << k << " appears in no candidate set; its MLE is 0\n";
  }
  return kOk;
}

int cmd_km(const Options& o, std::ostream& out, std::ostream& err) {
  if (!(o.ci_level > 0.0 && o.ci_level < 1.0)) throw std::invalid_argument("--ci-level must lie in (0, 1)");
  std::vector<WeightedObservation> obs;
  if (!o.observations.empty()) {
    obs = csv::read_observations(o.observations);
    if (obs.empty()) throw InputError(o.observations + ": no observations");
  } else {
    warn_short_chain(o, err);
    const auto ds = load_interim(o);
    obs = weighted_observations(ds, gibbs_sample(ds, gibbs_config(o)));
  }
  const auto curve = enforce_floor(weighted_km(obs, o.ci_level));
  const fs::path dir = o.out;
  csv::write_file(dir / "survival.csv", csv::curve_csv(curve));
  const int n = o.counts ? static_cast<int>(obs.size()) : 0;
  csv::write_file(dir / "waterfall_adjusted.csv", csv::waterfall_csv(transform_bands(curve), n));
  out << "breakpoints: " << curve.breakpoints.size() << "\nwrote " << dir.string() << '\n';
  return kOk;
}

int cmd_replicate(const Options& o, std::ostream& out, std::ostream& err) {
  require_inputs(o);
  warn_short_chain(o, err);
  ReplicationConfig rc;
  rc.n_replicates = o.replicates;
  rc.base_seed = o.seed;
  rc.cut_day = *o.cut_day;
  rc.gibbs = gibbs_config(o);
  rc.filter_enabled = !o.no_filter;
  rc.ci_level = o.ci_level;
  rc.threads = o.threads;
  if (o.truth == "all") {
    rc.truth = TruthSubset::AllPatients;
  } else if (o.truth == "enrolled") {
    rc.truth = TruthSubset::EnrolledAtCut;
  } else {
    throw std::invalid_argument("--truth must be 'all' or 'enrolled'");
  }
  rc.validate();

  const auto cohort = csv::read_cohort(o.patients, o.scans);
  const auto result = run_replications(cohort, rc);

  const fs::path dir = o.out;
  std::string index = "replicate,seed,skipped,n_patients,n_ongoing\n";
  for (const auto& r : result.replicates) {
    char name[32];
    std::snprintf(name, sizeof name, "r%04d", r.index);
    index += std::to_string(r.index) + ',' + std::to_string(r.seed) + ',' +
             (r.skipped ? "true" : "false") + ',' + std::to_string(r.n_patients) + ',' +
             std::to_string(r.n_ongoing) + '\n';
    if (r.skipped) continue;
    const int n = o.counts ? r.n_patients : 0;
    csv::write_file(dir / "replicates" / (std::string(name) + "_adjusted.csv"),
                    csv::waterfall_csv(r.adjusted, n));
    csv::write_file(dir / "replicates" / (std::string(name) + "_unadjusted.csv"),
                    csv::waterfall_csv(r.unadjusted, n));
  }
  csv::write_file(dir / "replicates.csv", index);
  csv::write_file(dir / "truth.csv", csv::waterfall_csv(result.truth_all));
  csv::write_file(dir / "summary.csv", csv::summary_csv(result));

  if (o.svg) {
    for (bool adjusted : {true, false}) {
      std::vector<PlotSeries> series;
      for (const auto& r : result.replicates) {
        if (!r.skipped) series.push_back({adjusted ? r.adjusted : r.unadjusted, "", SeriesStyle::Faint});
      }
      series.push_back({result.truth_all, "ground truth", SeriesStyle::Emphasized});
      PlotOptions po;
      po.title = adjusted ? "Adjusted waterfall curves" : "Unadjusted waterfall curves";
      csv::write_file(dir / (adjusted ? "replicates_adjusted.svg" : "replicates_unadjusted.svg"),
                      render_svg(series, po));
    }
  }

  const auto skipped = result.skipped_seeds();
  const auto [adj, unadj] = result.mean_deviation(0.75, 1.0);
  out << "replicates: " << rc.n_replicates << " (skipped " << skipped.size() << ")\n"
      << "tail mean deviation (f in [0.75, 1]): adjusted " << csv::format_double(adj)
      << ", unadjusted " << csv::format_double(unadj) << '\n';
  for (auto s : skipped) err << "skipped replicate with seed " << s << " (no evaluable patients)\n";
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  auto cfg = o.synth;
  cfg.seed = o.seed;
  const auto cohort = synthesize_cohort(cfg);
  const fs::path dir = o.out;
  csv::write_cohort(cohort, dir / "patients.csv", dir / "scans.csv");
  out << "wrote " << cohort.size() << " patients to " << dir.string() << '\n';
  return kOk;
}

int cmd_plot(const Options& o, std::ostream& out) {
  if (o.inputs.empty()) throw std::invalid_argument("plot needs at least one --input");
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < o.inputs.size(); ++i) {
    series.push_back({csv::read_waterfall(o.inputs[i]), i < o.labels.size() ? o.labels[i] : "",
                      SeriesStyle::Normal});
  }
  PlotOptions po;
  po.title = o.title;
  fs::path target = o.out;
  if (target.extension() != ".svg") target /= "waterfall.svg";
  csv::write_file(target, render_svg(series, po));
  out << "wrote " << target.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Waterfall plot adjustment for incomplete follow-up", "wfadj"};
  app.require_subcommand(1);

  auto* adjust_cmd = app.add_subcommand("adjust", "adjusted and unadjusted waterfall curves");
  add_cut_options(adjust_cmd, o);
  add_gibbs_options(adjust_cmd, o);
  adjust_cmd->add_option("--ci-level", o.ci_level, "pointwise confidence level")->capture_default_str();
  add_output_options(adjust_cmd, o);

  auto* estimate_cmd = app.add_subcommand("estimate", "category probabilities and event probabilities");
  add_cut_options(estimate_cmd, o);
  add_gibbs_options(estimate_cmd, o);
  estimate_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* km_cmd = app.add_subcommand("km", "weighted Kaplan-Meier curve with bands");
  add_cut_options(km_cmd, o);
  add_gibbs_options(km_cmd, o);
  km_cmd->add_option("--observations", o.observations, "z,p_event CSV instead of patient data");
  km_cmd->add_option("--ci-level", o.ci_level, "pointwise confidence level")->capture_default_str();
  add_output_options(km_cmd, o);

  auto* rep_cmd = app.add_subcommand("replicate", "shuffled-start replications against ground truth");
  add_cut_options(rep_cmd, o);
  add_gibbs_options(rep_cmd, o);
  rep_cmd->add_option("--ci-level", o.ci_level, "pointwise confidence level")->capture_default_str();
  rep_cmd->add_option("--replicates", o.replicates, "number of replicates")->capture_default_str();
  rep_cmd->add_option("--truth", o.truth, "ground truth subset: all | enrolled")->capture_default_str();
  rep_cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  add_output_options(rep_cmd, o);

  auto* sim_cmd = app.add_subcommand("simulate", "synthetic complete-follow-up cohort");
  sim_cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  sim_cmd->add_option("--n", o.synth.n_patients, "patients")->capture_default_str();
  sim_cmd->add_option("--interval", o.synth.scan_interval_days, "days between scans")->capture_default_str();
  sim_cmd->add_option("--max-scans", o.synth.max_scans, "latest best-scan index")->capture_default_str();
  sim_cmd->add_option("--decay", o.synth.improvement_decay, "geometric improvement rate in (0,1)")->capture_default_str();
  sim_cmd->add_option("--accrual", o.synth.accrual_days, "enrollment window in days")->capture_default_str();
  sim_cmd->add_option("--noise", o.synth.noise_sd, "measurement noise SD (percent)")->capture_default_str();
  sim_cmd->add_option("--depth-mean", o.synth.depth_mean, "mean final depth (percent)")->capture_default_str();
  sim_cmd->add_option("--depth-sd", o.synth.depth_sd, "SD of final depth (percent)")->capture_default_str();
  sim_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

  auto* plot_cmd = app.add_subcommand("plot", "render waterfall CSV files to SVG");
  plot_cmd->add_option("--input", o.inputs, "waterfall CSV (repeatable)");
  plot_cmd->add_option("--label", o.labels, "legend label per input (repeatable)");
  plot_cmd->add_option("--title", o.title, "plot title");
  plot_cmd->add_option("--out", o.out, "output .svg file or directory")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (adjust_cmd->parsed()) return cmd_adjust(o, out, err);
    if (estimate_cmd->parsed()) return cmd_estimate(o, out, err);
    if (km_cmd->parsed()) return cmd_km(o, out, err);
    if (rep_cmd->parsed()) return cmd_replicate(o, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(o, out);
    if (plot_cmd->parsed()) return cmd_plot(o, out);
  } catch (const NoEvaluablePatients& e) {
    err << "error: " << e.what() << '\n';
    return kNoEvaluable;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace wfadj::cli
