#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wfadj/data_model.hpp"

namespace wfadj {

/// Category probabilities over scan categories 1..K (stored 0-based).
struct CategoryProbabilities {
  std::vector<double> theta;

  int K() const { return static_cast<int>(theta.size()); }
  double operator[](int category) const { return theta[category - 1]; }
  /// Throws std::invalid_argument unless theta lies on the simplex.
  void validate(double tol = 1e-12) const;
  static CategoryProbabilities uniform(int K);
};

struct GibbsConfig {
  int iterations = 50'000;
  int burn_in = 5'000;
  std::uint64_t seed = 20240101;
  /// Dirichlet prior; empty means all ones.
  std::vector<double> prior_alpha;

  int kept() const { return iterations - burn_in; }
  /// Throws std::invalid_argument for an unusable configuration.
  void validate(int K) const;
};

struct CategorySummary {
  double mean = 0.0;
  double variance = 0.0;
};

struct CategoryPosterior {
  CategoryProbabilities mean_theta;
  std::vector<CategorySummary> samples_summary;
  std::map<std::string, double> event_probs;

  double censor_prob(const std::string& patient_id) const {
    return 1.0 - event_probs.at(patient_id);
  }
};

struct EmResult {
  CategoryProbabilities theta;
  int iterations = 0;
  bool converged = false;
  /// Categories absent from every candidate set; their mass converges to 0.
  std::vector<int> unsupported_categories;
};

/// Sum over patients of log(sum of theta over the candidate set).
/// Returns -infinity when some patient has zero candidate mass.
double log_likelihood(const CategoryProbabilities& theta, const InterimDataset& dataset);

/// One fixed-point update theta_k <- (1/n) sum_i theta_k 1{k in S_i} / sum_{l in S_i} theta_l.
CategoryProbabilities em_step(const CategoryProbabilities& theta, const InterimDataset& dataset);

/// Maximum likelihood estimate by EM from the uniform start.
EmResult em_mle(const InterimDataset& dataset, double tol = 1e-12, int max_iter = 100'000);

/// Gibbs sampler over the latent final-best categories with a Dirichlet
/// prior. Deterministic in (dataset, config).
CategoryPosterior gibbs_sample(const InterimDataset& dataset, const GibbsConfig& config);

/// theta_u / sum of theta over the candidate set.
double event_probability(const CategoryProbabilities& theta, const InterimRecord& record);

}  // namespace wfadj
