#include "wfadj/multinomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>

namespace wfadj {
namespace {

void check_dimensions(const CategoryProbabilities& theta, const InterimDataset& dataset) {
  if (theta.K() != dataset.K) {
    throw std::invalid_argument("theta has " + std::to_string(theta.K()) +
                                " categories but the dataset has K = " +
                                std::to_string(dataset.K));
  }
  for (const auto& r : dataset.records) {
    if (r.candidate_set.empty()) {
      throw std::invalid_argument("patient " + r.patient_id + " has an empty candidate set");
    }
    for (int k : r.candidate_set) {
      if (k < 1 || k > dataset.K) {
        throw std::invalid_argument("patient " + r.patient_id + " has a candidate outside 1..K");
      }
    }
  }
}

double candidate_mass(const CategoryProbabilities& theta, const std::vector<int>& set) {
  double mass = 0.0;
  for (int k : set) mass += theta[k];
  return mass;
}

}  // namespace

void CategoryProbabilities::validate(double tol) const {
  if (theta.empty()) throw std::invalid_argument("theta must have at least one category");
  double sum = 0.0;
  for (double t : theta) {
    if (!(t >= 0.0)) throw std::invalid_argument("theta entries must be non-negative");
    sum += t;
  }
  if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("theta must sum to 1");
}

CategoryProbabilities CategoryProbabilities::uniform(int K) {
  return {std::vector<double>(static_cast<std::size_t>(K), 1.0 / K)};
}

void GibbsConfig::validate(int K) const {
  if (iterations <= 0) throw std::invalid_argument("iterations must be positive");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be non-negative");
  if (iterations <= burn_in) throw std::invalid_argument("iterations must exceed burn_in");
  if (kept() < 100) {
    throw std::invalid_argument("at least 100 post-burn-in iterations are required");
  }
  if (!prior_alpha.empty()) {
    if (static_cast<int>(prior_alpha.size()) != K) {
      throw std::invalid_argument("prior_alpha length must equal K");
    }
    for (double a : prior_alpha) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw std::invalid_argument("prior_alpha entries must be positive");
      }
    }
  }
}

double log_likelihood(const CategoryProbabilities& theta, const InterimDataset& dataset) {
  check_dimensions(theta, dataset);
  double ll = 0.0;
  for (const auto& r : dataset.records) {
    const double mass = candidate_mass(theta, r.candidate_set);
    if (mass <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += std::log(mass);
  }
  return ll;
}

CategoryProbabilities em_step(const CategoryProbabilities& theta, const InterimDataset& dataset) {
  std::vector<double> next(theta.theta.size(), 0.0);
  for (const auto& r : dataset.records) {
    const double mass = candidate_mass(theta, r.candidate_set);
    if (mass <= 0.0) {
      throw std::domain_error("patient " + r.patient_id + " has zero candidate mass");
    }
    for (int k : r.candidate_set) next[k - 1] += theta[k] / mass;
  }
  const double n = static_cast<double>(dataset.records.size());
  for (double& t : next) t /= n;
  return {std::move(next)};
}

EmResult em_mle(const InterimDataset& dataset, double tol, int max_iter) {
  auto theta = CategoryProbabilities::uniform(dataset.K);
  check_dimensions(theta, dataset);
  if (!(tol > 0.0)) throw std::invalid_argument("em_mle: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("em_mle: max_iter must be positive");

  EmResult result;
  std::vector<bool> supported(static_cast<std::size_t>(dataset.K), false);
  for (const auto& r : dataset.records) {
    for (int k : r.candidate_set) supported[k - 1] = true;
  }
  for (int k = 1; k <= dataset.K; ++k) {
    if (!supported[k - 1]) result.unsupported_categories.push_back(k);
  }

  for (int it = 1; it <= max_iter; ++it) {
    auto next = em_step(theta, dataset);
    double delta = 0.0;
    for (int k = 0; k < dataset.K; ++k) {
      delta = std::max(delta, std::abs(next.theta[k] - theta.theta[k]));
    }
    theta = std::move(next);
    result.iterations = it;
    if (delta < tol) {
      result.converged = true;
      break;
    }
  }
  result.theta = std::move(theta);
  return result;
}

CategoryPosterior gibbs_sample(const InterimDataset& dataset, const GibbsConfig& config) {
  const int K = dataset.K;
  config.validate(K);
  check_dimensions(CategoryProbabilities::uniform(K), dataset);

  const std::vector<double> alpha =
      config.prior_alpha.empty() ? std::vector<double>(K, 1.0) : config.prior_alpha;

  // Patients with a single candidate contribute fixed counts.
  std::vector<double> fixed_counts(K, 0.0);
  std::vector<const InterimRecord*> latent;
  for (const auto& r : dataset.records) {
    if (r.latent()) {
      latent.push_back(&r);
    } else {
      fixed_counts[r.u_category() - 1] += 1.0;
    }
  }

  boost::random::mt19937_64 rng(config.seed);
  boost::random::uniform_01<double> unif;

  std::vector<double> theta(K, 1.0 / K);
  std::vector<double> counts(K);
  std::vector<double> cumulative;

  std::vector<double> sum(K, 0.0), sum_sq(K, 0.0);
  std::vector<double> p_sum(latent.size(), 0.0);

  for (int it = 0; it < config.iterations; ++it) {
    counts = fixed_counts;
    for (const auto* r : latent) {
      const auto& set = r->candidate_set;
      cumulative.resize(set.size());
      double acc = 0.0;
      for (std::size_t j = 0; j < set.size(); ++j) {
        acc += theta[set[j] - 1];
        cumulative[j] = acc;
      }
      const double draw = unif(rng) * acc;
      auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), draw) - cumulative.begin();
      if (pos == static_cast<std::ptrdiff_t>(set.size())) --pos;
      counts[set[pos] - 1] += 1.0;
    }

    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      boost::random::gamma_distribution<double> gamma(alpha[k] + counts[k], 1.0);
      theta[k] = gamma(rng);
      total += theta[k];
    }
    for (double& t : theta) t /= total;

    if (it < config.burn_in) continue;
    for (int k = 0; k < K; ++k) {
      sum[k] += theta[k];
      sum_sq[k] += theta[k] * theta[k];
    }
    for (std::size_t i = 0; i < latent.size(); ++i) {
      const auto& set = latent[i]->candidate_set;
      double mass = 0.0;
      for (int k : set) mass += theta[k - 1];
      p_sum[i] += theta[latent[i]->u_category() - 1] / mass;
    }
  }

  const double n = static_cast<double>(config.kept());
  CategoryPosterior post;
  post.mean_theta.theta.resize(K);
  post.samples_summary.resize(K);
  for (int k = 0; k < K; ++k) {
    const double mean = sum[k] / n;
    post.mean_theta.theta[k] = mean;
    post.samples_summary[k].mean = mean;
    post.samples_summary[k].variance = std::max(0.0, (sum_sq[k] - n * mean * mean) / (n - 1.0));
  }
  for (const auto& r : dataset.records) post.event_probs[r.patient_id] = 1.0;
  for (std::size_t i = 0; i < latent.size(); ++i) {
    post.event_probs[latent[i]->patient_id] = p_sum[i] / n;
  }
  return post;
}

double event_probability(const CategoryProbabilities& theta, const InterimRecord& record) {
  if (record.candidate_set.empty()) {
    throw std::invalid_argument("patient " + record.patient_id + " has no candidate set");
  }
  if (record.candidate_set.size() == 1) return 1.0;
  for (int k : record.candidate_set) {
    if (k < 1 || k > theta.K()) {
      throw std::invalid_argument("candidate category outside theta's range");
    }
  }
  const double mass = candidate_mass(theta, record.candidate_set);
  if (!(mass > 0.0)) {
    throw std::domain_error("patient " + record.patient_id + " has zero candidate mass");
  }
  return theta[record.u_category()] / mass;
}

}  // namespace wfadj
