// Copyright 2026 The mergebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mergebench/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mergebench/error.hpp"

namespace mergebench {

namespace {

constexpr std::uint64_t kOptimizerStream = 0x6f707469;

double to_unit(const VariableSpec& v, double x) { return (x - v.lo) / (v.hi - v.lo); }
double from_unit(const VariableSpec& v, double u) { return std::clamp(v.lo + u * (v.hi - v.lo), v.lo, v.hi); }

// Indices sorted by value, best (largest) first; ties keep ask order.
std::vector<std::size_t> rank_descending(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace

// Optimizer ----------------------------------------------------------------

std::vector<Configuration> Optimizer::ask(std::size_t count) {
  if (!pending_.empty()) {
    throw InvalidArgument(name() + ": ask called while " + std::to_string(pending_.size()) +
                          " configurations await tell");
  }
  if (count == 0) throw InvalidArgument(name() + ": ask count must be positive");
  if (fixed_batch() && count != batch_size()) {
    throw InvalidArgument(name() + ": generation-based optimizer asks exactly " + std::to_string(batch_size()) +
                          " configurations, not " + std::to_string(count));
  }
  pending_ = do_ask(count);
  return pending_;
}

void Optimizer::tell(std::span<const Configuration> configs, std::span<const double> values) {
  if (pending_.empty()) throw InvalidArgument(name() + ": tell without a preceding ask");
  if (configs.size() != pending_.size() || values.size() != pending_.size()) {
    throw InvalidArgument(name() + ": tell expects " + std::to_string(pending_.size()) + " results, got " +
                          std::to_string(configs.size()) + " configurations and " + std::to_string(values.size()) +
                          " values");
  }
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!(configs[i] == pending_[i])) {
      throw InvalidArgument(name() + ": tell configuration " + std::to_string(i) + " was not produced by ask");
    }
    if (std::isnan(values[i])) throw InvalidArgument(name() + ": NaN objective value");
  }
  do_tell(values);
  pending_.clear();
}

std::size_t cma_default_lambda(std::size_t n) {
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

std::size_t tpe_good_count(std::size_t n, double gamma) {
  if (n == 0) return 0;
  const double target = gamma * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::floor(target));
  // Guard against products like 0.1 * 30 = 3.0000000000000004.
  if (target - static_cast<double>(k) > 1e-9) ++k;
  k = std::max<std::size_t>(k, 1);
  return n >= 2 ? std::min(k, n - 1) : k;
}

// Random search -------------------------------------------------------------

RandomSearch::RandomSearch(const SearchSpace& space, std::uint64_t seed, std::size_t batch)
    : Optimizer(space), rng_(derive_seed(seed, kOptimizerStream)), batch_(batch == 0 ? 1 : batch) {}

std::vector<Configuration> RandomSearch::do_ask(std::size_t count) {
  std::vector<Configuration> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_uniform(space(), rng_));
  return out;
}

// CMA core ------------------------------------------------------------------

CmaCore::CmaCore(std::size_t n, std::size_t lambda, bool diagonal, double sigma0)
    : n_(n), lambda_(lambda), diagonal_(diagonal), sigma_(sigma0) {
  if (n_ == 0) throw InvalidArgument("CMA: dimension must be positive");
  if (lambda_ < 2) throw InvalidArgument("CMA: population must be >= 2");
  if (!(sigma0 > 0.0)) throw InvalidArgument("CMA: sigma0 must be positive");
  const std::size_t mu = lambda_ / 2;
  const double nd = static_cast<double>(n_);
  double sum = 0.0;
  for (std::size_t i = 1; i <= mu; ++i) {
    weights_.push_back(std::log((static_cast<double>(lambda_) + 1.0) / 2.0) - std::log(static_cast<double>(i)));
    sum += weights_.back();
  }
  double sq = 0.0;
  for (auto& w : weights_) {
    w /= sum;
    sq += w * w;
  }
  mu_eff_ = 1.0 / sq;

  c_sigma_ = (mu_eff_ + 2.0) / (nd + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (nd + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / nd) / (nd + 4.0 + 2.0 * mu_eff_ / nd);
  c1_ = 2.0 / ((nd + 1.3) * (nd + 1.3) + mu_eff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((nd + 2.0) * (nd + 2.0) + mu_eff_));
  if (diagonal_) {
    // Diagonal covariance learns (n + 2) / 3 times faster.
    const double boost = (nd + 2.0) / 3.0;
    c1_ = std::min(1.0, c1_ * boost);
    cmu_ = std::min(1.0 - c1_, cmu_ * boost);
  }
  chi_n_ = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  mean_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_), 0.5);
  p_sigma_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  p_c_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  cov_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  basis_ = cov_;
  eigvals_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_));
}

Eigen::VectorXd CmaCore::sample(Rng& rng) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(n_));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  const Eigen::VectorXd dz = eigvals_.cwiseSqrt().cwiseProduct(z);
  if (diagonal_) return mean_ + sigma_ * dz;
  return mean_ + sigma_ * (basis_ * dz);
}

void CmaCore::update(const std::vector<Eigen::VectorXd>& ranked) {
  if (ranked.size() < weights_.size()) throw InvalidArgument("CMA update: fewer than mu samples");
  const double nd = static_cast<double>(n_);
  std::vector<Eigen::VectorXd> ys;
  Eigen::VectorXd y_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    ys.push_back((ranked[i] - mean_) / sigma_);
    y_w += weights_[i] * ys.back();
  }
  mean_ += sigma_ * y_w;

  Eigen::VectorXd c_inv_sqrt_y;
  if (diagonal_) {
    c_inv_sqrt_y = y_w.cwiseQuotient(eigvals_.cwiseSqrt());
  } else {
    c_inv_sqrt_y = basis_ * (basis_.transpose() * y_w).cwiseQuotient(eigvals_.cwiseSqrt());
  }
  p_sigma_ = (1.0 - c_sigma_) * p_sigma_ + std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * c_inv_sqrt_y;
  const double gen = static_cast<double>(generation_ + 1);
  const double ps_norm = p_sigma_.norm();
  const bool h_sigma =
      ps_norm / std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * gen)) < (1.4 + 2.0 / (nd + 1.0)) * chi_n_;
  p_c_ = (1.0 - c_c_) * p_c_ + (h_sigma ? std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) : 0.0) * y_w;
  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);

  const double keep = 1.0 + c1_ * delta_h - c1_ - cmu_;
  if (diagonal_) {
    Eigen::VectorXd diag = keep * cov_.diagonal() + c1_ * p_c_.cwiseAbs2();
    for (std::size_t i = 0; i < weights_.size(); ++i) diag += cmu_ * weights_[i] * ys[i].cwiseAbs2();
    cov_ = diag.asDiagonal();
  } else {
    Eigen::MatrixXd next = keep * cov_ + c1_ * p_c_ * p_c_.transpose();
    for (std::size_t i = 0; i < weights_.size(); ++i) next += cmu_ * weights_[i] * ys[i] * ys[i].transpose();
    cov_ = 0.5 * (next + next.transpose());
  }
  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
  sigma_ = std::clamp(sigma_, 1e-300, 1e6);
  ++generation_;
  decompose();
}

void CmaCore::decompose() {
  constexpr double kMinEig = 1e-300;
  if (diagonal_) {
    eigvals_ = cov_.diagonal().cwiseMax(kMinEig);
    cov_.diagonal() = eigvals_;
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
  eigvals_ = solver.eigenvalues().cwiseMax(kMinEig);
  basis_ = solver.eigenvectors();
}

// Mixed CMA -----------------------------------------------------------------

MixedCma::MixedCma(const SearchSpace& space, std::uint64_t seed, std::size_t lambda, double sigma0,
                   bool diagonal, std::string name)
    : Optimizer(space), name_(std::move(name)), rng_(derive_seed(seed, kOptimizerStream)) {
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    (space[i].is_categorical() ? cat_dims_ : cont_dims_).push_back(i);
  }
  lambda_ = lambda == 0 ? cma_default_lambda(space.dimension()) : lambda;
  if (lambda_ < 2) throw InvalidArgument(name_ + ": population must be >= 2");
  if (!cont_dims_.empty()) core_ = std::make_unique<CmaCore>(cont_dims_.size(), lambda_, diagonal, sigma0);

  std::size_t free_params = 0;
  for (const auto d : cat_dims_) {
    const auto k = static_cast<std::size_t>(space[d].arity);
    probs_.emplace_back(k, 1.0 / static_cast<double>(k));
    free_params += k - 1;
  }
  if (!cat_dims_.empty()) {
    std::size_t max_arity = 0;
    for (const auto d : cat_dims_) max_arity = std::max(max_arity, static_cast<std::size_t>(space[d].arity));
    floor_ = 1.0 / static_cast<double>(max_arity * std::max<std::size_t>(cat_dims_.size(), 2));
    // Weighted recombination over mu ranks; same mu_eff as the Gaussian part.
    const std::size_t mu = lambda_ / 2;
    double sum = 0.0, sq = 0.0;
    std::vector<double> w;
    for (std::size_t i = 1; i <= mu; ++i) {
      w.push_back(std::log((static_cast<double>(lambda_) + 1.0) / 2.0) - std::log(static_cast<double>(i)));
      sum += w.back();
    }
    for (auto x : w) sq += (x / sum) * (x / sum);
    eta_ = std::min(1.0, (1.0 / sq) / (2.0 + static_cast<double>(free_params)));
  }
}

std::vector<Configuration> MixedCma::do_ask(std::size_t count) {
  pending_x_.clear();
  pending_c_.clear();
  std::vector<Configuration> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Configuration c;
    c.values.assign(space().dimension(), 0.0);
    if (core_) {
      // The update sees the clamped point that is actually evaluated.
      Eigen::VectorXd x = core_->sample(rng_).cwiseMax(0.0).cwiseMin(1.0);
      for (std::size_t j = 0; j < cont_dims_.size(); ++j) {
        c.values[cont_dims_[j]] = from_unit(space()[cont_dims_[j]], x[static_cast<Eigen::Index>(j)]);
      }
      pending_x_.push_back(std::move(x));
    }
    std::vector<int> cats;
    for (std::size_t j = 0; j < cat_dims_.size(); ++j) {
      const double u = rng_.uniform();
      const auto& q = probs_[j];
      int choice = static_cast<int>(q.size()) - 1;
      double acc = 0.0;
      for (std::size_t m = 0; m < q.size(); ++m) {
        acc += q[m];
        if (u < acc) {
          choice = static_cast<int>(m);
          break;
        }
      }
      cats.push_back(choice);
      c.values[cat_dims_[j]] = static_cast<double>(choice);
    }
    pending_c_.push_back(std::move(cats));
    out.push_back(std::move(c));
  }
  return out;
}

void MixedCma::do_tell(std::span<const double> values) {
  const auto order = rank_descending(values);
  const std::size_t mu = lambda_ / 2;
  if (core_) {
    std::vector<Eigen::VectorXd> ranked;
    for (std::size_t i = 0; i < mu; ++i) ranked.push_back(pending_x_[order[i]]);
    core_->update(ranked);
  }
  if (!cat_dims_.empty()) {
    std::vector<double> w;
    double sum = 0.0;
    for (std::size_t i = 1; i <= mu; ++i) {
      w.push_back(std::log((static_cast<double>(lambda_) + 1.0) / 2.0) - std::log(static_cast<double>(i)));
      sum += w.back();
    }
    for (auto& x : w) x /= sum;
    for (std::size_t j = 0; j < cat_dims_.size(); ++j) {
      auto& q = probs_[j];
      std::vector<double> grad(q.size(), 0.0);
      for (std::size_t i = 0; i < mu; ++i) {
        const auto chosen = static_cast<std::size_t>(pending_c_[order[i]][j]);
        for (std::size_t m = 0; m < q.size(); ++m) grad[m] += w[i] * ((m == chosen ? 1.0 : 0.0) - q[m]);
      }
      for (std::size_t m = 0; m < q.size(); ++m) q[m] = std::max(q[m] + eta_ * grad[m], floor_);
      // Shrink the mass above the floor so the vector sums to one again.
      const double k_floor = floor_ * static_cast<double>(q.size());
      double excess = 0.0;
      for (const double p : q) excess += p - floor_;
      for (auto& p : q) p = floor_ + (p - floor_) * (1.0 - k_floor) / excess;
    }
  }
}

// TPE -----------------------------------------------------------------------

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// Truncated Gaussian mixture on [0, 1].
struct Parzen {
  std::vector<double> mu, sigma, mass;
  double weight = 0.0;  // equal component weights

  Parzen(std::vector<double> points) {
    const std::size_t n = points.size();
    std::vector<double> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    const double min_sigma = 1.0 / std::min(100.0, 1.0 + static_cast<double>(n));
    for (const double p : points) {
      auto it = std::lower_bound(sorted.begin(), sorted.end(), p);
      const auto idx = static_cast<std::size_t>(it - sorted.begin());
      const double left = idx == 0 ? p - 0.0 : p - sorted[idx - 1];
      const double right = idx + 1 >= n ? 1.0 - p : sorted[idx + 1] - p;
      mu.push_back(p);
      sigma.push_back(std::clamp(std::max(left, right), min_sigma, 1.0));
    }
    // Prior component.
    mu.push_back(0.5);
    sigma.push_back(1.0);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      mass.push_back(normal_cdf((1.0 - mu[k]) / sigma[k]) - normal_cdf((0.0 - mu[k]) / sigma[k]));
    }
    weight = 1.0 / static_cast<double>(mu.size());
  }

  double log_pdf(double x) const {
    double p = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double z = (x - mu[k]) / sigma[k];
      p += weight * kInvSqrt2Pi * std::exp(-0.5 * z * z) / (sigma[k] * mass[k]);
    }
    return std::log(std::max(p, 1e-300));
  }

  double sample(Rng& rng) const {
    const auto k = static_cast<std::size_t>(rng.below(mu.size()));
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double x = mu[k] + sigma[k] * rng.normal();
      if (x >= 0.0 && x <= 1.0) return x;
    }
    return std::clamp(mu[k], 0.0, 1.0);
  }
};

// Smoothed category frequencies: one pseudo-count per category.
struct CategoryDensity {
  std::vector<double> p;

  CategoryDensity(const std::vector<int>& observed, int arity) : p(static_cast<std::size_t>(arity), 1.0) {
    for (const int c : observed) p[static_cast<std::size_t>(c)] += 1.0;
    const double total = static_cast<double>(observed.size()) + static_cast<double>(arity);
    for (auto& x : p) x /= total;
  }
  double log_pdf(int c) const { return std::log(p[static_cast<std::size_t>(c)]); }
  int sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) {
      acc += p[m];
      if (u < acc) return static_cast<int>(m);
    }
    return static_cast<int>(p.size()) - 1;
  }
};

}  // namespace

Tpe::Tpe(const SearchSpace& space, std::uint64_t seed, std::size_t batch, double gamma, int n_candidates,
         int warmup)
    : Optimizer(space),
      rng_(derive_seed(seed, kOptimizerStream)),
      batch_(batch == 0 ? 8 : batch),
      gamma_(gamma),
      n_candidates_(n_candidates),
      warmup_(warmup) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("tpe: gamma must be in (0, 1)");
  if (n_candidates < 1) throw InvalidArgument("tpe: n_candidates must be >= 1");
  if (warmup < 2) throw InvalidArgument("tpe: warmup must be >= 2");
}

std::vector<Configuration> Tpe::do_ask(std::size_t count) {
  const auto& sp = space();
  const std::size_t dim = sp.dimension();
  asked_.clear();
  std::vector<Configuration> out;

  if (history_.size() < static_cast<std::size_t>(warmup_)) {
    for (std::size_t k = 0; k < count; ++k) {
      auto c = sample_uniform(sp, rng_);
      std::vector<double> u(dim);
      for (std::size_t d = 0; d < dim; ++d) u[d] = sp[d].is_categorical() ? c[d] : to_unit(sp[d], c[d]);
      asked_.push_back(std::move(u));
      out.push_back(std::move(c));
    }
    return out;
  }

  std::vector<std::size_t> order(history_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history_[a].value > history_[b].value; });
  const std::size_t n_good = tpe_good_count(history_.size(), gamma_);

  std::vector<Parzen> good_cont, bad_cont;
  std::vector<CategoryDensity> good_cat, bad_cat;
  std::vector<int> slot(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    if (sp[d].is_categorical()) {
      std::vector<int> g, b;
      for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_good ? g : b).push_back(static_cast<int>(history_[order[i]].u[d]));
      }
      slot[d] = static_cast<int>(good_cat.size());
      good_cat.emplace_back(g, sp[d].arity);
      bad_cat.emplace_back(b, sp[d].arity);
    } else {
      std::vector<double> g, b;
      for (std::size_t i = 0; i < order.size(); ++i) (i < n_good ? g : b).push_back(history_[order[i]].u[d]);
      slot[d] = static_cast<int>(good_cont.size());
      good_cont.emplace_back(std::move(g));
      bad_cont.emplace_back(std::move(b));
    }
  }

  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> best_u;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_candidates_; ++c) {
      std::vector<double> u(dim);
      double score = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const auto s = static_cast<std::size_t>(slot[d]);
        if (sp[d].is_categorical()) {
          const int cat = good_cat[s].sample(rng_);
          u[d] = cat;
          score += good_cat[s].log_pdf(cat) - bad_cat[s].log_pdf(cat);
        } else {
          u[d] = good_cont[s].sample(rng_);
          score += good_cont[s].log_pdf(u[d]) - bad_cont[s].log_pdf(u[d]);
        }
      }
      if (score > best_score) {
        best_score = score;
        best_u = std::move(u);
      }
    }
    Configuration c;
    c.values.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) c.values[d] = sp[d].is_categorical() ? best_u[d] : from_unit(sp[d], best_u[d]);
    asked_.push_back(std::move(best_u));
    out.push_back(std::move(c));
  }
  return out;
}

void Tpe::do_tell(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) history_.push_back({asked_[i], values[i]});
  asked_.clear();
}

// Differential evolution ----------------------------------------------------

DifferentialEvolution::DifferentialEvolution(const SearchSpace& space, std::uint64_t seed, std::size_t population,
                                             double f_lo, double f_hi, double crossover)
    : Optimizer(space),
      rng_(derive_seed(seed, kOptimizerStream)),
      pop_(population == 0 ? 64 : population),
      f_lo_(f_lo),
      f_hi_(f_hi),
      cr_(crossover) {
  if (pop_ < 4) throw InvalidArgument("de: population must be >= 4");
  if (!(f_lo >= 0.0 && f_lo <= f_hi && f_hi <= 2.0)) throw InvalidArgument("de: need 0 <= f_lo <= f_hi <= 2");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw InvalidArgument("de: crossover must be in [0, 1]");
}

Configuration DifferentialEvolution::to_config(const std::vector<double>& u) const {
  Configuration c;
  c.values.resize(u.size());
  for (std::size_t d = 0; d < u.size(); ++d) c.values[d] = from_unit(space()[d], u[d]);
  return c;
}

std::vector<Configuration> DifferentialEvolution::do_ask(std::size_t) {
  const std::size_t dim = space().dimension();
  trials_.assign(pop_, std::vector<double>(dim));
  if (members_.empty()) {
    // Latin hypercube: one sample per stratum per dimension.
    for (std::size_t d = 0; d < dim; ++d) {
      std::vector<std::size_t> strata(pop_);
      std::iota(strata.begin(), strata.end(), std::size_t{0});
      shuffle(strata, rng_);
      for (std::size_t i = 0; i < pop_; ++i) {
        trials_[i][d] = (static_cast<double>(strata[i]) + rng_.uniform()) / static_cast<double>(pop_);
      }
    }
  } else {
    const double f = rng_.uniform(f_lo_, f_hi_);
    const auto best = static_cast<std::size_t>(std::max_element(fitness_.begin(), fitness_.end()) - fitness_.begin());
    for (std::size_t i = 0; i < pop_; ++i) {
      std::size_t r1 = 0, r2 = 0;
      do r1 = rng_.below(pop_); while (r1 == i);
      do r2 = rng_.below(pop_); while (r2 == i || r2 == r1);
      const auto forced = rng_.below(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        const bool take = rng_.uniform() < cr_ || d == forced;
        const double mutant = members_[best][d] + f * (members_[r1][d] - members_[r2][d]);
        trials_[i][d] = take ? std::clamp(mutant, 0.0, 1.0) : members_[i][d];
      }
    }
  }
  std::vector<Configuration> out;
  out.reserve(pop_);
  for (const auto& t : trials_) out.push_back(to_config(t));
  return out;
}

void DifferentialEvolution::do_tell(std::span<const double> values) {
  if (members_.empty()) {
    members_ = trials_;
    fitness_.assign(values.begin(), values.end());
  } else {
    for (std::size_t i = 0; i < pop_; ++i) {
      if (values[i] >= fitness_[i]) {
        members_[i] = trials_[i];
        fitness_[i] = values[i];
      }
    }
  }
  ++generation_;
}

// Factory -------------------------------------------------------------------

nlohmann::json to_json(const OptimizerSpec& s) {
  return {{"name", s.name},   {"population", s.population}, {"sigma0", s.sigma0}, {"gamma", s.gamma},
          {"n_candidates", s.n_candidates}, {"warmup", s.warmup}, {"f_lo", s.f_lo},       {"f_hi", s.f_hi},
          {"crossover", s.crossover}};
}

OptimizerSpec optimizer_spec_from_json(const nlohmann::json& doc) {
  OptimizerSpec s;
  if (doc.is_string()) {
    s.name = doc.get<std::string>();
    return s;
  }
  try {
    s.name = doc.at("name").get<std::string>();
    s.population = doc.value("population", s.population);
    s.sigma0 = doc.value("sigma0", s.sigma0);
    s.gamma = doc.value("gamma", s.gamma);
    s.n_candidates = doc.value("n_candidates", s.n_candidates);
    s.warmup = doc.value("warmup", s.warmup);
    s.f_lo = doc.value("f_lo", s.f_lo);
    s.f_hi = doc.value("f_hi", s.f_hi);
    s.crossover = doc.value("crossover", s.crossover);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("optimizer spec: ") + e.what());
  }
  return s;
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, const SearchSpace& space, std::uint64_t seed) {
  const bool continuous_only = spec.name == "cma_es" || spec.name == "sep_cma" || spec.name == "de";
  if (continuous_only && space.has_categorical()) {
    throw InvalidArgument(spec.name + " needs a continuous-only space; '" + space.name() + "' has " +
                          std::to_string(space.num_categorical()) + " categorical dimensions");
  }
  if (spec.name == "random") return std::make_unique<RandomSearch>(space, seed, spec.population);
  if (spec.name == "cma_es") return std::make_unique<MixedCma>(space, seed, spec.population, spec.sigma0, false, "cma_es");
  if (spec.name == "sep_cma") return std::make_unique<MixedCma>(space, seed, spec.population, spec.sigma0, true, "sep_cma");
  if (spec.name == "mixed_cma") {
    return std::make_unique<MixedCma>(space, seed, spec.population, spec.sigma0, false, "mixed_cma");
  }
  if (spec.name == "tpe") {
    return std::make_unique<Tpe>(space, seed, spec.population, spec.gamma, spec.n_candidates, spec.warmup);
  }
  if (spec.name == "de") {
    return std::make_unique<DifferentialEvolution>(space, seed, spec.population, spec.f_lo, spec.f_hi, spec.crossover);
  }
  throw InvalidArgument("unknown optimizer '" + spec.name + "'");
}

}  // namespace mergebench
