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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "mergebench/rng.hpp"
#include "mergebench/search_space.hpp"

namespace mergebench {

/// Ask/tell black-box maximizer.
///
/// ask() hands out a batch and tell() must then receive exactly that batch,
/// in order, with one objective value per configuration. Calling ask() with a
/// batch outstanding, or tell() with anything else, throws InvalidArgument.
class Optimizer {
 public:
  explicit Optimizer(SearchSpace space) : space_(std::move(space)) {}
  virtual ~Optimizer() = default;

  Optimizer(const Optimizer&) = delete;
  Optimizer& operator=(const Optimizer&) = delete;

  virtual std::string name() const = 0;
  /// Natural batch: population for generation-based methods.
  virtual std::size_t batch_size() const = 0;

  std::vector<Configuration> ask() { return ask(batch_size()); }
  std::vector<Configuration> ask(std::size_t count);
  void tell(std::span<const Configuration> configs, std::span<const double> values);

  const SearchSpace& space() const { return space_; }
  std::size_t pending() const { return pending_.size(); }

 protected:
  /// Generation-based optimizers only accept count == batch_size().
  virtual bool fixed_batch() const { return false; }
  virtual std::vector<Configuration> do_ask(std::size_t count) = 0;
  /// values[i] belongs to the i-th configuration of the last ask.
  virtual void do_tell(std::span<const double> values) = 0;

 private:
  SearchSpace space_;
  std::vector<Configuration> pending_;
};

struct OptimizerSpec {
  std::string name = "random";  // random | cma_es | sep_cma | tpe | de | mixed_cma
  /// lambda for the CMA family, population for DE, batch for TPE and random
  /// search. 0 selects the method's default.
  std::size_t population = 0;
  double sigma0 = 0.3;  // initial step size as a fraction of each range
  double gamma = 0.1;
  int n_candidates = 24;
  int warmup = 20;
  double f_lo = 0.5;
  double f_hi = 1.0;
  double crossover = 0.7;

  bool operator==(const OptimizerSpec&) const = default;
};

nlohmann::json to_json(const OptimizerSpec& spec);
OptimizerSpec optimizer_spec_from_json(const nlohmann::json& doc);

/// Throws InvalidArgument for unknown names or spaces the method cannot handle
/// (categorical dimensions for cma_es, sep_cma and de).
std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, const SearchSpace& space,
                                          std::uint64_t seed);

/// Default CMA population 4 + floor(3 ln n).
std::size_t cma_default_lambda(std::size_t n);

/// Good-set size ceil(gamma * n) used by TPE, at most n - 1 for n >= 2.
std::size_t tpe_good_count(std::size_t n, double gamma);

// Concrete optimizers, exposed for tests and introspection.

class RandomSearch final : public Optimizer {
 public:
  RandomSearch(const SearchSpace& space, std::uint64_t seed, std::size_t batch = 1);
  std::string name() const override { return "random"; }
  std::size_t batch_size() const override { return batch_; }

 protected:
  std::vector<Configuration> do_ask(std::size_t count) override;
  void do_tell(std::span<const double>) override {}

 private:
  Rng rng_;
  std::size_t batch_;
};

/// Gaussian search distribution state of a CMA-ES run over normalized
/// coordinates. Positive recombination weights only.
class CmaCore {
 public:
  CmaCore(std::size_t n, std::size_t lambda, bool diagonal, double sigma0);

  std::size_t dimension() const { return n_; }
  std::size_t lambda() const { return lambda_; }
  std::size_t mu() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double mu_eff() const { return mu_eff_; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::VectorXd& eigenvalues() const { return eigvals_; }
  std::size_t generation() const { return generation_; }
  double c1() const { return c1_; }
  double cmu() const { return cmu_; }

  /// x = mean + sigma * B D z.
  Eigen::VectorXd sample(Rng& rng) const;
  /// `ranked` holds the mu best samples, best first.
  void update(const std::vector<Eigen::VectorXd>& ranked);

 private:
  void decompose();

  std::size_t n_;
  std::size_t lambda_;
  bool diagonal_;
  std::vector<double> weights_;
  double mu_eff_;
  double c_sigma_, d_sigma_, c_c_, c1_, cmu_, chi_n_;
  double sigma_;
  Eigen::VectorXd mean_, p_sigma_, p_c_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd basis_;   // eigenvectors (full) or unused (diagonal)
  Eigen::VectorXd eigvals_;  // eigenvalues of C
  std::size_t generation_ = 0;
};

/// Joint sampler over a mixed space: CMA-ES on the continuous dimensions and
/// one probability vector per categorical dimension. With no categorical
/// dimensions and diagonal == false this is plain CMA-ES; with diagonal ==
/// true it is Sep-CMA.
class MixedCma final : public Optimizer {
 public:
  MixedCma(const SearchSpace& space, std::uint64_t seed, std::size_t lambda, double sigma0,
           bool diagonal, std::string name);

  std::string name() const override { return name_; }
  std::size_t batch_size() const override { return lambda_; }

  const CmaCore* gaussian() const { return core_ ? core_.get() : nullptr; }
  const std::vector<std::vector<double>>& category_probs() const { return probs_; }
  double probability_floor() const { return floor_; }
  double categorical_rate() const { return eta_; }

 protected:
  bool fixed_batch() const override { return true; }
  std::vector<Configuration> do_ask(std::size_t count) override;
  void do_tell(std::span<const double> values) override;

 private:
  std::string name_;
  Rng rng_;
  std::size_t lambda_;
  std::vector<std::size_t> cont_dims_, cat_dims_;
  std::unique_ptr<CmaCore> core_;
  std::vector<std::vector<double>> probs_;
  double floor_ = 0.0;
  double eta_ = 0.0;
  std::vector<Eigen::VectorXd> pending_x_;
  std::vector<std::vector<int>> pending_c_;
};

class Tpe final : public Optimizer {
 public:
  Tpe(const SearchSpace& space, std::uint64_t seed, std::size_t batch, double gamma, int n_candidates,
      int warmup);

  std::string name() const override { return "tpe"; }
  std::size_t batch_size() const override { return batch_; }
  std::size_t history_size() const { return history_.size(); }

 protected:
  std::vector<Configuration> do_ask(std::size_t count) override;
  void do_tell(std::span<const double> values) override;

 private:
  struct Observation {
    std::vector<double> u;  // normalized continuous / category index
    double value;
  };
  Rng rng_;
  std::size_t batch_;
  double gamma_;
  int n_candidates_;
  int warmup_;
  std::vector<Observation> history_;
  std::vector<std::vector<double>> asked_;
};

/// best/1/bin differential evolution with per-generation dithered F and
/// greedy (ties replace) selection. Latin hypercube initial population.
class DifferentialEvolution final : public Optimizer {
 public:
  DifferentialEvolution(const SearchSpace& space, std::uint64_t seed, std::size_t population, double f_lo,
                        double f_hi, double crossover);

  std::string name() const override { return "de"; }
  std::size_t batch_size() const override { return pop_; }
  const std::vector<std::vector<double>>& population() const { return members_; }
  const std::vector<double>& fitness() const { return fitness_; }
  std::size_t generation() const { return generation_; }

 protected:
  bool fixed_batch() const override { return true; }
  std::vector<Configuration> do_ask(std::size_t count) override;
  void do_tell(std::span<const double> values) override;

 private:
  Configuration to_config(const std::vector<double>& u) const;

  Rng rng_;
  std::size_t pop_;
  double f_lo_, f_hi_, cr_;
  std::vector<std::vector<double>> members_;  // normalized coordinates
  std::vector<double> fitness_;
  std::vector<std::vector<double>> trials_;
  std::size_t generation_ = 0;
};

}  // namespace mergebench
