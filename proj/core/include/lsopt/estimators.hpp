#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsopt/classification.hpp"
#include "lsopt/optimizer.hpp"
#include "lsopt/oracle.hpp"
#include "lsopt/synthetic.hpp"

namespace lsopt {

enum class FStarProvenance { kExact, kBestFound };

// Every constant the convergence theory consumes.
struct ProblemConstants {
  double L = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double delta = 0.0;
  double f_at_w0 = 0.0;
  double f_star = 0.0;
  FStarProvenance f_star_provenance = FStarProvenance::kExact;

  void validate() const;
  std::string to_key_value() const;
};

// The smoothed-gradient second moment about the full gradient and its
// convex-combination bound (1-theta)*sigma2 + theta*delta*sigma2.
struct VarianceReport {
  double theta = 0.0;
  double sigma2_hat = 0.0;
  double delta_hat = 0.0;
  double smoothed_second_moment = 0.0;
  double moment_std_error = 0.0;  // 0 when the moment is an exact enumeration
  double combination_bound = 0.0;
  Eigen::VectorXd probe_point;

  double slack() const { return combination_bound - smoothed_second_moment; }
  std::string to_key_value() const;
};

// Exact population variance of the one-hot stochastic gradient about the
// full gradient: (1/n) sum_i ||g_i - grad F||^2.
double estimate_sigma2(const ClassificationOracle& oracle, const Eigen::VectorXd& w);

// Exact ratio delta = [(1/n) sum_i ||g_i(hat) - grad F||^2] / sigma2, where
// g_i(hat) uses the smoothing distribution alone.
double estimate_delta(const ClassificationOracle& oracle, const Eigen::VectorXd& w,
                      SmoothingSource source,
                      const std::optional<LabelDistribution>& fixed = std::nullopt);

// Axis-aligned sampling region.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  void validate() const;
};

// Gradient-Lipschitz estimate: 1.1 times the max of
// ||grad F(w) - grad F(u)|| / ||w - u|| over sampled pairs. Oracles with an
// analytic constant return it directly after checking the sampled ratio
// stays below it.
double estimate_L(const Oracle& oracle, const Box& region, int samples, std::uint64_t seed);

// Infimum over probes of ||grad F(w)||^2 / (2 (F(w) - f_star)); probes with
// F within 1e-12 of f_star are skipped.
double estimate_mu(const Oracle& oracle, const std::vector<Eigen::VectorXd>& probes,
                   double f_star);

// Stationarity bound for single-stage SGD with smoothed labels at
// eta = 1/L, theta = 1/(1+delta): 2 f0 / (eta T) + 2 delta sigma2.
double lsr_stationarity_bound(double f0, double eta, long long T, double delta, double sigma2);

// Stationarity bound for the one-hot baseline: 2 f0 / (eta T) + eta L sigma2,
// valid for eta <= 1/L.
double baseline_stationarity_bound(double f0, double eta, long long T, double L, double sigma2);

// Derives the two-stage schedule from the problem constants:
// theta = 1/(1+delta), eta1 = 1/L,
// T1 = ceil(log(2 mu F(w0) (1+delta) / (2 delta sigma2)) / (eta1 mu)),
// eta2 = eps^2 / (2 L sigma2), T2 = ceil(8 delta sigma2 / (mu eta2 eps^2)).
// Requires the hypothesis sigma2 * delta / mu <= F(w0).
TslaSchedule tsla_schedule(const ProblemConstants& constants, double epsilon);

// Whether smoothing at theta = 1/(1+delta) can reach the eps^2 stationarity
// level (delta <= eps^2 / (4 sigma2)) or stalls at the floor 4 delta sigma2.
enum class Regime { kConvergesWithLsr, kLsrFloor };
struct RegimeResult {
  Regime regime = Regime::kConvergesWithLsr;
  double floor = 0.0;  // 4 delta sigma2 when kLsrFloor
};
RegimeResult classify_regime(double delta, double epsilon, double sigma2);

// Measures the smoothed-gradient second moment about grad F(w) and compares
// it with the convex-combination bound. Finite datasets are enumerated
// exactly (draws ignored); synthetic oracles use `draws` Monte-Carlo samples
// (at least 1000). theta may be 1 here so the hat-only endpoint is checkable.
VarianceReport smoothed_moment_report(const Oracle& oracle, const Eigen::VectorXd& w,
                                      const SmoothingSpec& spec, long long draws,
                                      std::uint64_t seed);

}  // namespace lsopt
