#include "lsopt/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lsopt/errors.hpp"
#include "lsopt/parallel.hpp"

namespace lsopt {

namespace {

std::string kv(const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(key) + " = " + buf + "\n";
}

}  // namespace

void ProblemConstants::validate() const {
  if (!(L > 0.0)) throw InvalidInputError("constants need L > 0");
  if (!(mu > 0.0)) throw InvalidInputError("constants need mu > 0");
  if (mu > L) throw InvalidInputError("constants need mu <= L");
  if (!(sigma2 >= 0.0)) throw InvalidInputError("constants need sigma2 >= 0");
  if (!(delta >= 0.0)) throw InvalidInputError("constants need delta >= 0");
  if (f_at_w0 < f_star) throw InvalidInputError("constants need f_at_w0 >= f_star");
}

std::string ProblemConstants::to_key_value() const {
  std::string out;
  out += kv("L", L);
  out += kv("mu", mu);
  out += kv("sigma2", sigma2);
  out += kv("delta", delta);
  out += kv("f_at_w0", f_at_w0);
  out += kv("f_star", f_star);
  out += "f_star_provenance = ";
  out += (f_star_provenance == FStarProvenance::kExact ? "exact" : "best_found");
  out += "\n";
  return out;
}

std::string VarianceReport::to_key_value() const {
  std::string out;
  out += kv("theta", theta);
  out += kv("sigma2_hat", sigma2_hat);
  out += kv("delta_hat", delta_hat);
  out += kv("smoothed_second_moment", smoothed_second_moment);
  out += kv("moment_std_error", moment_std_error);
  out += kv("combination_bound", combination_bound);
  out += kv("slack", slack());
  out += "probe_point =";
  char buf[64];
  for (Eigen::Index i = 0; i < probe_point.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", probe_point[i]);
    out += buf;
  }
  out += "\n";
  return out;
}

double estimate_sigma2(const ClassificationOracle& oracle, const Eigen::VectorXd& w) {
  const int n = oracle.data().n();
  if (n < 1) throw InvalidInputError("dataset is empty");
  Eigen::VectorXd full = oracle.gradient(w);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += (oracle.example_gradient(w, i, LabelMode::one_hot()) - full).squaredNorm();
  }
  return sum / n;
}

double estimate_delta(const ClassificationOracle& oracle, const Eigen::VectorXd& w,
                      SmoothingSource source, const std::optional<LabelDistribution>& fixed) {
  double sigma2 = estimate_sigma2(oracle, w);
  if (!(sigma2 > 0.0)) {
    throw DegenerateProblemError("delta is undefined because sigma2 = 0 at this point");
  }
  LabelMode hat = LabelMode::hat_only(source);
  hat.spec.fixed = fixed;
  const int n = oracle.data().n();
  Eigen::VectorXd full = oracle.gradient(w);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += (oracle.example_gradient(w, i, hat) - full).squaredNorm();
  }
  return (sum / n) / sigma2;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw InvalidInputError("box bounds must be nonempty and of equal dimension");
  }
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!(hi[j] >= lo[j])) throw InvalidInputError("box has hi < lo in coordinate " +
                                                   std::to_string(j));
  }
}

double estimate_L(const Oracle& oracle, const Box& region, int samples, std::uint64_t seed) {
  region.validate();
  if (region.lo.size() != oracle.dim()) {
    throw InvalidInputError("box dimension does not match oracle");
  }
  if (samples < 2) throw InvalidInputError("estimate_L needs samples >= 2");

  RngStream rng(seed, 0);
  auto draw_point = [&] {
    Eigen::VectorXd p(region.lo.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      p[j] = region.lo[j] + (region.hi[j] - region.lo[j]) * rng.uniform();
    }
    return p;
  };

  double max_ratio = -1.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd w = draw_point();
    Eigen::VectorXd u = draw_point();
    double dist = (w - u).norm();
    if (dist == 0.0) continue;
    double ratio = (oracle.gradient(w) - oracle.gradient(u)).norm() / dist;
    if (ratio > max_ratio) max_ratio = ratio;
  }
  if (max_ratio < 0.0) {
    throw InvalidInputError("estimate_L: every sampled pair was degenerate");
  }
  if (auto analytic = oracle.analytic_smoothness()) {
    if (max_ratio > *analytic * (1.0 + 1e-9)) {
      throw InvalidInputError("sampled Lipschitz ratio exceeds the analytic constant");
    }
    return *analytic;
  }
  return 1.1 * max_ratio;
}

double estimate_mu(const Oracle& oracle, const std::vector<Eigen::VectorXd>& probes,
                   double f_star) {
  double best = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& p : probes) {
    double gap = oracle.objective(p) - f_star;
    if (gap <= 1e-12) continue;
    double ratio = oracle.gradient(p).squaredNorm() / (2.0 * gap);
    if (ratio < best) best = ratio;
  }
  if (!std::isfinite(best)) {
    throw InvalidInputError("estimate_mu: every probe sits at the optimal value");
  }
  return best;
}

double lsr_stationarity_bound(double f0, double eta, long long T, double delta, double sigma2) {
  if (!(eta > 0.0)) throw InvalidInputError("bound needs eta > 0");
  if (T < 1) throw InvalidInputError("bound needs T >= 1");
  return 2.0 * f0 / (eta * static_cast<double>(T)) + 2.0 * delta * sigma2;
}

double baseline_stationarity_bound(double f0, double eta, long long T, double L, double sigma2) {
  if (!(eta > 0.0)) throw InvalidInputError("bound needs eta > 0");
  if (T < 1) throw InvalidInputError("bound needs T >= 1");
  if (!(L > 0.0)) throw InvalidInputError("bound needs L > 0");
  if (eta > 1.0 / L) {
    throw InvalidInputError("baseline bound requires eta <= 1/L");
  }
  return 2.0 * f0 / (eta * static_cast<double>(T)) + eta * L * sigma2;
}

namespace {

long long ceil_to_count(double x, const char* what) {
  if (!(x >= 0.0)) throw InvalidInputError(std::string(what) + " is negative");
  if (!(x < 9.0e18)) throw InvalidInputError(std::string(what) + " overflows the iteration budget");
  return static_cast<long long>(std::ceil(x));
}

}  // namespace

TslaSchedule tsla_schedule(const ProblemConstants& constants, double epsilon) {
  constants.validate();
  if (!(epsilon > 0.0)) throw InvalidInputError("tsla_schedule needs epsilon > 0");
  if (!(constants.delta > 0.0) || !(constants.sigma2 > 0.0)) {
    throw DegenerateProblemError(
        "tsla_schedule needs delta > 0 and sigma2 > 0; run the one-hot baseline instead");
  }
  const double hypothesis = constants.sigma2 * constants.delta / constants.mu;
  if (hypothesis > constants.f_at_w0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "schedule hypothesis sigma2*delta/mu <= F(w0) fails: %.17g > %.17g", hypothesis,
                  constants.f_at_w0);
    throw ScheduleInfeasibleError(buf);
  }

  TslaSchedule s;
  s.theta = 1.0 / (1.0 + constants.delta);
  s.eta1 = 1.0 / constants.L;
  const double log_arg = 2.0 * constants.mu * constants.f_at_w0 * (1.0 + constants.delta) /
                         (2.0 * constants.delta * constants.sigma2);
  s.T1 = log_arg <= 1.0 ? 0 : ceil_to_count(std::log(log_arg) / (s.eta1 * constants.mu), "T1");
  s.eta2 = epsilon * epsilon / (2.0 * constants.L * constants.sigma2);
  s.T2 = ceil_to_count(
      8.0 * constants.delta * constants.sigma2 / (constants.mu * s.eta2 * epsilon * epsilon),
      "T2");
  s.validate();
  return s;
}

RegimeResult classify_regime(double delta, double epsilon, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInputError("classify_regime needs sigma2 > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidInputError("classify_regime needs epsilon in (0,1)");
  }
  if (!(delta >= 0.0)) throw InvalidInputError("classify_regime needs delta >= 0");
  RegimeResult result;
  if (delta <= epsilon * epsilon / (4.0 * sigma2)) {
    result.regime = Regime::kConvergesWithLsr;
    result.floor = 0.0;
  } else {
    result.regime = Regime::kLsrFloor;
    result.floor = 4.0 * delta * sigma2;
  }
  return result;
}

namespace {

VarianceReport exact_moment_report(const ClassificationOracle& oracle, const Eigen::VectorXd& w,
                                   const SmoothingSpec& spec) {
  const int n = oracle.data().n();
  Eigen::VectorXd full = oracle.gradient(w);

  LabelMode hat = LabelMode::hat_only(spec.source);
  hat.spec.fixed = spec.fixed;

  double sig_sum = 0.0, hat_sum = 0.0, smooth_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g_one = oracle.example_gradient(w, i, LabelMode::one_hot());
    Eigen::VectorXd g_hat = oracle.example_gradient(w, i, hat);
    sig_sum += (g_one - full).squaredNorm();
    hat_sum += (g_hat - full).squaredNorm();
    // The single-example gradient is affine in the label, so the smoothed
    // gradient is the same convex combination; this form stays valid at the
    // theta = 1 endpoint.
    Eigen::VectorXd g_ls = (1.0 - spec.theta) * g_one + spec.theta * g_hat;
    smooth_sum += (g_ls - full).squaredNorm();
  }

  VarianceReport report;
  report.theta = spec.theta;
  report.sigma2_hat = sig_sum / n;
  if (!(report.sigma2_hat > 0.0)) {
    throw DegenerateProblemError("delta is undefined because sigma2 = 0 at this point");
  }
  report.delta_hat = (hat_sum / n) / report.sigma2_hat;
  report.smoothed_second_moment = smooth_sum / n;
  report.combination_bound = (1.0 - spec.theta) * report.sigma2_hat +
                             spec.theta * report.delta_hat * report.sigma2_hat;
  report.probe_point = w;
  return report;
}

VarianceReport monte_carlo_moment_report(const SyntheticOracle& oracle, const Eigen::VectorXd& w,
                                         const SmoothingSpec& spec, long long draws,
                                         std::uint64_t seed) {
  if (draws < 1000) {
    throw InvalidInputError("synthetic moment verification needs at least 1000 draws");
  }
  const NoiseSpec& noise = oracle.noise();
  Eigen::VectorXd full = oracle.gradient(w);

  const long long chunk_size = 8192;
  const long long chunks = (draws + chunk_size - 1) / chunk_size;
  std::vector<double> partial(static_cast<size_t>(chunks), 0.0);
  std::vector<double> partial_sq(static_cast<size_t>(chunks), 0.0);
  parallel_for(chunks, [&](long long c) {
    RngStream rng(seed, static_cast<std::uint64_t>(c));
    long long begin = c * chunk_size;
    long long count = std::min(chunk_size, draws - begin);
    double sum = 0.0, sum_sq = 0.0;
    for (long long k = 0; k < count; ++k) {
      Eigen::VectorXd g = noisy_gradient(oracle.problem(), noise, w, NoiseMode::kSmoothed,
                                         spec.theta, rng);
      double v = (g - full).squaredNorm();
      sum += v;
      sum_sq += v * v;
    }
    partial[static_cast<size_t>(c)] = sum;
    partial_sq[static_cast<size_t>(c)] = sum_sq;
  });
  double total = 0.0, total_sq = 0.0;
  for (double p : partial) total += p;
  for (double p : partial_sq) total_sq += p;

  VarianceReport report;
  report.theta = spec.theta;
  report.sigma2_hat = noise.sigma2;
  report.delta_hat = noise.delta;
  report.smoothed_second_moment = total / static_cast<double>(draws);
  double var = total_sq / static_cast<double>(draws) -
               report.smoothed_second_moment * report.smoothed_second_moment;
  if (var < 0.0) var = 0.0;
  report.moment_std_error = std::sqrt(var / static_cast<double>(draws));
  report.combination_bound =
      (1.0 - spec.theta) * noise.sigma2 + spec.theta * noise.delta * noise.sigma2;
  report.probe_point = w;
  return report;
}

}  // namespace

VarianceReport smoothed_moment_report(const Oracle& oracle, const Eigen::VectorXd& w,
                                      const SmoothingSpec& spec, long long draws,
                                      std::uint64_t seed) {
  if (!(spec.theta >= 0.0 && spec.theta <= 1.0)) {
    throw InvalidInputError("moment report needs theta in [0,1]");
  }
  if (spec.source == SmoothingSource::kFixed && !spec.fixed.has_value()) {
    throw InvalidInputError("fixed smoothing source needs a distribution");
  }
  if (w.size() != oracle.dim()) {
    throw InvalidInputError("probe point dimension does not match oracle");
  }
  if (const auto* cls = dynamic_cast<const ClassificationOracle*>(&oracle)) {
    return exact_moment_report(*cls, w, spec);
  }
  if (const auto* syn = dynamic_cast<const SyntheticOracle*>(&oracle)) {
    return monte_carlo_moment_report(*syn, w, spec, draws, seed);
  }
  throw InvalidInputError("moment report supports classification and synthetic oracles only");
}

}  // namespace lsopt
