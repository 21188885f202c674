#include "ergo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ergo {

MeanSe mean_and_se(const std::vector<double>& samples) {
  if (samples.empty()) throw validation_error("mean_and_se needs samples");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  MeanSe r;
  r.mean = sum / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(ss / (n * (n - 1.0)));
  }
  return r;
}

double wasserstein_p_1d(std::vector<double> a, std::vector<double> b, double p) {
  if (a.empty() || b.empty()) throw validation_error("wasserstein_p_1d needs samples");
  if (a.size() != b.size())
    throw validation_error("wasserstein_p_1d needs equal sample counts");
  if (p < 1.0) throw validation_error("wasserstein_p_1d needs p >= 1");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::pow(std::fabs(a[i] - b[i]), p);
  return std::pow(acc / static_cast<double>(a.size()), 1.0 / p);
}

std::vector<std::pair<double, double>> contraction_profile(const CouplingOutcome& outcome) {
  const double d0 = std::fabs(outcome.x0 - outcome.y0);
  if (d0 == 0.0) throw validation_error("contraction_profile needs x0 != y0");
  std::vector<std::pair<double, double>> prof;
  for (size_t k = 0; k < outcome.checkpoint_times.size(); ++k) {
    double sum = 0.0;
    for (std::int64_t p = 0; p < outcome.n_paths; ++p) sum += outcome.dist[outcome.idx(p, k)];
    prof.emplace_back(outcome.checkpoint_times[k],
                      sum / static_cast<double>(outcome.n_paths) / d0);
  }
  return prof;
}

DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& profile,
                        int skip_leading) {
  if (skip_leading < 0) throw validation_error("fit_decay_rate: skip_leading must be >= 0");
  DecayFit fit;
  for (size_t i = static_cast<size_t>(skip_leading); i < profile.size(); ++i) {
    const auto& [t, v] = profile[i];
    if (!(v > 0.0)) throw validation_error("fit_decay_rate needs positive values");
    fit.times.push_back(t);
    fit.log_distances.push_back(std::log(v));
  }
  const size_t n = fit.times.size();
  if (n < 3) throw validation_error("fit_decay_rate needs at least 3 points");

  double mt = 0.0, ml = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mt += fit.times[i];
    ml += fit.log_distances[i];
  }
  mt /= static_cast<double>(n);
  ml /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (fit.times[i] - mt) * (fit.times[i] - mt);
    sxy += (fit.times[i] - mt) * (fit.log_distances[i] - ml);
  }
  if (sxx == 0.0) throw validation_error("fit_decay_rate needs distinct times");
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.intercept = ml - slope * mt;

  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double pred = fit.intercept + slope * fit.times[i];
    ss_res += (fit.log_distances[i] - pred) * (fit.log_distances[i] - pred);
    ss_tot += (fit.log_distances[i] - ml) * (fit.log_distances[i] - ml);
  }
  fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  return fit;
}

std::pair<double, double> empirical_tv(const CouplingOutcome& outcome, size_t t_index) {
  if (t_index >= outcome.checkpoint_times.size())
    throw validation_error("empirical_tv: checkpoint index out of range");
  std::int64_t unequal = 0;
  for (std::int64_t p = 0; p < outcome.n_paths; ++p)
    if (!outcome.equal[outcome.idx(p, t_index)]) ++unequal;
  const double n = static_cast<double>(outcome.n_paths);
  const double est = static_cast<double>(unequal) / n;
  return {est, std::sqrt(est * (1.0 - est) / n)};
}

std::vector<MomentEstimate> sample_moments(const std::vector<double>& samples, int n_max) {
  if (n_max < 1) throw validation_error("sample_moments needs n_max >= 1");
  if (samples.empty()) throw validation_error("sample_moments needs samples");
  std::vector<MomentEstimate> out;
  std::vector<double> powers(samples.size(), 1.0);
  for (int n = 1; n <= n_max; ++n) {
    for (size_t i = 0; i < samples.size(); ++i) powers[i] *= samples[i];
    // The jackknife of a sample mean collapses to the classic standard error.
    const MeanSe ms = mean_and_se(powers);
    out.push_back({n, ms.mean, ms.se});
  }
  return out;
}

}  // namespace ergo
