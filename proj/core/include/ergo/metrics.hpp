#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ergo/coupling.hpp"

namespace ergo {

struct DecayFit {
  std::vector<double> times;
  std::vector<double> log_distances;
  double rate = 0.0;       // negated least-squares slope of ln(value) on t
  double intercept = 0.0;  // ln(value) at t = 0 per the fit
  double r_squared = 0.0;
};

struct MomentEstimate {
  int n = 0;
  double value = 0.0;
  double std_error = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& samples);

// Exact p-Wasserstein distance between two empirical laws of equal size via
// sorted order statistics (the comonotone coupling is optimal in 1-D).
double wasserstein_p_1d(std::vector<double> a, std::vector<double> b, double p);

// (t, mean |X_t - Y_t| / |x0 - y0|): an empirical upper bound on the
// normalized transport distance between the two time-t laws.
std::vector<std::pair<double, double>> contraction_profile(const CouplingOutcome& outcome);

// OLS of ln(value) on t; skip_leading drops initial points when a prefactor
// (bound constant != 1) is expected.
DecayFit fit_decay_rate(const std::vector<std::pair<double, double>>& profile,
                        int skip_leading = 0);

// Fraction of unequal pairs at checkpoint t_index with its binomial standard
// error; an upper bound on the total variation distance.
std::pair<double, double> empirical_tv(const CouplingOutcome& outcome, size_t t_index);

// Raw moments 1..n_max with leave-one-out (jackknife) standard errors.
std::vector<MomentEstimate> sample_moments(const std::vector<double>& samples, int n_max);

}  // namespace ergo
