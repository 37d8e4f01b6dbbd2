#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mlshe::stats {

// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

struct MeanError {
    double mean = 0.0;
    double std_error = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

MeanError mean_and_stderr(std::span<const double> values);

double median(std::vector<double> values);

// sup_x |F_n(x) - F(x)| for the empirical law of `samples`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct TwoSampleKS {
    double distance = 0.0;
    double p_value = 1.0;
};

TwoSampleKS ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace mlshe::stats
