#pragma once

#include <cstdint>

namespace qpburst
{
struct PoissonInterval
{
    double lower{0};
    double upper{0};
};

//! Exact (Garwood) two-sided interval on the mean of a Poisson count.
PoissonInterval poisson_interval(std::uint64_t count, double confidence = 0.95);

//! Natural log of the Poisson probability mass.
double poisson_log_pmf(std::uint64_t k, double mean);

//! P(X > k) for X ~ Poisson(mean)
double poisson_upper_tail(std::uint64_t k, double mean);

}  // namespace qpburst
