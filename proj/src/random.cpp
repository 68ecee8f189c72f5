#include "qpburst/random.hpp"

namespace qpburst
{
double Rng::normal()
{
    double u;
    double v;
    double s;
    do
    {
        u = 2 * uniform() - 1;
        v = 2 * uniform() - 1;
        s = u * u + v * v;
    } while (s >= 1 || s == 0);
    return u * std::sqrt(-2 * std::log(s) / s);
}

std::uint64_t Rng::poisson(double mean)
{
    if (!(mean > 0))
    {
        return 0;
    }
    if (mean < 30)
    {
        // Multiply uniforms until the product drops below exp(-mean)
        double const limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform_open0();
        while (prod > limit)
        {
            ++k;
            prod *= uniform_open0();
        }
        return k;
    }
    // Split large means into a sum of exponential inter-arrival counts
    std::uint64_t k = 0;
    double t = exponential(1.0);
    while (t < mean)
    {
        ++k;
        t += exponential(1.0);
    }
    return k;
}

std::uint64_t
derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index)
{
    SplitMix64 a(root ^ 0x6a09e667f3bcc909ull);
    std::uint64_t h = a();
    SplitMix64 b(h ^ (stream * 0xd1b54a32d192ed03ull));
    h = b();
    SplitMix64 c(h ^ (index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    return c();
}

}  // namespace qpburst
