#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace qpburst
{
//---------------------------------------------------------------------------//
/*!
 * SplitMix64 generator, used to expand seeds.
 */
class SplitMix64
{
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t operator()()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

//---------------------------------------------------------------------------//
/*!
 * xoshiro256** engine.
 *
 * Output is identical on every platform, unlike the standard distributions,
 * so all sampling helpers below are implemented directly on its bits.
 */
class Rng
{
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed)
    {
        SplitMix64 init(seed);
        for (auto& s : s_)
        {
            s = init();
        }
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()()
    {
        std::uint64_t const result = rotl(s_[1] * 5, 7) * 9;
        std::uint64_t const t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    //! Uniform on [0, 1)
    double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }

    //! Uniform on (0, 1]
    double uniform_open0() { return (((*this)() >> 11) + 1) * 0x1.0p-53; }

    //! Exponential waiting time; infinite for zero rate
    double exponential(double rate)
    {
        if (rate <= 0)
        {
            return std::numeric_limits<double>::infinity();
        }
        return -std::log(uniform_open0()) / rate;
    }

    //! Number of failures before the first success
    std::uint64_t geometric(double p)
    {
        if (p <= 0)
        {
            return std::numeric_limits<std::uint64_t>::max() / 2;
        }
        if (p >= 1)
        {
            return 0;
        }
        double const g = std::floor(std::log(uniform_open0())
                                    / std::log1p(-p));
        return g > 4e18 ? std::numeric_limits<std::uint64_t>::max() / 2
                        : static_cast<std::uint64_t>(g);
    }

    bool bernoulli(double p) { return uniform() < p; }

    //! Standard normal (polar method)
    double normal();

    //! Poisson variate
    std::uint64_t poisson(double mean);

  private:
    std::uint64_t s_[4];

    static std::uint64_t rotl(std::uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }
};

//---------------------------------------------------------------------------//
/*!
 * Derive an independent seed from a root seed and a counter pair.
 *
 * The result depends only on the arguments, so child seeds can be
 * generated in any order or in parallel.
 */
std::uint64_t
derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace qpburst
