#ifndef HCG_RNG_HPP_INCLUDED
#define HCG_RNG_HPP_INCLUDED

#include <cmath>
#include <cstdint>
#include <random>

namespace hcg
{
/// Reproducible random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64 initialised through std::seed_seq, both of
/// which are fully specified by the standard. Conversions to doubles and
/// bounded integers are done here rather than by <random> distributions,
/// whose algorithms are implementation-defined.
class RandomStream
{
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream), engine_(make_engine(seed, stream))
    {}

    std::uint64_t seed() const
    {
        return seed_;
    }
    std::uint64_t stream() const
    {
        return stream_;
    }

    std::uint64_t bits()
    {
        return engine_();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound), bound > 0, by rejection.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
        std::uint64_t       x;
        do
            x = engine_();
        while (x >= limit);
        return x % bound;
    }

    /// Standard normal draw (Box-Muller, one value per call).
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32), 0x68636721u};
        return std::mt19937_64(seq);
    }

    std::uint64_t   seed_;
    std::uint64_t   stream_;
    std::mt19937_64 engine_;
};

} // namespace hcg

#endif // HCG_RNG_HPP_INCLUDED
