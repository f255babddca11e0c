#ifndef HCG_NUMTHEORY_HPP_INCLUDED
#define HCG_NUMTHEORY_HPP_INCLUDED

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace hcg
{
using BigInt      = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline constexpr int min_dimension = 3;
inline constexpr int max_dimension = 16;

/// Throws std::invalid_argument unless 3 <= d <= 16.
inline void check_dimension(int d)
{
    if (d < min_dimension || d > max_dimension)
        throw std::invalid_argument("dimension must satisfy 3 <= d <= 16, got d = "
                                    + std::to_string(d));
}

/// Number of children of every dyadic cube, 2^d.
inline std::uint64_t fan_out(int d)
{
    return std::uint64_t(1) << d;
}

/// Base-2^d digits of a non-negative integer, least significant first.
/// Zero has an empty digit list.
struct DigitVector
{
    std::vector<std::uint64_t> digits;
    std::uint64_t              base = 8;

    std::uint64_t value() const
    {
        std::uint64_t v = 0;
        for (auto it = digits.rbegin(); it != digits.rend(); ++it)
            v = v * base + *it;
        return v;
    }

    bool operator==(const DigitVector&) const = default;
};

inline DigitVector digits_base(std::uint64_t n, int d)
{
    check_dimension(d);
    DigitVector out;
    out.base = fan_out(d);
    while (n > 0)
    {
        out.digits.push_back(n % out.base);
        n /= out.base;
    }
    return out;
}

/// gamma(n) = sum_i c_i 2^{i(d-2)} over the base-2^d digits of n; gamma(0) = 0.
inline std::uint64_t gamma(std::uint64_t n, int d)
{
    check_dimension(d);
    const std::uint64_t base  = fan_out(d);
    std::uint64_t       scale = 1;
    std::uint64_t       acc   = 0;
    while (n > 0)
    {
        acc += (n % base) * scale;
        n /= base;
        scale <<= (d - 2);
    }
    return acc;
}

/// Smallest h with 2^{dh} >= n (exact integer comparison); h_0 = h_1 = 0.
inline unsigned base_level(std::uint64_t n, int d)
{
    check_dimension(d);
    unsigned      h   = 0;
    std::uint64_t cap = 1;
    while (cap < n)
    {
        ++h;
        // 2^{dh} would overflow 64 bits only past n's range.
        if (d * h >= 64)
            break;
        cap <<= d;
    }
    return h;
}

/// C_d = (2^{d-1} - 2) / (3 * 2^{d-2}).
struct DimConstant
{
    int         d;
    BigRational value;
};

inline DimConstant dim_constant(int d)
{
    check_dimension(d);
    BigInt num = (BigInt(1) << (d - 1)) - 2;
    BigInt den = BigInt(3) << (d - 2);
    return {d, BigRational(num, den)};
}

/// x^{(d-2)/d} in floating point, the comparison scale for the gamma bounds.
inline double growth_scale(std::uint64_t x, int d)
{
    return std::pow(static_cast<double>(x), static_cast<double>(d - 2) / d);
}

/// True when lhs <= rhs, allowing a relative slack of 1e-9 on the right side.
inline bool leq_with_slack(double lhs, double rhs)
{
    return lhs <= rhs * (1.0 + 1e-9) + 1e-12;
}

} // namespace hcg

#endif // HCG_NUMTHEORY_HPP_INCLUDED
