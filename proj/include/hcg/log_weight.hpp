#ifndef HCG_LOG_WEIGHT_HPP_INCLUDED
#define HCG_LOG_WEIGHT_HPP_INCLUDED

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hcg
{
/// A non-negative real stored as its natural logarithm; -inf encodes zero.
class LogWeight
{
public:
    constexpr LogWeight() = default;

    static constexpr LogWeight from_log(double log_value)
    {
        LogWeight w;
        w.log_ = log_value;
        return w;
    }
    static LogWeight from_linear(double x)
    {
        return from_log(x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity());
    }
    static constexpr LogWeight zero()
    {
        return from_log(-std::numeric_limits<double>::infinity());
    }
    static constexpr LogWeight one()
    {
        return from_log(0.0);
    }

    constexpr double log() const
    {
        return log_;
    }
    double linear() const
    {
        return std::exp(log_);
    }
    bool is_zero() const
    {
        return log_ == -std::numeric_limits<double>::infinity();
    }

    friend LogWeight operator*(LogWeight a, LogWeight b)
    {
        if (a.is_zero() || b.is_zero())
            return zero();
        return from_log(a.log_ + b.log_);
    }
    friend LogWeight operator/(LogWeight a, LogWeight b)
    {
        return from_log(a.log_ - b.log_);
    }
    friend LogWeight operator+(LogWeight a, LogWeight b)
    {
        if (a.log_ < b.log_)
            std::swap(a, b);
        if (b.is_zero())
            return a;
        return from_log(a.log_ + std::log1p(std::exp(b.log_ - a.log_)));
    }
    LogWeight& operator*=(LogWeight o)
    {
        return *this = *this * o;
    }
    LogWeight& operator+=(LogWeight o)
    {
        return *this = *this + o;
    }

    friend bool operator==(LogWeight a, LogWeight b)
    {
        return a.log_ == b.log_;
    }
    friend auto operator<=>(LogWeight a, LogWeight b)
    {
        return a.log_ <=> b.log_;
    }

private:
    double log_ = -std::numeric_limits<double>::infinity();
};

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(sum exp(x_i)) with max shifting.
inline double log_sum_exp(std::span<const double> xs)
{
    double top = neg_inf;
    for (double x : xs)
        top = std::max(top, x);
    if (top == neg_inf)
        return neg_inf;
    double acc = 0;
    for (double x : xs)
        acc += std::exp(x - top);
    return top + std::log(acc);
}

/// log n!: exact summation of logs below the cache limit, lgamma above it.
inline double log_factorial(std::uint64_t n)
{
    constexpr std::uint64_t cached = 10000;
    static const std::vector<double> table = [] {
        std::vector<double> t(cached + 1, 0.0);
        long double         acc = 0;
        for (std::uint64_t i = 2; i <= cached; ++i)
        {
            acc += std::log(static_cast<long double>(i));
            t[i] = static_cast<double>(acc);
        }
        return t;
    }();
    if (n <= cached)
        return table[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

inline double log_binomial(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return neg_inf;
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

} // namespace hcg

#endif // HCG_LOG_WEIGHT_HPP_INCLUDED
