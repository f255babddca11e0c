#ifndef HCG_GROUNDSTATE_HPP_INCLUDED
#define HCG_GROUNDSTATE_HPP_INCLUDED

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcg/log_weight.hpp"
#include "hcg/numtheory.hpp"
#include "hcg/partition.hpp"
#include "hcg/rng.hpp"

namespace hcg
{
/// Raised when an exact big-integer result would exceed the caller's budget.
class BudgetError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

namespace detail
{
    /// Exact (numerator, denominator) for L_n, D_n written over 3 * 2^{d-2}:
    ///   (C_d + 2) * 3 * 2^{d-2} = 2^{d+1} - 2,   C_d * 3 * 2^{d-2} = 2^{d-1} - 2.
    struct EnergyScale
    {
        __int128 lead;   // 2^{d+1} - 2
        __int128 digits; // 2^{d-1} - 2
        __int128 denom;  // 3 * 2^{d-2}
        explicit EnergyScale(int d)
            : lead((__int128(1) << (d + 1)) - 2), digits((__int128(1) << (d - 1)) - 2),
              denom(__int128(3) << (d - 2))
        {}
    };

    inline std::int64_t exact_quotient(__int128 num, __int128 den, const char* what)
    {
        if (num % den != 0)
            throw std::logic_error(std::string(what) + " is not integral");
        const __int128 q = num / den;
        if (q > INT64_MAX || q < INT64_MIN)
            throw std::overflow_error(std::string(what) + " exceeds 64 bits");
        return static_cast<std::int64_t>(q);
    }
} // namespace detail

/// L_n = (C_d+2) n(n-1)/2 - C_d sum_{m=1}^{n-1} gamma(m), evaluated in exact
/// rationals; a non-integral value is a hard failure.
inline BigInt ground_energy(std::uint64_t n, int d)
{
    check_dimension(d);
    if (n <= 1)
        return 0;
    BigInt digit_sum = 0;
    for (std::uint64_t m = 1; m < n; ++m)
        digit_sum += gamma(m, d);
    const BigRational c   = dim_constant(d).value;
    const BigInt      nn  = BigInt(n) * (n - 1);
    const BigRational val = (c + 2) * BigRational(nn, 2) - c * BigRational(digit_sum);
    if (denominator(val) != 1)
        throw std::logic_error("ground energy is not integral for n = " + std::to_string(n));
    return numerator(val);
}

/// D_n by the digit closed form (C_d + 2) n - C_d gamma(n).
inline std::int64_t energy_increment_closed(std::uint64_t n, int d)
{
    check_dimension(d);
    const detail::EnergyScale s(d);
    const __int128 num = s.lead * __int128(n) - s.digits * __int128(gamma(n, d));
    return detail::exact_quotient(num, s.denom, "energy increment");
}

/// D_n by the recursion D_n = 2^{d-2} D_{floor(n/2^d)} + 2 (n - floor(n/2^d)), D_0 = 0.
inline std::int64_t energy_increment_recursive(std::uint64_t n, int d)
{
    check_dimension(d);
    if (n == 0)
        return 0;
    const std::uint64_t q = n >> d;
    return (energy_increment_recursive(q, d) << (d - 2)) + 2 * static_cast<std::int64_t>(n - q);
}

/// D_n = L_{n+1} - L_n; the closed form and the recursion are cross-checked.
inline std::int64_t energy_increment(std::uint64_t n, int d)
{
    const std::int64_t closed = energy_increment_closed(n, d);
    if (closed != energy_increment_recursive(n, d))
        throw std::logic_error("energy increment closed form disagrees with recursion at n = "
                               + std::to_string(n));
    return closed;
}

/// L_0..L_N and D_0..D_{N-1} as exact 64-bit integers.
class GroundEnergyTable
{
public:
    GroundEnergyTable(int d, std::uint64_t max_n) : d_(d)
    {
        check_dimension(d);
        const detail::EnergyScale s(d);
        energy_.assign(max_n + 1, 0);
        increment_.assign(max_n, 0);
        __int128 digit_sum = 0; // sum_{m=1}^{n-1} gamma(m)
        for (std::uint64_t n = 0; n <= max_n; ++n)
        {
            if (n >= 2)
            {
                digit_sum += gamma(n - 1, d);
                const __int128 pairs = __int128(n) * (n - 1) / 2;
                energy_[n] = detail::exact_quotient(s.lead * pairs - s.digits * digit_sum, s.denom,
                                                    "ground energy");
            }
            if (n < max_n)
                increment_[n] = energy_increment_closed(n, d);
        }
    }

    int dimension() const
    {
        return d_;
    }
    std::uint64_t max_n() const
    {
        return energy_.size() - 1;
    }
    std::int64_t energy(std::uint64_t n) const
    {
        return energy_.at(n);
    }
    std::int64_t increment(std::uint64_t n) const
    {
        return increment_.at(n);
    }

private:
    int                       d_;
    std::vector<std::int64_t> energy_;
    std::vector<std::int64_t> increment_;
};

// ---------------------------------------------------------------------------
// Ground-state trees

/// Visits every node strictly below `cube` of a ground-state subtree holding
/// m points: children get floor(m/2^d) or that plus one, recursively until
/// counts are <= 1. With rng == nullptr the surplus goes to the
/// lexicographically first children; otherwise to a uniform random subset.
/// visit(const DyadicCube&, std::uint64_t count) is called for positive counts.
template <class Visit>
void grow_ground_subtree(const DyadicCube& cube, std::uint64_t m, RandomStream* rng, Visit&& visit)
{
    if (m <= 1)
        return;
    if (cube.level >= max_level)
        throw std::out_of_range("ground-state descent passed level 64");
    const int           d    = cube.dimension();
    const std::uint64_t kids = fan_out(d);
    const std::uint64_t q    = m >> d;
    const std::uint64_t r    = m & (kids - 1);

    std::vector<std::uint64_t> counts(kids, q);
    if (rng == nullptr)
    {
        for (std::uint64_t i = 0; i < r; ++i)
            ++counts[i];
    }
    else if (r > 0)
    {
        std::vector<std::uint64_t> order(kids);
        std::iota(order.begin(), order.end(), std::uint64_t(0));
        for (std::uint64_t i = 0; i < r; ++i)
        {
            const std::uint64_t j = i + rng->below(kids - i);
            std::swap(order[i], order[j]);
            ++counts[order[i]];
        }
    }
    for (std::uint64_t i = 0; i < kids; ++i)
    {
        if (counts[i] == 0)
            continue;
        const DyadicCube kid = cube.child(i);
        visit(kid, counts[i]);
        grow_ground_subtree(kid, counts[i], rng, visit);
    }
}

/// Canonical minimiser: surplus in the lexicographically first children.
inline CountTree min_partition(std::uint64_t n, int d)
{
    CountTree tree(d, n);
    grow_ground_subtree(DyadicCube::root(d), n, nullptr,
                        [&](const DyadicCube& c, std::uint64_t k) { tree.set(c, k); });
    return tree;
}

/// Uniform draw among the ground-state trees with n points.
inline CountTree sample_ground_state(std::uint64_t n, int d, RandomStream& rng)
{
    CountTree tree(d, n);
    grow_ground_subtree(DyadicCube::root(d), n, &rng,
                        [&](const DyadicCube& c, std::uint64_t k) { tree.set(c, k); });
    return tree;
}

/// True iff at every node the 2^d children counts (absent ones as 0) differ
/// pairwise by at most one.
inline bool is_ground_state(const CountTree& tree)
{
    tree.validate();
    if (!tree.is_resolved())
        throw std::invalid_argument("is_ground_state needs a resolved tree");
    const std::uint64_t kids = fan_out(tree.dimension());
    for (const auto& [parent, s] : tree.child_summaries())
    {
        const std::uint64_t lo = s.stored < kids ? 0 : s.min_kid;
        if (s.max_kid - lo > 1)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Counting ground states

/// b(n, l): number of occupied-cell patterns at depth l of ground states with
/// n points, from b(n, l) = C(2^d, r) b(q+1, l-1)^r b(q, l-1)^{2^d - r},
/// n = 2^d q + r, b(0, l) = 1, b(1, l) = 2^{dl}. Memoised on (n, l).
class GroundStateCounter
{
public:
    explicit GroundStateCounter(int d) : d_(d)
    {
        check_dimension(d);
    }

    BigInt patterns(std::uint64_t n, unsigned level)
    {
        if (n == 0)
            return 1;
        if (n == 1)
            return BigInt(1) << (d_ * level);
        if (level == 0 || (d_ * level < 64 && n > (std::uint64_t(1) << (d_ * level))))
            throw std::invalid_argument("n points cannot be resolved within the given depth");
        auto key = std::make_pair(n, level);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        const std::uint64_t kids = fan_out(d_);
        const std::uint64_t q    = n >> d_;
        const std::uint64_t r    = n & (kids - 1);
        BigInt              out  = binomial(kids, r);
        if (r > 0)
            out *= pow(patterns(q + 1, level - 1), static_cast<unsigned>(r));
        if (q > 0)
            out *= pow(patterns(q, level - 1), static_cast<unsigned>(kids - r));
        memo_.emplace(key, out);
        return out;
    }

    static BigInt binomial(std::uint64_t n, std::uint64_t k)
    {
        BigInt acc = 1;
        for (std::uint64_t i = 1; i <= k; ++i)
            acc = acc * (n - k + i) / i;
        return acc;
    }

private:
    int                                                 d_;
    std::map<std::pair<std::uint64_t, unsigned>, BigInt> memo_;
};

/// log GSW(n) = log(b_n 2^{-n d h_n}) by the level-free recursion
///   GSW(n) = C(2^d, r) 2^{-nd} GSW(q+1)^r GSW(q)^{2^d - r}.
class GroundWeightTable
{
public:
    explicit GroundWeightTable(int d) : d_(d)
    {
        check_dimension(d);
    }

    double log_weight(std::uint64_t n)
    {
        if (n <= 1)
            return 0.0;
        if (auto it = memo_.find(n); it != memo_.end())
            return it->second;
        const std::uint64_t kids = fan_out(d_);
        const std::uint64_t q    = n >> d_;
        const std::uint64_t r    = n & (kids - 1);
        double              out  = log_binomial(kids, r) - double(n) * d_ * std::log(2.0);
        if (r > 0)
            out += double(r) * log_weight(q + 1);
        if (q > 0)
            out += double(kids - r) * log_weight(q);
        memo_.emplace(n, out);
        return out;
    }

private:
    int                             d_;
    std::map<std::uint64_t, double> memo_;
};

/// b_n = b(n, h_n). Throws BudgetError when b_n would need more than
/// `budget_bits` bits; use ground_state_weight instead in that regime.
inline BigInt count_ground_states(std::uint64_t n, int d, std::uint64_t budget_bits = 1u << 16)
{
    check_dimension(d);
    const unsigned h         = base_level(n, d);
    const double   log2_size = GroundWeightTable(d).log_weight(n) / std::log(2.0)
                             + double(n) * d * h;
    if (log2_size > double(budget_bits))
        throw BudgetError("b_n for n = " + std::to_string(n) + " needs about "
                          + std::to_string(static_cast<std::uint64_t>(log2_size))
                          + " bits, over the budget of " + std::to_string(budget_bits));
    return GroundStateCounter(d).patterns(n, h);
}

/// GSW(n) = b_n 2^{-n d h_n} in the log domain.
inline LogWeight ground_state_weight(std::uint64_t n, int d)
{
    return LogWeight::from_log(GroundWeightTable(d).log_weight(n));
}

/// GSW(n) as an exact rational (small n only: goes through b_n).
inline BigRational ground_state_weight_exact(std::uint64_t n, int d)
{
    const unsigned h = base_level(n, d);
    return BigRational(count_ground_states(n, d), BigInt(1) << (n * d * h));
}

/// log Z(G_n) = -beta L_n + log n! + log GSW(n): the ground-state contribution
/// to the partition function.
inline LogWeight log_z_ground(std::uint64_t n, double beta, int d)
{
    if (beta < 0)
        throw std::invalid_argument("beta must be non-negative");
    if (n <= 1)
        return LogWeight::one();
    const double energy = ground_energy(n, d).convert_to<double>();
    return LogWeight::from_log(-beta * energy + log_factorial(n)
                               + GroundWeightTable(d).log_weight(n));
}

} // namespace hcg

#endif // HCG_GROUNDSTATE_HPP_INCLUDED
