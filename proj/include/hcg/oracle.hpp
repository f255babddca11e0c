#ifndef HCG_ORACLE_HPP_INCLUDED
#define HCG_ORACLE_HPP_INCLUDED

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcg/groundstate.hpp"
#include "hcg/numtheory.hpp"
#include "hcg/partition.hpp"

namespace hcg
{
using Composition = std::vector<std::uint64_t>;

/// Calls visit(c) for every composition of m into `parts` non-negative parts,
/// in lexicographic order. Returning false from visit stops the walk.
template <class Visit>
bool for_each_composition(std::uint64_t m, std::uint64_t parts, Visit&& visit)
{
    Composition c(parts, 0);
    if (parts == 0)
        return m == 0 ? bool(visit(c)) : true;
    // c[0..i) fixed, remaining mass goes to the tail.
    std::function<bool(std::uint64_t, std::uint64_t)> rec = [&](std::uint64_t i, std::uint64_t left) {
        if (i + 1 == parts)
        {
            c[i] = left;
            return bool(visit(c));
        }
        for (std::uint64_t v = 0; v <= left; ++v)
        {
            c[i] = v;
            if (!rec(i + 1, left - v))
                return false;
        }
        return true;
    };
    return rec(0, m);
}

/// Number of resolved trees with m points below a node that may still split
/// `levels` more times. Exact.
class TreeCounter
{
public:
    explicit TreeCounter(int d) : d_(d)
    {
        check_dimension(d);
    }

    BigInt count(std::uint64_t m, unsigned levels)
    {
        if (m <= 1)
            return 1;
        if (levels == 0)
            return 0;
        auto key = std::make_pair(m, levels);
        if (auto it = memo_.find(key); it != memo_.end())
            return it->second;
        BigInt total = 0;
        for_each_composition(m, fan_out(d_), [&](const Composition& c) {
            BigInt prod = 1;
            for (auto x : c)
            {
                if (x >= 2)
                    prod *= count(x, levels - 1);
                if (prod == 0)
                    break;
            }
            total += prod;
            return true;
        });
        memo_.emplace(key, total);
        return total;
    }

private:
    int                                                  d_;
    std::map<std::pair<std::uint64_t, unsigned>, BigInt> memo_;
};

/// Every resolved tree with n points and depth <= max_depth, each exactly
/// once, children compositions in lexicographic order. Throws BudgetError
/// (with the exact count) when there are more than `budget` trees.
template <class Visit>
void enumerate_trees(std::uint64_t n, int d, unsigned max_depth, Visit&& visit,
                     std::uint64_t budget = 5'000'000)
{
    check_dimension(d);
    if (max_depth > max_level)
        throw std::invalid_argument("depth beyond level 64");
    const BigInt total = TreeCounter(d).count(n, max_depth);
    if (total > budget)
        throw BudgetError("enumeration of n = " + std::to_string(n) + " to depth "
                          + std::to_string(max_depth) + " would visit " + total.str()
                          + " trees, over the budget of " + std::to_string(budget));
    CountTree tree(d, n);
    if (n <= 1)
    {
        visit(std::as_const(tree));
        return;
    }
    const std::uint64_t kids = fan_out(d);

    std::vector<DyadicCube> pending{DyadicCube::root(d)};
    std::function<void()> rec = [&]() {
        if (pending.empty())
        {
            visit(std::as_const(tree));
            return;
        }
        const DyadicCube    node = pending.back();
        const std::uint64_t m    = tree.count(node);
        if (node.level >= max_depth)
            return;
        pending.pop_back();
        for_each_composition(m, kids, [&](const Composition& c) {
            const std::size_t mark = pending.size();
            for (std::uint64_t i = 0; i < kids; ++i)
            {
                if (c[i] == 0)
                    continue;
                const DyadicCube kid = node.child(i);
                tree.set(kid, c[i]);
                if (c[i] >= 2)
                    pending.push_back(kid);
            }
            rec();
            pending.resize(mark);
            for (std::uint64_t i = 0; i < kids; ++i)
                if (c[i] != 0)
                    tree.set(node.child(i), 0);
            return true;
        });
        pending.push_back(node);
    };
    rec();
}

/// Every ground-state tree (all children compositions balanced), each once.
template <class Visit>
void enumerate_ground_trees(std::uint64_t n, int d, Visit&& visit)
{
    check_dimension(d);
    CountTree tree(d, n);
    if (n <= 1)
    {
        visit(std::as_const(tree));
        return;
    }
    const std::uint64_t     kids = fan_out(d);
    std::vector<DyadicCube> pending{DyadicCube::root(d)};
    std::function<void()>   rec = [&]() {
        if (pending.empty())
        {
            visit(std::as_const(tree));
            return;
        }
        const DyadicCube    node = pending.back();
        const std::uint64_t m    = tree.count(node);
        pending.pop_back();
        for_each_composition(m, kids, [&](const Composition& c) {
            const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
            if (*hi - *lo > 1)
                return true;
            const std::size_t mark = pending.size();
            for (std::uint64_t i = 0; i < kids; ++i)
            {
                if (c[i] == 0)
                    continue;
                tree.set(node.child(i), c[i]);
                if (c[i] >= 2)
                    pending.push_back(node.child(i));
            }
            rec();
            pending.resize(mark);
            for (std::uint64_t i = 0; i < kids; ++i)
                if (c[i] != 0)
                    tree.set(node.child(i), 0);
            return true;
        });
        pending.push_back(node);
    };
    rec();
}

/// b(n, h_n) by walking every ground-state tree: a count-1 leaf at level l
/// can sit in any of 2^{d(h_n - l)} cells of level h_n.
inline BigInt pattern_count_by_enumeration(std::uint64_t n, int d)
{
    const unsigned h     = base_level(n, d);
    BigInt         total = 0;
    enumerate_ground_trees(n, d, [&](const CountTree& t) {
        BigInt w = 1;
        if (n == 1)
            w <<= d * h;
        for (const auto& [cube, cnt] : t.nodes())
            if (cnt == 1)
                w <<= d * (h - cube.level);
        total += w;
    });
    return total;
}

/// Minimum of the Hamiltonian over resolved trees of depth <= h_n + 1 and
/// the structure of the minimisers.
struct BruteMinimum
{
    BigInt energy;
    BigInt minimizer_count;
    /// At every reachable state, argmin compositions == compositions whose
    /// parts differ by at most one.
    bool argmin_is_balanced = true;
};

namespace detail
{
    /// Subtree energy in units of the node's own scale:
    ///   M(m, r) = min_c (m^2 - sum c_i^2) + 2^{d-2} sum M(c_i, r - 1).
    class MinEnergySolver
    {
    public:
        explicit MinEnergySolver(int d) : d_(d) {}

        struct Entry
        {
            BigInt energy;
            BigInt ways;
            bool   feasible = false;
        };

        const Entry& solve(std::uint64_t m, unsigned levels)
        {
            static const Entry leaf{0, 1, true};
            static const Entry dead{0, 0, false};
            if (m <= 1)
                return leaf;
            if (levels == 0)
                return dead;
            auto key = std::make_pair(m, levels);
            if (auto it = memo_.find(key); it != memo_.end())
                return it->second;

            const std::uint64_t scale = std::uint64_t(1) << (d_ - 2);
            Entry               best;
            std::vector<Composition> argmins;
            for_each_composition(m, fan_out(d_), [&](const Composition& c) {
                BigInt e    = BigInt(m) * m;
                BigInt ways = 1;
                for (auto x : c)
                {
                    const Entry& sub = solve(x, levels - 1);
                    if (!sub.feasible)
                        return true;
                    e -= BigInt(x) * x;
                    e += sub.energy * scale;
                    ways *= sub.ways;
                }
                if (!best.feasible || e < best.energy)
                {
                    best = {e, ways, true};
                    argmins.assign(1, c);
                }
                else if (e == best.energy)
                {
                    best.ways += ways;
                    argmins.push_back(c);
                }
                return true;
            });
            if (!best.feasible)
                return memo_.emplace(key, std::move(best)).first->second;
            std::uint64_t balanced = 0;
            for_each_composition(m, fan_out(d_), [&](const Composition& c) {
                std::uint64_t lo = c[0], hi = c[0];
                for (auto x : c)
                {
                    lo = std::min(lo, x);
                    hi = std::max(hi, x);
                }
                if (hi - lo <= 1)
                    ++balanced;
                return true;
            });
            for (const auto& c : argmins)
            {
                std::uint64_t lo = c[0], hi = c[0];
                for (auto x : c)
                {
                    lo = std::min(lo, x);
                    hi = std::max(hi, x);
                }
                if (hi - lo > 1)
                    argmin_balanced_ = false;
            }
            if (argmins.size() != balanced)
                argmin_balanced_ = false;
            return memo_.emplace(key, std::move(best)).first->second;
        }

        bool argmin_balanced() const
        {
            return argmin_balanced_;
        }

    private:
        int                                                 d_;
        bool                                                argmin_balanced_ = true;
        std::map<std::pair<std::uint64_t, unsigned>, Entry> memo_;
    };
} // namespace detail

/// Exact minimum over all resolved trees of depth <= h_n + 1 by dynamic
/// programming over children compositions; the minimiser count is exact.
inline BruteMinimum brute_min_energy(std::uint64_t n, int d)
{
    check_dimension(d);
    if (n > 64)
        throw BudgetError("brute minimisation is limited to n <= 64");
    detail::MinEnergySolver solver(d);
    const auto&             top = solver.solve(n, base_level(n, d) + 1);
    return {top.energy, top.ways, solver.argmin_balanced()};
}

/// Number of ground-state trees with n points (each node splits as evenly as
/// possible, surplus placed on any subset of children).
inline BigInt count_ground_trees(std::uint64_t n, int d)
{
    if (n <= 1)
        return 1;
    const std::uint64_t kids = fan_out(d);
    const std::uint64_t q    = n >> d;
    const std::uint64_t r    = n & (kids - 1);
    BigInt out = GroundStateCounter::binomial(kids, r);
    if (r > 0)
        out *= pow(count_ground_trees(q + 1, d), static_cast<unsigned>(r));
    if (q > 0)
        out *= pow(count_ground_trees(q, d), static_cast<unsigned>(kids - r));
    return out;
}

/// Exact law of the level-1 children composition of the n-point system,
/// summed in the linear domain over compositions at every level:
///   W(m, k) = sum_c [m! / prod c_i!] 2^{-dm} exp(-beta_k (m^2 - sum c_i^2)) prod W(c_i, k+1),
/// W(m, k) = E[exp(-beta H)] for m uniform points in a level-k cube.
/// The tail past level K is bracketed by 0 <= W(m, K) <= exp(-beta_K m(m-1));
/// K grows until the relative bracket width is below 1e-12.
class CountDistribution
{
public:
    std::map<Composition, double> probability;
    double                        z             = 1; ///< W(n, 0), bracket midpoint
    double                        bracket_width = 0;
    unsigned                      depth         = 0;
};

namespace detail
{
    class LinearWeights
    {
    public:
        LinearWeights(int d, double beta, unsigned depth, bool upper)
            : d_(d), beta_(beta), depth_(depth), upper_(upper)
        {}

        double weight(std::uint64_t m, unsigned k)
        {
            if (m <= 1 || beta_ == 0)
                return 1.0;
            const double bk = std::ldexp(beta_, (d_ - 2) * int(k));
            if (k >= depth_)
                return upper_ ? std::exp(-bk * double(m) * double(m - 1)) : 0.0;
            auto key = std::make_pair(m, k);
            if (auto it = memo_.find(key); it != memo_.end())
                return it->second;
            double total = 0;
            for_each_composition(m, fan_out(d_), [&](const Composition& c) {
                total += term(c, k);
                return true;
            });
            memo_.emplace(key, total);
            return total;
        }

        /// Contribution of one children composition of a level-k node.
        double term(const Composition& c, unsigned k)
        {
            std::uint64_t m   = 0;
            double        sq  = 0;
            double        mul = 1;
            for (auto x : c)
            {
                m += x;
                sq += double(x) * double(x);
                for (std::uint64_t i = 2; i <= x; ++i)
                    mul /= double(i);
            }
            for (std::uint64_t i = 2; i <= m; ++i)
                mul *= double(i);
            const double bk = std::ldexp(beta_, (d_ - 2) * int(k));
            double       t  = mul * std::ldexp(1.0, -d_ * int(m)) * std::exp(-bk * (double(m) * m - sq));
            for (auto x : c)
                if (x >= 2)
                    t *= weight(x, k + 1);
            return t;
        }

    private:
        int                                                 d_;
        double                                              beta_;
        unsigned                                            depth_;
        bool                                                upper_;
        std::map<std::pair<std::uint64_t, unsigned>, double> memo_;
    };
} // namespace detail

inline CountDistribution exact_count_distribution(std::uint64_t n, double beta, int d)
{
    check_dimension(d);
    if (n > 6)
        throw BudgetError("exact_count_distribution is limited to n <= 6");
    if (beta < 0)
        throw std::invalid_argument("beta must be non-negative");
    CountDistribution out;
    const std::uint64_t kids = fan_out(d);
    for (unsigned depth = 2;; depth += 2)
    {
        if (depth > max_level)
            throw std::runtime_error("count distribution tail did not close");
        detail::LinearWeights lo(d, beta, depth, false), hi(d, beta, depth, true);
        const double z_lo = lo.weight(n, 0), z_hi = hi.weight(n, 0);
        const double width = n <= 1 ? 0.0 : (z_hi - z_lo) / z_hi;
        if (width > 1e-12)
            continue;
        out.bracket_width = width;
        out.depth         = depth;
        const double z    = 0.5 * (z_lo + z_hi);
        out.z             = z;
        for_each_composition(n, kids, [&](const Composition& c) {
            out.probability[c] = 0.5 * (lo.term(c, 0) + hi.term(c, 0)) / z;
            return true;
        });
        return out;
    }
}

/// log Z(2, beta) from the two-point series
///   Z(2) = sum_{k>=1} (1 - 2^{-d}) 2^{-d(k-1)} exp(-2 beta 2^{(d-2)(k-1)}),
/// summed until the remaining terms are below 1e-300 relative.
inline double two_point_log_partition(double beta, int d)
{
    check_dimension(d);
    const double p = 1.0 - std::ldexp(1.0, -d);
    double       z = 0;
    for (int k = 1; k < 2000; ++k)
    {
        const double t = p * std::ldexp(1.0, -d * (k - 1))
                       * std::exp(-2.0 * beta * std::ldexp(1.0, (d - 2) * (k - 1)));
        z += t;
        if (t < z * 1e-20)
            break;
    }
    return std::log(z);
}

} // namespace hcg

#endif // HCG_ORACLE_HPP_INCLUDED
