#ifndef HCG_VERIFY_HPP_INCLUDED
#define HCG_VERIFY_HPP_INCLUDED

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "hcg/groundstate.hpp"
#include "hcg/numtheory.hpp"
#include "hcg/oracle.hpp"
#include "hcg/partition.hpp"
#include "hcg/rng.hpp"
#include "hcg/sampler.hpp"
#include "hcg/stats.hpp"
#include "hcg/zfun.hpp"

namespace hcg::verify
{
struct CheckResult
{
    std::string name;
    bool        passed = false;
    std::string detail;
};

using GammaFn = std::function<std::uint64_t(std::uint64_t, int)>;

inline GammaFn reference_gamma()
{
    return [](std::uint64_t n, int d) { return hcg::gamma(n, d); };
}

inline std::string fmt(const char* f, double a, double b = 0, double c = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// ---------------------------------------------------------------------------
// gamma

/// Subadditivity, the increment bound and the growth bound of gamma on
/// random pairs n, r <= max_value.
inline CheckResult gamma_properties(int d, std::uint64_t samples, std::uint64_t seed,
                                    const GammaFn& g = reference_gamma(),
                                    std::uint64_t max_value = 1'000'000)
{
    RandomStream  rng(seed, std::uint64_t(d));
    std::uint64_t sub = 0, inc = 0, growth = 0;
    double        worst_inc = 0, worst_growth = 0;
    for (std::uint64_t i = 0; i < samples; ++i)
    {
        const std::uint64_t n  = 1 + rng.below(max_value);
        const std::uint64_t r  = 1 + rng.below(max_value);
        const std::uint64_t gn = g(n, d), gr = g(r, d), gs = g(n + r, d);
        if (gs > gn + gr)
            ++sub;
        if (!leq_with_slack(double(gs), double(gn) + 4 * growth_scale(r, d)))
            ++inc;
        if (!leq_with_slack(double(gn), 4 * growth_scale(n, d)))
            ++growth;
        worst_inc    = std::max(worst_inc, (double(gs) - double(gn)) / growth_scale(r, d));
        worst_growth = std::max(worst_growth, double(gn) / growth_scale(n, d));
    }
    const bool ok = sub == 0 && inc == 0 && growth == 0;
    return {"gamma properties d=" + std::to_string(d), ok,
            fmt("%.0f pairs; violations: subadditive %.0f, increment %.0f", double(samples), double(sub),
                double(inc))
                + ", growth " + std::to_string(growth)
                + fmt(" (max (g(n+r)-g(n))/r^((d-2)/d) = %.4g, max g(n)/n^((d-2)/d) = %.4g, bound 4)",
                      worst_inc, worst_growth)};
}

/// For n <= max_n: L_n from the digit formula is integral, the closed D_n
/// equals the recursive D_n, and both equal L_{n+1} - L_n.
inline CheckResult recursion_coherence(int d, std::uint64_t max_n, const GammaFn& g = reference_gamma())
{
    const detail::EnergyScale s(d);
    // L_n * denom = lead n(n-1)/2 - digits * sum_{m<n} gamma(m)
    __int128      gamma_sum = 0;
    __int128      prev_l    = 0;
    std::uint64_t bad_int = 0, bad_rec = 0, bad_diff = 0;
    std::uint64_t first_bad = 0;
    for (std::uint64_t n = 1; n <= max_n + 1; ++n)
    {
        const __int128 num = s.lead * (__int128(n) * (n - 1) / 2) - s.digits * gamma_sum;
        gamma_sum += g(n, d);
        if (num % s.denom != 0)
        {
            ++bad_int;
            first_bad = first_bad ? first_bad : n;
            prev_l    = num / s.denom;
            continue;
        }
        const __int128 l = num / s.denom;
        if (n >= 2)
        {
            const std::uint64_t m      = n - 1;
            const __int128      closed = s.lead * __int128(m) - s.digits * __int128(g(m, d));
            const bool          closed_int = closed % s.denom == 0;
            const __int128      dc         = closed / s.denom;
            const __int128      dr         = energy_increment_recursive(m, d);
            if (!closed_int || dc != dr)
            {
                ++bad_rec;
                first_bad = first_bad ? first_bad : m;
            }
            if (dr != l - prev_l)
            {
                ++bad_diff;
                first_bad = first_bad ? first_bad : m;
            }
        }
        prev_l = l;
    }
    const bool ok = bad_int == 0 && bad_rec == 0 && bad_diff == 0;
    return {"increment coherence d=" + std::to_string(d), ok,
            fmt("n <= %.0f; non-integral L %.0f, closed != recursive %.0f", double(max_n), double(bad_int),
                double(bad_rec))
                + ", recursive != L difference " + std::to_string(bad_diff)
                + (ok ? "" : ", first failure at n = " + std::to_string(first_bad))};
}

// ---------------------------------------------------------------------------
// Ground states

/// Brute-force minimum against L_n, argmin structure and minimiser counts.
inline CheckResult ground_state_exactness(int d, std::uint64_t max_n)
{
    std::string bad;
    for (std::uint64_t n = 1; n <= max_n; ++n)
    {
        const auto brute = brute_min_energy(n, d);
        if (brute.energy != ground_energy(n, d))
            bad += " energy(n=" + std::to_string(n) + ")";
        if (!brute.argmin_is_balanced)
            bad += " argmin(n=" + std::to_string(n) + ")";
        if (brute.minimizer_count != count_ground_trees(n, d))
            bad += " count(n=" + std::to_string(n) + ")";
    }
    return {"ground states d=" + std::to_string(d) + " n<=" + std::to_string(max_n), bad.empty(),
            bad.empty() ? "minimum, argmin structure and minimiser count agree" : "mismatch:" + bad};
}

/// b_9 at d = 3, GSW(9)/GSW(8) = 7/16, and b(n, h_n) against enumeration.
inline CheckResult ground_state_counting(std::uint64_t max_n)
{
    std::string bad;
    if (count_ground_states(9, 3) != BigInt(469762048))
        bad += " b_9";
    if (ground_state_weight_exact(9, 3) / ground_state_weight_exact(8, 3) != BigRational(7, 16))
        bad += " GSW ratio";
    for (std::uint64_t n = 0; n <= max_n; ++n)
        if (pattern_count_by_enumeration(n, 3) != count_ground_states(n, 3))
            bad += " b(" + std::to_string(n) + ")";
    return {"ground-state counting", bad.empty(),
            bad.empty() ? "b_9 = 469762048, GSW(9)/GSW(8) = 7/16, enumeration agrees for n <= "
                              + std::to_string(max_n)
                        : "mismatch:" + bad};
}

// ---------------------------------------------------------------------------
// Partition function

struct BracketReport
{
    double worst_lower = 0; ///< min over n of log Z - log Z(G)
    double worst_upper = 0; ///< min over n of -beta L_n - log Z
    double worst_floor = 0; ///< min over n of log Z + beta L_n + (d log 2 + 1) n
};

inline BracketReport bracket_slacks(const LevelTables& t)
{
    BracketReport r{1e300, 1e300, 1e300};
    const int     d    = t.dimension();
    const double  beta = t.beta();
    for (std::uint64_t n = 0; n <= t.max_count(); ++n)
    {
        const double lz = t.log_z(n);
        const double l  = ground_energy(n, d).convert_to<double>();
        r.worst_lower   = std::min(r.worst_lower, lz - log_z_ground(n, beta, d).log());
        r.worst_upper   = std::min(r.worst_upper, -beta * l - lz);
        r.worst_floor   = std::min(r.worst_floor, lz + beta * l + (d * std::log(2.0) + 1) * double(n));
    }
    return r;
}

inline CheckResult partition_brackets(std::uint64_t max_n, const std::vector<double>& betas,
                                      const std::vector<int>& dims)
{
    std::string detail;
    bool        ok = true;
    for (int d : dims)
        for (double beta : betas)
        {
            TableOptions opt;
            opt.partials = false;
            const auto t = build_tables_converged(max_n, beta, d, 1e-12, opt);
            const auto r = bracket_slacks(t);
            const bool good = r.worst_lower >= -1e-9 && r.worst_upper >= -1e-9 && r.worst_floor >= 0;
            ok              = ok && good;
            detail += fmt(" [d=%.0f beta=%g:", d, beta)
                    + fmt(" lower %.3g upper %.3g floor %.3g]", r.worst_lower, r.worst_upper, r.worst_floor);
        }
    double worst_series = 0;
    for (int d : dims)
        for (double beta : betas)
        {
            const double dp  = log_partition(2, beta, d).log_z;
            const double ser = two_point_log_partition(beta, d);
            worst_series     = std::max(worst_series, std::abs(dp - ser));
        }
    ok = ok && worst_series <= 1e-10;
    return {"partition brackets n<=" + std::to_string(max_n), ok,
            fmt("two-point |DP - series| = %.3g;", worst_series) + detail};
}

/// |log Z(n+1)/Z(n) + beta D_n| / log^6 n regressed on log n over 2 <= n <= max_n;
/// passes when the slope is <= 2 standard errors.
inline CheckResult ratio_residual_trend(std::uint64_t max_n, const std::vector<double>& betas,
                                        const std::vector<int>& dims)
{
    bool        ok = true;
    std::string detail;
    for (int d : dims)
        for (double beta : betas)
        {
            TableOptions opt;
            opt.partials = false;
            const auto          t = build_tables_converged(max_n + 1, beta, d, 1e-12, opt);
            std::vector<double> x, y;
            for (std::uint64_t n = 2; n <= max_n; ++n)
            {
                const double res = std::abs(t.log_z(n + 1) - t.log_z(n) + beta * double(energy_increment(n, d)));
                x.push_back(std::log(double(n)));
                y.push_back(res / std::pow(std::log(double(n)), 6));
            }
            const auto fit  = stats::least_squares(x, y);
            const bool good = fit.slope <= 2 * fit.slope_se;
            ok              = ok && good;
            detail += fmt(" [d=%.0f beta=%g: slope %.3g", d, beta, fit.slope) + fmt(" se %.3g]", fit.slope_se);
        }
    return {"ratio residual trend n<=" + std::to_string(max_n), ok, detail};
}

// ---------------------------------------------------------------------------
// Sampler

/// Level-1 composition law of sample_counts against the enumeration oracle.
inline CheckResult sampler_composition(std::uint64_t n, double beta, int d, std::uint64_t samples,
                                       std::uint64_t seed, double* p_out = nullptr,
                                       double* max_abs_dev = nullptr)
{
    const auto oracle = exact_count_distribution(n, beta, d);
    auto tables = std::make_shared<const LevelTables>(build_tables(n, beta, d));
    std::map<Composition, std::uint64_t> hits;
    RandomStream                         rng(seed, n * 1000 + std::uint64_t(beta * 100));
    for (std::uint64_t i = 0; i < samples; ++i)
        ++hits[sample_counts(*tables, n, 0, rng)];
    std::vector<std::uint64_t> obs;
    std::vector<double>        prob;
    double                     dev = 0;
    for (const auto& [c, p] : oracle.probability)
    {
        obs.push_back(hits.count(c) ? hits[c] : 0);
        prob.push_back(p);
        dev = std::max(dev, std::abs(p - std::exp(composition_log_probability(*tables, 0, c))));
    }
    const auto chi = stats::chi_square_gof(obs, prob);
    if (p_out)
        *p_out = chi.p_value;
    if (max_abs_dev)
        *max_abs_dev = dev;
    return {fmt("sampler composition n=%.0f beta=%g d=%.0f", double(n), beta, d), chi.p_value > 1e-3 && dev <= 1e-8,
            fmt("chi2 = %.4g, dof = %.0f, p = %.4g", chi.statistic, double(chi.dof), chi.p_value)
                + fmt(", max |oracle - tables| = %.3g", dev)};
}

/// At large beta every sampled tree is a ground state.
inline CheckResult sampler_ground_limit(const std::vector<std::uint64_t>& ns, double beta,
                                        std::uint64_t samples, std::uint64_t seed)
{
    std::uint64_t bad = 0, total = 0;
    for (auto n : ns)
    {
        auto tables = std::make_shared<const LevelTables>(build_tables(n, beta, 3));
        for (std::uint64_t i = 0; i < samples; ++i)
        {
            SamplerState st(tables, seed, n * 1'000'000 + i);
            if (!is_ground_state(sample_partition(st)))
                ++bad;
            ++total;
        }
    }
    return {fmt("sampler ground limit beta=%g", beta), bad == 0,
            fmt("%.0f of %.0f sampled trees are not ground states", double(bad), double(total))};
}

// ---------------------------------------------------------------------------
// Energy gaps

struct GapReport
{
    std::uint64_t instances  = 0;
    std::uint64_t violations = 0;
    double        tightest   = 1e300; ///< min of (H1 - H2) / (2^{(d-2)m} * rhs factor)
};

namespace detail
{
    /// Tree shared above level m-1: `cubes` occupied level-(m-1) cubes with
    /// the given counts, all ancestors filled in.
    struct GapFrame
    {
        int                        d = 3;
        unsigned                   m = 1;
        std::vector<DyadicCube>    cubes;
        std::vector<std::uint64_t> counts;

        CountTree prefix() const
        {
            std::uint64_t n = 0;
            for (auto c : counts)
                n += c;
            CountTree t(d, n);
            std::map<DyadicCube, std::uint64_t> acc;
            for (std::size_t i = 0; i < cubes.size(); ++i)
                for (DyadicCube c = cubes[i]; c.level > 0; c = c.parent())
                    acc[c] += counts[i];
            for (const auto& [c, k] : acc)
                t.set(c, k);
            return t;
        }
    };

    inline GapFrame random_frame(RandomStream& rng, int d, unsigned m, std::uint64_t max_count)
    {
        GapFrame f;
        f.d                    = d;
        f.m                    = m;
        const std::uint64_t cells = std::uint64_t(1) << (d * (m - 1));
        const std::uint64_t k     = 1 + rng.below(std::min<std::uint64_t>(3, cells));
        std::set<std::vector<std::uint64_t>> used;
        while (f.cubes.size() < k)
        {
            DyadicCube c = DyadicCube::root(d);
            for (unsigned l = 1; l < m; ++l)
                c = c.child(rng.below(fan_out(d)));
            if (!used.insert(c.coords).second)
                continue;
            f.cubes.push_back(c);
            f.counts.push_back(2 + rng.below(max_count - 1));
        }
        return f;
    }

    /// Places `comp` under `cube` and grounds each child.
    inline void place_grounded(CountTree& t, const DyadicCube& cube, const Composition& comp)
    {
        for (std::uint64_t i = 0; i < comp.size(); ++i)
        {
            if (comp[i] == 0)
                continue;
            const DyadicCube kid = cube.child(i);
            t.set(kid, comp[i]);
            grow_ground_subtree(kid, comp[i], nullptr, [&](const DyadicCube& c, std::uint64_t k) { t.set(c, k); });
        }
    }

    /// Random split of m among children; below `free_levels` it is grounded.
    inline void place_random(CountTree& t, const DyadicCube& cube, std::uint64_t m, unsigned free_levels,
                             RandomStream& rng)
    {
        if (m <= 1)
            return;
        if (free_levels == 0)
        {
            grow_ground_subtree(cube, m, &rng, [&](const DyadicCube& c, std::uint64_t k) { t.set(c, k); });
            return;
        }
        Composition c(fan_out(t.dimension()), 0);
        for (std::uint64_t i = 0; i < m; ++i)
            ++c[rng.below(c.size())];
        for (std::uint64_t i = 0; i < c.size(); ++i)
            if (c[i] > 0)
            {
                const DyadicCube kid = cube.child(i);
                t.set(kid, c[i]);
                place_random(t, kid, c[i], free_levels - 1, rng);
            }
    }

    inline Composition balanced(std::uint64_t m, int d, RandomStream& rng)
    {
        const std::uint64_t kids = fan_out(d);
        Composition         c(kids, m >> d);
        std::vector<std::uint64_t> order(kids);
        for (std::uint64_t i = 0; i < kids; ++i)
            order[i] = i;
        for (std::uint64_t i = 0; i < (m & (kids - 1)); ++i)
        {
            std::swap(order[i], order[i + rng.below(kids - i)]);
            ++c[order[i]];
        }
        return c;
    }

    /// A composition of m drawn by one of several schemes so that distances
    /// from the balanced split range from 0 to large.
    inline Composition random_composition(std::uint64_t m, int d, RandomStream& rng)
    {
        const std::uint64_t kids = fan_out(d);
        Composition         c(kids, 0);
        switch (rng.below(3))
        {
        case 0: // multinomial
            for (std::uint64_t i = 0; i < m; ++i)
                ++c[rng.below(kids)];
            break;
        case 1: { // balanced then a few moves
            c = balanced(m, d, rng);
            const std::uint64_t moves = 1 + rng.below(4);
            for (std::uint64_t j = 0; j < moves; ++j)
            {
                const std::uint64_t from = rng.below(kids), to = rng.below(kids);
                if (c[from] > 0)
                {
                    --c[from];
                    ++c[to];
                }
            }
            break;
        }
        default: // concentrated in a few children
        {
            const std::uint64_t few = 1 + rng.below(3);
            for (std::uint64_t i = 0; i < m; ++i)
                ++c[rng.below(few)];
            break;
        }
        }
        return c;
    }
} // namespace detail

/// Moving k points from child j to child i (b_i >= b_j >= k) of one level-(m-1)
/// cube, every child grounded, raises H by at least 2^{(d-2)m} k^2.
inline GapReport two_coordinate_gaps(std::uint64_t instances, std::uint64_t seed)
{
    RandomStream rng(seed, 11);
    GapReport    rep;
    while (rep.instances < instances)
    {
        const int      d     = 3 + int(rng.below(3));
        const unsigned m     = 1 + unsigned(rng.below(3));
        const auto     frame = detail::random_frame(rng, d, m, 60);
        const std::size_t  which = rng.below(frame.cubes.size());
        Composition        b     = detail::random_composition(frame.counts[which], d, rng);
        const std::uint64_t i = rng.below(b.size()), j = rng.below(b.size());
        if (i == j)
            continue;
        const std::uint64_t hi = std::max(b[i], b[j]), lo = std::min(b[i], b[j]);
        if (lo == 0)
            continue;
        const std::uint64_t big = b[i] >= b[j] ? i : j, small = big == i ? j : i;
        (void)hi;
        const std::uint64_t k = 1 + rng.below(lo);
        Composition         f1 = b;
        f1[big] += k;
        f1[small] -= k;

        CountTree t1 = frame.prefix(), t2 = frame.prefix();
        for (std::size_t c = 0; c < frame.cubes.size(); ++c)
        {
            const Composition shared = c == which ? b : detail::balanced(frame.counts[c], d, rng);
            detail::place_grounded(t2, frame.cubes[c], shared);
            detail::place_grounded(t1, frame.cubes[c], c == which ? f1 : shared);
        }
        const BigInt gap   = hamiltonian(t1) - hamiltonian(t2);
        const BigInt bound = (BigInt(1) << ((d - 2) * m)) * k * k;
        if (gap < bound)
            ++rep.violations;
        rep.tightest = std::min(rep.tightest, gap.convert_to<double>() / bound.convert_to<double>());
        ++rep.instances;
    }
    return rep;
}

/// P2 grounded below level m-1, P1 arbitrary below level m-1:
///   2 (2^d + 1) (H(P1) - H(P2)) >= 2^{(d-2)m} sum_i dist^2(a_i, e_i).
/// `tightest` is the smallest observed (H1 - H2) / (2^{(d-2)m} sum dist^2).
inline GapReport general_gaps(std::uint64_t instances, std::uint64_t seed)
{
    RandomStream rng(seed, 12);
    GapReport    rep;
    while (rep.instances < instances)
    {
        const int      d     = 3 + int(rng.below(3));
        const unsigned m     = 1 + unsigned(rng.below(3));
        const auto     frame = detail::random_frame(rng, d, m, 60);
        CountTree      t1 = frame.prefix(), t2 = frame.prefix();
        std::uint64_t  dist2 = 0;
        for (std::size_t c = 0; c < frame.cubes.size(); ++c)
        {
            const Composition e = detail::balanced(frame.counts[c], d, rng);
            const Composition a = detail::random_composition(frame.counts[c], d, rng);
            detail::place_grounded(t2, frame.cubes[c], e);
            const bool grounded_below = rng.below(2) == 0;
            for (std::uint64_t i = 0; i < a.size(); ++i)
            {
                if (a[i] == 0)
                    continue;
                const DyadicCube kid = frame.cubes[c].child(i);
                t1.set(kid, a[i]);
                if (grounded_below)
                    grow_ground_subtree(kid, a[i], &rng, [&](const DyadicCube& x, std::uint64_t k) { t1.set(x, k); });
                else
                    detail::place_random(t1, kid, a[i], 1 + unsigned(rng.below(3)), rng);
            }
            dist2 += perm_distance_squared(a, e);
        }
        const BigInt gap   = hamiltonian(t1) - hamiltonian(t2);
        const BigInt scale = BigInt(1) << ((d - 2) * m);
        const BigInt lhs   = gap * (2 * ((BigInt(1) << d) + 1));
        const BigInt rhs   = scale * dist2;
        if (lhs < rhs)
            ++rep.violations;
        if (dist2 > 0)
            rep.tightest = std::min(rep.tightest, gap.convert_to<double>() / rhs.convert_to<double>());
        ++rep.instances;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions
{
    std::uint64_t seed       = 0;
    GammaFn       gamma_impl = reference_gamma();
};

inline std::vector<CheckResult> suite_numtheory(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    for (int d : {3, 4, 5})
        out.push_back(gamma_properties(d, 20000, o.seed, o.gamma_impl));
    for (int d : {3, 4, 5})
        out.push_back(recursion_coherence(d, 100000, o.gamma_impl));
    return out;
}

inline std::vector<CheckResult> suite_groundstate(const SuiteOptions&)
{
    return {ground_state_exactness(3, 10), ground_state_exactness(4, 6), ground_state_counting(10)};
}

inline std::vector<CheckResult> suite_zbounds(const SuiteOptions&)
{
    return {partition_brackets(128, {0.25, 1.0, 4.0}, {3, 4}), ratio_residual_trend(128, {1.0}, {3})};
}

inline std::vector<CheckResult> suite_sampler(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    for (std::uint64_t n : {2, 3})
        for (double beta : {0.5, 2.0})
            out.push_back(sampler_composition(n, beta, 3, 20000, o.seed));
    out.push_back(sampler_ground_limit({2, 9, 17, 64}, 50.0, 100, o.seed));
    return out;
}

inline std::vector<CheckResult> suite_energygap(const SuiteOptions& o)
{
    const auto two = two_coordinate_gaps(1000, o.seed);
    const auto gen = general_gaps(1000, o.seed);
    return {
        {"two-coordinate gap", two.violations == 0,
         fmt("%.0f instances, %.0f violations, tightest ratio %.4g", double(two.instances),
             double(two.violations), two.tightest)},
        {"general gap c' = 1/(2(2^d+1))", gen.violations == 0,
         fmt("%.0f instances, %.0f violations, tightest constant %.4g", double(gen.instances),
             double(gen.violations), gen.tightest)},
    };
}

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"numtheory", "groundstate", "zbounds", "sampler", "energygap",
                                                "all"};
    return names;
}

inline std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& o)
{
    if (name == "numtheory")
        return suite_numtheory(o);
    if (name == "groundstate")
        return suite_groundstate(o);
    if (name == "zbounds")
        return suite_zbounds(o);
    if (name == "sampler")
        return suite_sampler(o);
    if (name == "energygap")
        return suite_energygap(o);
    if (name == "all")
    {
        std::vector<CheckResult> out;
        for (const auto& s : suite_names())
            if (s != "all")
                for (auto& r : run_suite(s, o))
                    out.push_back(std::move(r));
        return out;
    }
    throw std::invalid_argument("unknown suite '" + name + "'");
}

inline void print_table(std::ostream& os, const std::vector<CheckResult>& rows)
{
    for (const auto& r : rows)
        os << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  (" << r.detail << ")\n";
}

} // namespace hcg::verify

#endif // HCG_VERIFY_HPP_INCLUDED
