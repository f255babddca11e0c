#ifndef HCG_ZFUN_HPP_INCLUDED
#define HCG_ZFUN_HPP_INCLUDED

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcg/groundstate.hpp"
#include "hcg/log_weight.hpp"
#include "hcg/numtheory.hpp"
#include "hcg/parallel.hpp"
#include "hcg/partition.hpp"

namespace hcg
{
class ConvergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Terms more than this far below the running maximum (in log units) are not
/// exponentiated: n * e^{-64} is far below double resolution.
inline constexpr double lse_cutoff = 64.0;

/// out[m] = log sum_{j=0..m} exp(a[j] + b[m-j]) for m in [0, a.size()).
inline void log_convolve(const std::vector<double>& a, const std::vector<double>& b,
                         std::vector<double>& out, unsigned threads = 1)
{
    const std::size_t len = a.size();
    out.assign(len, neg_inf);
    std::vector<double> b_rev(b.rbegin(), b.rend()); // b_rev[len-1-i] = b[i]
    parallel_for(len, threads, [&](std::size_t m) {
        thread_local std::vector<double> terms;
        terms.resize(m + 1);
        const double* bp  = b_rev.data() + (len - 1 - m);
        double        top = neg_inf;
        for (std::size_t j = 0; j <= m; ++j)
        {
            const double t = a[j] + bp[j];
            terms[j]       = t;
            top            = t > top ? t : top;
        }
        if (top == neg_inf)
            return;
        const double floor = top - lse_cutoff;
        double       acc   = 0;
        for (std::size_t j = 0; j <= m; ++j)
            if (terms[j] > floor)
                acc += std::exp(terms[j] - top);
        out[m] = top + std::log(acc);
    });
}

/// Inverse temperature of the subsystem inside a level-k cube: 2^{(d-2)k} beta.
inline double level_beta(double beta, int d, unsigned k)
{
    return std::ldexp(beta, (d - 2) * static_cast<int>(k));
}

struct TableOptions
{
    unsigned depth_pad = 4;
    /// Keep g_{k,t} for every t = 1..2^d (needed by the sampler); otherwise
    /// only the dyadic powers t = 1, 2, 4, ..., 2^d are formed.
    bool        partials      = true;
    std::size_t memory_budget = std::size_t(3) << 30;
    unsigned    threads       = 1;
};

/// Per-level DP arrays for Z(m, beta_k), m <= n, k = 0..K.
///
///   f_k(m)      = exp(beta_k m^2) Z(m, beta_{k+1}) 2^{-dm} / m!
///   g_{k,t}     = f_k^{*t} (sequence convolution, truncated at n)
///   Z(m, beta_k) = m! exp(-beta_k m^2) g_{k,2^d}(m)
///
/// The chain is closed at level K by replacing Z(m, beta_{K+1}) with its
/// ground-state contribution, a lower bound that becomes exact as
/// beta_{K+1} grows.
class LevelTables
{
public:
    struct Level
    {
        double                           beta = 0;
        std::vector<double>              log_f;
        std::vector<std::vector<double>> log_g; // index t-1; empty when not kept
        std::vector<double>              log_z;
    };

    LevelTables() = default;

    int dimension() const
    {
        return d_;
    }
    double beta() const
    {
        return beta_;
    }
    std::uint64_t max_count() const
    {
        return n_;
    }
    /// Truncation level K.
    unsigned depth() const
    {
        return static_cast<unsigned>(levels_.size()) - 1;
    }
    unsigned depth_pad() const
    {
        return pad_;
    }
    bool has_partials() const
    {
        return partials_;
    }
    const Level& level(unsigned k) const
    {
        return levels_.at(k);
    }

    /// log Z(m, beta_k).
    double log_z(std::uint64_t m, unsigned k = 0) const
    {
        return levels_.at(k).log_z.at(m);
    }
    double log_f(unsigned k, std::uint64_t m) const
    {
        return levels_.at(k).log_f.at(m);
    }
    /// log g_{k,t}(m), 1 <= t <= 2^d.
    const std::vector<double>& log_g(unsigned k, std::uint64_t t) const
    {
        const auto& g = levels_.at(k).log_g.at(t - 1);
        if (g.empty())
            throw std::logic_error("partial power g_{k,t} was not kept; build with partials");
        return g;
    }

    /// Exact bytes needed for a build with these parameters.
    static std::size_t required_bytes(std::uint64_t n, int d, unsigned depth, bool partials)
    {
        const std::size_t powers = partials ? fan_out(d) : static_cast<std::size_t>(d) + 1;
        return (depth + 1) * (powers + 2) * (n + 1) * sizeof(double);
    }

    friend LevelTables build_tables(std::uint64_t n, double beta, int d, const TableOptions& opt);
    friend void        save_tables(const std::string& path, const LevelTables& t);
    friend LevelTables load_tables(const std::string& path);

private:
    int                d_     = 3;
    double             beta_  = 0;
    std::uint64_t      n_     = 0;
    unsigned           pad_   = 0;
    bool               partials_ = true;
    std::vector<Level> levels_;
};

/// Deepest truncation level for which a sampled subtree still fits in 64 bits:
/// children of level-K nodes sit at K+1 and their ground-state descent needs
/// at most h_n further levels.
inline unsigned max_truncation_level(std::uint64_t n, int d)
{
    return max_level - 1 - base_level(std::max<std::uint64_t>(n, 2), d);
}

inline LevelTables build_tables(std::uint64_t n, double beta, int d, const TableOptions& opt)
{
    check_dimension(d);
    if (!(beta >= 0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and non-negative");
    const unsigned depth = base_level(std::max<std::uint64_t>(n, 2), d) + opt.depth_pad;
    if (depth > max_truncation_level(n, d))
        throw std::invalid_argument("truncation depth " + std::to_string(depth)
                                    + " exceeds the fixed-point resolution");
    const std::size_t need = LevelTables::required_bytes(n, d, depth, opt.partials);
    if (need > opt.memory_budget)
        throw BudgetError("level tables need " + std::to_string(need) + " bytes, budget is "
                          + std::to_string(opt.memory_budget));

    LevelTables out;
    out.d_        = d;
    out.beta_     = beta;
    out.n_        = n;
    out.pad_      = opt.depth_pad;
    out.partials_ = opt.partials;
    out.levels_.resize(depth + 1);

    const std::uint64_t     kids = fan_out(d);
    const GroundEnergyTable energies(d, n);
    GroundWeightTable       weights(d);

    // Ground-state seed for the subsystems below the truncation level.
    std::vector<double> child_log_z(n + 1, 0.0);
    {
        const double b = level_beta(beta, d, depth + 1);
        for (std::uint64_t m = 2; m <= n; ++m)
            child_log_z[m] = -b * double(energies.energy(m)) + log_factorial(m)
                             + weights.log_weight(m);
    }

    const double log2 = std::log(2.0);
    for (unsigned k = depth + 1; k-- > 0;)
    {
        auto& lv = out.levels_[k];
        lv.beta  = level_beta(beta, d, k);
        lv.log_f.resize(n + 1);
        for (std::uint64_t m = 0; m <= n; ++m)
        {
            const double md = double(m);
            lv.log_f[m] = lv.beta * md * md + child_log_z[m] - md * d * log2 - log_factorial(m);
        }
        lv.log_g.assign(kids, {});
        lv.log_g[0] = lv.log_f;
        // Dyadic powers by squaring, the rest (if kept) as P * f^{t-P}.
        for (std::uint64_t t = 2; t <= kids; t <<= 1)
            log_convolve(lv.log_g[t / 2 - 1], lv.log_g[t / 2 - 1], lv.log_g[t - 1], opt.threads);
        if (opt.partials)
            for (std::uint64_t t = 3; t < kids; ++t)
            {
                if ((t & (t - 1)) == 0)
                    continue;
                const std::uint64_t p = std::uint64_t(1) << (63 - std::countl_zero(t));
                log_convolve(lv.log_g[p - 1], lv.log_g[t - p - 1], lv.log_g[t - 1], opt.threads);
            }
        const auto& full = lv.log_g[kids - 1];
        lv.log_z.assign(n + 1, 0.0);
        for (std::uint64_t m = 2; m <= n; ++m)
        {
            const double md = double(m);
            lv.log_z[m]     = log_factorial(m) - lv.beta * md * md + full[m];
            if (!std::isfinite(lv.log_z[m]))
                throw std::runtime_error("non-finite log Z at level " + std::to_string(k)
                                         + ", m = " + std::to_string(m));
        }
        child_log_z = lv.log_z;
    }
    return out;
}

inline LevelTables build_tables(std::uint64_t n, double beta, int d, unsigned depth_pad = 4)
{
    TableOptions opt;
    opt.depth_pad = depth_pad;
    return build_tables(n, beta, d, opt);
}

struct PartitionValue
{
    double   log_z     = 0; ///< stabilised log Z(n, beta)
    double   delta     = 0; ///< |change| at the last doubling of the depth pad
    unsigned depth_pad = 0; ///< pad of the returned value
};

/// Builds tables with depth pads 4, 8, 16, ... (capped at the fixed-point
/// limit) until log Z(n) moves by less than tol * max(1, |log Z|). Returns the
/// tables at the accepted pad.
inline LevelTables build_tables_converged(std::uint64_t n, double beta, int d, double tol,
                                          TableOptions opt, PartitionValue* value = nullptr)
{
    if (!(tol > 0))
        throw std::invalid_argument("tol must be positive");
    const unsigned h       = base_level(std::max<std::uint64_t>(n, 2), d);
    const unsigned max_pad = max_truncation_level(n, d) - h;
    opt.depth_pad          = std::min(4u, max_pad);
    LevelTables prev       = build_tables(n, beta, d, opt);
    for (;;)
    {
        if (opt.depth_pad >= max_pad)
            throw ConvergenceError("log Z did not stabilise before the truncation depth limit");
        opt.depth_pad    = std::min(opt.depth_pad * 2, max_pad);
        LevelTables cur  = build_tables(n, beta, d, opt);
        const double a   = prev.log_z(n);
        const double b   = cur.log_z(n);
        const double gap = std::abs(b - a);
        if (gap < tol * std::max(1.0, std::abs(b)))
        {
            if (value)
                *value = {b, gap, opt.depth_pad};
            return cur;
        }
        prev = std::move(cur);
    }
}

/// log Z(n, beta) with the depth-doubling convergence loop. Z(0) = Z(1) = 1 and
/// Z(n, 0) = 1 are returned exactly.
inline PartitionValue log_partition(std::uint64_t n, double beta, int d, double tol = 1e-12)
{
    check_dimension(d);
    if (!(beta >= 0))
        throw std::invalid_argument("beta must be non-negative");
    if (n <= 1 || beta == 0)
        return {0.0, 0.0, 0};
    TableOptions opt;
    opt.partials = false;
    PartitionValue v;
    build_tables_converged(n, beta, d, tol, opt, &v);
    return v;
}

struct PartitionRatio
{
    double ratio    = 0; ///< log Z(n+1) - log Z(n)
    double residual = 0; ///< ratio + beta D_n
};

/// log Z(n+1)/Z(n) from one converged table build, with the residual against
/// the ground-state increment.
inline PartitionRatio log_partition_ratio(std::uint64_t n, double beta, int d, double tol = 1e-12)
{
    if (n < 2)
        throw std::invalid_argument("log_partition_ratio needs n >= 2");
    const double dn = double(energy_increment(n, d));
    if (beta == 0)
        return {0.0, 0.0};
    TableOptions opt;
    opt.partials      = false;
    const auto tables = build_tables_converged(n + 1, beta, d, tol, opt);
    const double r    = tables.log_z(n + 1) - tables.log_z(n);
    return {r, r + beta * dn};
}

// ---------------------------------------------------------------------------
// Binary cache

namespace detail
{
    inline constexpr char          table_magic[8]  = {'H', 'C', 'G', 'T', 'A', 'B', 'L', 'E'};
    inline constexpr std::uint32_t table_version   = 1;

    template <class T>
    void put(std::ostream& os, const T& v)
    {
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    template <class T>
    T get(std::istream& is)
    {
        T v{};
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!is)
            throw std::runtime_error("truncated table cache");
        return v;
    }
    inline void put_vec(std::ostream& os, const std::vector<double>& v)
    {
        put<std::uint64_t>(os, v.size());
        os.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    inline std::vector<double> get_vec(std::istream& is)
    {
        const auto          len = get<std::uint64_t>(is);
        std::vector<double> v(len);
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(len * sizeof(double)));
        if (!is)
            throw std::runtime_error("truncated table cache");
        return v;
    }
} // namespace detail

/// Writes the tables with a versioned header carrying (n, beta, d, K).
inline void save_tables(const std::string& path, const LevelTables& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open " + path);
    os.write(detail::table_magic, sizeof detail::table_magic);
    detail::put(os, detail::table_version);
    detail::put<std::int32_t>(os, t.d_);
    detail::put(os, t.beta_);
    detail::put<std::uint64_t>(os, t.n_);
    detail::put<std::uint32_t>(os, t.depth());
    detail::put<std::uint32_t>(os, t.pad_);
    detail::put<std::uint8_t>(os, t.partials_ ? 1 : 0);
    for (const auto& lv : t.levels_)
    {
        detail::put(os, lv.beta);
        detail::put_vec(os, lv.log_f);
        detail::put_vec(os, lv.log_z);
        for (const auto& g : lv.log_g)
            detail::put_vec(os, g);
    }
    if (!os)
        throw std::runtime_error("write failed: " + path);
}

inline LevelTables load_tables(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    char magic[sizeof detail::table_magic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, detail::table_magic, sizeof magic) != 0)
        throw std::runtime_error("not a table cache: " + path);
    if (detail::get<std::uint32_t>(is) != detail::table_version)
        throw std::runtime_error("unsupported table cache version");
    LevelTables t;
    t.d_                = detail::get<std::int32_t>(is);
    check_dimension(t.d_);
    t.beta_             = detail::get<double>(is);
    t.n_                = detail::get<std::uint64_t>(is);
    const auto depth    = detail::get<std::uint32_t>(is);
    t.pad_              = detail::get<std::uint32_t>(is);
    t.partials_         = detail::get<std::uint8_t>(is) != 0;
    if (depth >= max_level)
        throw std::runtime_error("corrupt table cache depth");
    t.levels_.resize(depth + 1);
    for (auto& lv : t.levels_)
    {
        lv.beta  = detail::get<double>(is);
        lv.log_f = detail::get_vec(is);
        lv.log_z = detail::get_vec(is);
        lv.log_g.resize(fan_out(t.d_));
        for (auto& g : lv.log_g)
            g = detail::get_vec(is);
    }
    return t;
}

} // namespace hcg

#endif // HCG_ZFUN_HPP_INCLUDED
