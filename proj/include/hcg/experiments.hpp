#ifndef HCG_EXPERIMENTS_HPP_INCLUDED
#define HCG_EXPERIMENTS_HPP_INCLUDED

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcg/parallel.hpp"
#include "hcg/partition.hpp"
#include "hcg/rng.hpp"
#include "hcg/sampler.hpp"
#include "hcg/stats.hpp"
#include "hcg/zfun.hpp"

namespace hcg
{
/// Dyadic cube, open ball or half-open axis-aligned box inside [0,1)^d.
/// Ball and box parameters are stored as fixed-point words so membership is
/// an exact integer predicate.
class Region
{
public:
    enum class Kind
    {
        cube,
        ball,
        box
    };

    static Region cube(const DyadicCube& c)
    {
        Region r;
        r.kind_ = Kind::cube;
        r.d_    = c.dimension();
        r.cube_ = c;
        return r;
    }

    /// Open ball; it must lie strictly inside the unit cube.
    static Region ball(const std::vector<double>& center, double radius)
    {
        check_dimension(static_cast<int>(center.size()));
        if (!(radius >= 0) || radius >= 0.5)
            throw std::invalid_argument("ball radius must lie in [0, 0.5)");
        for (double c : center)
            if (!(c - radius > 0 && c + radius < 1))
                throw std::invalid_argument("ball must lie strictly inside the unit cube");
        Region r;
        r.kind_   = Kind::ball;
        r.d_      = static_cast<int>(center.size());
        r.center_ = FixedPoint::from_reals(center);
        r.radius_ = FixedPoint::word_from_real(radius);
        r.real_radius_ = radius;
        return r;
    }

    /// Box [lo, hi) coordinatewise.
    static Region box(const std::vector<double>& lo, const std::vector<double>& hi)
    {
        check_dimension(static_cast<int>(lo.size()));
        if (lo.size() != hi.size())
            throw std::invalid_argument("box corners differ in dimension");
        Region r;
        r.kind_ = Kind::box;
        r.d_    = static_cast<int>(lo.size());
        for (std::size_t j = 0; j < lo.size(); ++j)
        {
            if (!(lo[j] >= 0 && lo[j] <= hi[j] && hi[j] <= 1))
                throw std::invalid_argument("box corners must satisfy 0 <= lo <= hi <= 1");
            r.lo_.words.push_back(FixedPoint::word_from_real(lo[j]));
            r.hi_.push_back(hi[j] >= 1 ? 0 : FixedPoint::word_from_real(hi[j]));
            r.hi_open_.push_back(hi[j] >= 1);
        }
        r.box_lo_real_ = lo;
        r.box_hi_real_ = hi;
        return r;
    }

    Kind kind() const
    {
        return kind_;
    }
    int dimension() const
    {
        return d_;
    }

    bool contains(const FixedPoint& p) const
    {
        switch (kind_)
        {
        case Kind::cube:
            return cube_.contains(p);
        case Kind::ball: {
            // |x - c|^2 < r^2 with early exit; every term stays below 2^126.
            const unsigned __int128 r2  = (unsigned __int128)radius_ * radius_;
            unsigned __int128       acc = 0;
            for (int j = 0; j < d_; ++j)
            {
                const std::uint64_t x = p.words[j], c = center_.words[j];
                const std::uint64_t diff = x > c ? x - c : c - x;
                if (diff >= radius_)
                    return false;
                acc += (unsigned __int128)diff * diff;
                if (acc >= r2)
                    return false;
            }
            return true;
        }
        case Kind::box:
            for (int j = 0; j < d_; ++j)
            {
                if (p.words[j] < lo_.words[j])
                    return false;
                if (!hi_open_[j] && p.words[j] >= hi_[j])
                    return false;
            }
            return true;
        }
        return false;
    }

    /// Lebesgue measure (analytic for the ball).
    double volume() const
    {
        switch (kind_)
        {
        case Kind::cube:
            return cube_.volume();
        case Kind::ball:
            return std::pow(std::numbers::pi, d_ / 2.0) / std::tgamma(d_ / 2.0 + 1)
                 * std::pow(real_radius_, d_);
        case Kind::box: {
            double v = 1;
            for (int j = 0; j < d_; ++j)
                v *= box_hi_real_[j] - box_lo_real_[j];
            return v;
        }
        }
        return 0;
    }

private:
    Kind                       kind_ = Kind::cube;
    int                        d_    = 3;
    DyadicCube                 cube_;
    FixedPoint                 center_;
    std::uint64_t              radius_      = 0;
    double                     real_radius_ = 0;
    FixedPoint                 lo_;
    std::vector<std::uint64_t> hi_;
    std::vector<bool>          hi_open_;
    std::vector<double>        box_lo_real_, box_hi_real_;
};

inline std::uint64_t count_in_region(const PointConfiguration& cfg, const Region& u)
{
    if (cfg.d != u.dimension())
        throw std::invalid_argument("region and configuration dimensions differ");
    std::uint64_t k = 0;
    for (const auto& p : cfg.points)
        k += u.contains(p) ? 1 : 0;
    return k;
}

/// A test function on [0,1]^d with its Lipschitz constant (Euclidean norm).
struct LinearStatistic
{
    std::string                                      name;
    std::function<double(const std::vector<double>&)> f;
    double                                           lipschitz = 0;
};

inline double linear_statistic_value(const PointConfiguration& cfg, const LinearStatistic& s)
{
    double              acc = 0;
    std::vector<double> x(cfg.d);
    for (const auto& p : cfg.points)
    {
        for (int j = 0; j < cfg.d; ++j)
            x[j] = p.coordinate(j);
        acc += s.f(x);
    }
    return acc;
}

/// Largest observed |f(x) - f(y)| / |x - y| over random pairs, divided by
/// the declared constant. A registered statistic must stay below 1.01.
inline double lipschitz_ratio(const LinearStatistic& s, int d, RandomStream& rng, int pairs = 10000)
{
    double worst = 0;
    std::vector<double> x(d), y(d);
    for (int i = 0; i < pairs; ++i)
    {
        double dist2 = 0;
        for (int j = 0; j < d; ++j)
        {
            x[j] = rng.uniform();
            // Half of the pairs are close, to probe local slopes.
            y[j] = (i % 2 == 0) ? rng.uniform() : std::clamp(x[j] + 1e-3 * (rng.uniform() - 0.5), 0.0, 1.0);
            dist2 += (x[j] - y[j]) * (x[j] - y[j]);
        }
        if (dist2 == 0)
            continue;
        const double slope = std::abs(s.f(x) - s.f(y)) / std::sqrt(dist2);
        if (s.lipschitz == 0)
        {
            if (slope > 0)
                return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, slope / s.lipschitz);
    }
    return worst;
}

/// Built-in statistics: "x1" (first coordinate), "const" (f = 1),
/// "cos" (cos 2 pi x1), "sum" (x1 + ... + xd).
inline std::vector<LinearStatistic> linear_statistics(int d)
{
    return {
        {"x1", [](const std::vector<double>& x) { return x[0]; }, 1.0},
        {"const", [](const std::vector<double>&) { return 1.0; }, 0.0},
        {"cos", [](const std::vector<double>& x) { return std::cos(2 * std::numbers::pi * x[0]); },
         2 * std::numbers::pi},
        {"sum",
         [](const std::vector<double>& x) {
             double s = 0;
             for (double v : x)
                 s += v;
             return s;
         },
         std::sqrt(double(d))},
    };
}

inline const LinearStatistic& find_linear_statistic(const std::vector<LinearStatistic>& all,
                                                    const std::string& name)
{
    for (const auto& s : all)
        if (s.name == name)
            return s;
    throw std::invalid_argument("unknown linear statistic '" + name + "'");
}

/// A scalar observable of a configuration, with its exact mean when known.
struct Statistic
{
    std::string                                      name;
    std::function<double(const PointConfiguration&)> eval;
    double                                           expected_mean = std::nan("");
};

inline Statistic region_statistic(std::string name, const Region& u, std::uint64_t n)
{
    return {std::move(name),
            [u](const PointConfiguration& c) { return double(count_in_region(c, u)); },
            u.volume() * double(n)};
}

inline Statistic linear_statistic(const LinearStatistic& s, std::uint64_t n, double mean_of_f)
{
    return {s.name, [s](const PointConfiguration& c) { return linear_statistic_value(c, s); },
            mean_of_f * double(n)};
}

struct ExperimentRow
{
    std::uint64_t n    = 0;
    double        beta = 0;
    int           d    = 3;
    std::string   stat;
    std::uint64_t reps     = 0;
    double        mean     = 0;
    double        variance = 0;
    double        var_se   = 0;
    double        mean_se  = 0;
    double        expected_mean = std::nan("");
    std::uint64_t seed     = 0;

    /// |mean - expected| <= 4 SE (true when no expectation is known).
    bool mean_consistent() const
    {
        if (std::isnan(expected_mean))
            return true;
        return std::abs(mean - expected_mean) <= 4 * mean_se + 1e-9 * std::abs(expected_mean);
    }
};

namespace detail
{
    inline std::vector<ExperimentRow> summarise(const std::vector<Statistic>& stats,
                                                const std::vector<std::vector<double>>& values,
                                                std::uint64_t n, double beta, int d,
                                                std::uint64_t reps, std::uint64_t seed)
    {
        std::vector<ExperimentRow> rows;
        for (std::size_t s = 0; s < stats.size(); ++s)
        {
            const auto    m = stats::sample_moments(values[s]);
            ExperimentRow r;
            r.n             = n;
            r.beta          = beta;
            r.d             = d;
            r.stat          = stats[s].name;
            r.reps          = reps;
            r.mean          = m.mean;
            r.variance      = m.variance;
            r.var_se        = m.var_se;
            r.mean_se       = m.mean_se;
            r.expected_mean = stats[s].expected_mean;
            r.seed          = seed;
            rows.push_back(r);
        }
        return rows;
    }

    template <class Draw>
    std::vector<std::vector<double>> replicate(const std::vector<Statistic>& stats,
                                               std::uint64_t reps, unsigned threads, Draw&& draw)
    {
        std::vector<std::vector<double>> values(stats.size(), std::vector<double>(reps));
        parallel_for(reps, threads, [&](std::size_t r) {
            const PointConfiguration cfg = draw(r);
            for (std::size_t s = 0; s < stats.size(); ++s)
                values[s][r] = stats[s].eval(cfg);
        });
        return values;
    }
} // namespace detail

struct ExperimentOptions
{
    unsigned threads   = 1;
    unsigned depth_pad = 4;
};

/// Sample mean and variance of each statistic over `reps` exact Gibbs
/// samples; replica r uses stream id r of `seed`.
inline std::vector<ExperimentRow> estimate_variances(const std::vector<Statistic>& stats,
                                                     std::uint64_t n, double beta, int d,
                                                     std::uint64_t reps, std::uint64_t seed,
                                                     const ExperimentOptions& opt = {})
{
    if (reps < 100)
        throw std::invalid_argument("variance estimates need reps >= 100");
    TableOptions topt;
    topt.depth_pad = opt.depth_pad;
    topt.threads   = opt.threads;
    auto tables    = std::make_shared<const LevelTables>(build_tables(n, beta, d, topt));
    const auto values = detail::replicate(stats, reps, opt.threads, [&](std::size_t r) {
        SamplerState state(tables, seed, r);
        return sample_configuration(state);
    });
    return detail::summarise(stats, values, n, beta, d, reps, seed);
}

inline ExperimentRow estimate_variance(const Statistic& stat, std::uint64_t n, double beta, int d,
                                       std::uint64_t reps, std::uint64_t seed,
                                       const ExperimentOptions& opt = {})
{
    return estimate_variances({stat}, n, beta, d, reps, seed, opt).front();
}

/// n independent uniform points.
inline PointConfiguration uniform_configuration(std::uint64_t n, int d, RandomStream& rng)
{
    PointConfiguration cfg;
    cfg.d = d;
    cfg.points.resize(n);
    for (auto& p : cfg.points)
    {
        p.words.resize(d);
        for (auto& w : p.words)
            w = rng.bits();
    }
    return cfg;
}

/// The same estimator on i.i.d. uniform points (beta = 0 without tables).
inline std::vector<ExperimentRow> poisson_baselines(const std::vector<Statistic>& stats,
                                                    std::uint64_t n, int d, std::uint64_t reps,
                                                    std::uint64_t seed, const ExperimentOptions& opt = {})
{
    if (reps < 100)
        throw std::invalid_argument("variance estimates need reps >= 100");
    check_dimension(d);
    const auto values = detail::replicate(stats, reps, opt.threads, [&](std::size_t r) {
        RandomStream rng(seed, r);
        return uniform_configuration(n, d, rng);
    });
    return detail::summarise(stats, values, n, 0.0, d, reps, seed);
}

inline ExperimentRow poisson_baseline(std::uint64_t n, int d, const Region& region,
                                      std::uint64_t reps, std::uint64_t seed,
                                      const ExperimentOptions& opt = {})
{
    return poisson_baselines({region_statistic("region", region, n)}, n, d, reps, seed, opt).front();
}

struct ExponentFit
{
    double                   slope     = 0;
    double                   intercept = 0;
    double                   slope_se  = 0;
    std::size_t              points    = 0;
    std::vector<std::string> warnings;
};

/// Least squares of log(variance) on log(n). Rows with variance <= 0 are
/// skipped with a warning; at least five usable rows are required.
inline ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& rows)
{
    ExponentFit         fit;
    std::vector<double> x, y;
    for (const auto& [n, v] : rows)
    {
        if (!(v > 0) || !(n > 0))
        {
            char buf[96];
            std::snprintf(buf, sizeof buf, "skipped n = %.17g with variance %.17g", n, v);
            fit.warnings.emplace_back(buf);
            continue;
        }
        x.push_back(std::log(n));
        y.push_back(std::log(v));
    }
    if (x.size() < 5)
        throw std::invalid_argument("exponent fit needs at least five rows with positive variance");
    const auto ls = stats::least_squares(x, y);
    fit.slope     = ls.slope;
    fit.intercept = ls.intercept;
    fit.slope_se  = ls.slope_se;
    fit.points    = x.size();
    return fit;
}

inline ExponentFit fit_exponent(const std::vector<ExperimentRow>& rows, const std::string& stat)
{
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
        if (r.stat == stat)
            pts.emplace_back(double(r.n), r.variance);
    return fit_exponent(pts);
}

// ---------------------------------------------------------------------------
// Standard observables and output

/// Level-1 cube at the origin, the ball of radius 0.3 at the centre, the
/// first-coordinate linear statistic and the constant function.
inline std::vector<Statistic> standard_statistics(std::uint64_t n, int d)
{
    const auto lin = linear_statistics(d);
    return {
        region_statistic("cube", Region::cube(DyadicCube::root(d).child(0)), n),
        region_statistic("ball", Region::ball(std::vector<double>(d, 0.5), 0.3), n),
        linear_statistic(find_linear_statistic(lin, "x1"), n, 0.5),
        linear_statistic(find_linear_statistic(lin, "const"), n, 1.0),
    };
}

inline std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_rows_csv(std::ostream& os, const std::vector<ExperimentRow>& rows, bool header = true)
{
    if (header)
        os << "n,beta,d,stat,reps,mean,variance,var_se,seed\n";
    for (const auto& r : rows)
        os << r.n << ',' << format_real(r.beta) << ',' << r.d << ',' << r.stat << ',' << r.reps << ','
           << format_real(r.mean) << ',' << format_real(r.variance) << ',' << format_real(r.var_se)
           << ',' << r.seed << '\n';
}

/// Powers of two 2^lo .. 2^hi.
inline std::vector<std::uint64_t> dyadic_grid(unsigned lo, unsigned hi)
{
    std::vector<std::uint64_t> out;
    for (unsigned e = lo; e <= hi; ++e)
        out.push_back(std::uint64_t(1) << e);
    return out;
}

} // namespace hcg

#endif // HCG_EXPERIMENTS_HPP_INCLUDED
