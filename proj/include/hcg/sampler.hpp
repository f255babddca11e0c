#ifndef HCG_SAMPLER_HPP_INCLUDED
#define HCG_SAMPLER_HPP_INCLUDED

#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hcg/groundstate.hpp"
#include "hcg/partition.hpp"
#include "hcg/rng.hpp"
#include "hcg/zfun.hpp"

namespace hcg
{
/// Shared read-only tables plus a private random stream.
struct SamplerState
{
    std::shared_ptr<const LevelTables> tables;
    RandomStream                       rng;

    SamplerState(std::shared_ptr<const LevelTables> t, std::uint64_t seed, std::uint64_t stream)
        : tables(std::move(t)), rng(seed, stream)
    {
        if (!tables || !tables->has_partials())
            throw std::invalid_argument("sampling needs tables built with partial powers");
    }
};

namespace detail
{
    /// Draws j in [0, r] with probability proportional to exp(log_w[j]).
    inline std::uint64_t draw_log_weighted(const std::vector<double>& log_w, RandomStream& rng)
    {
        double top = neg_inf;
        for (double x : log_w)
            top = x > top ? x : top;
        if (top == neg_inf)
            throw std::logic_error("conditional law has no mass");
        const double floor = top - lse_cutoff;
        double       total = 0;
        for (double x : log_w)
            if (x > floor)
                total += std::exp(x - top);
        double        u    = rng.uniform() * total;
        std::uint64_t last = 0;
        for (std::uint64_t j = 0; j < log_w.size(); ++j)
        {
            if (!(log_w[j] > floor))
                continue;
            last = j;
            u -= std::exp(log_w[j] - top);
            if (u < 0)
                return j;
        }
        return last;
    }

    inline void place_point(const DyadicCube& cube, RandomStream& rng, FixedPoint& out)
    {
        const unsigned k = cube.level;
        out.words.resize(cube.coords.size());
        for (std::size_t j = 0; j < cube.coords.size(); ++j)
        {
            const std::uint64_t fresh = rng.bits();
            if (k == 0)
                out.words[j] = fresh;
            else if (k >= 64)
                out.words[j] = cube.coords[j];
            else
                out.words[j] = (cube.coords[j] << (64 - k)) | (fresh >> k);
        }
    }
} // namespace detail

/// Children counts of a level-k node holding m points, drawn child by child:
///   P(n_i = j | r left) = f_k(j) g_{k,T-1}(r-j) / g_{k,T}(r),  T = children left,
/// the last child taking the remainder.
inline std::vector<std::uint64_t> sample_counts(const LevelTables& tables, std::uint64_t m,
                                                unsigned k, RandomStream& rng)
{
    if (k > tables.depth())
        throw std::out_of_range("level beyond the table depth");
    if (m > tables.max_count())
        throw std::out_of_range("count beyond the table range");
    const std::uint64_t        kids = fan_out(tables.dimension());
    std::vector<std::uint64_t> out(kids, 0);
    const auto&                f = tables.level(k).log_f;
    std::uint64_t              r = m;
    std::vector<double>        log_w;
    for (std::uint64_t i = 0; i + 1 < kids && r > 0; ++i)
    {
        const auto& rest = tables.log_g(k, kids - i - 1);
        log_w.resize(r + 1);
        for (std::uint64_t j = 0; j <= r; ++j)
            log_w[j] = f[j] + rest[r - j];
        const std::uint64_t j = detail::draw_log_weighted(log_w, rng);
        out[i]                = j;
        r -= j;
    }
    out[kids - 1] += r;
    return out;
}

/// log P(children counts = comp | parent holds sum(comp)) under the level-k tables.
inline double composition_log_probability(const LevelTables& tables, unsigned k,
                                          const std::vector<std::uint64_t>& comp)
{
    std::uint64_t m   = 0;
    double        acc = 0;
    for (auto c : comp)
    {
        m += c;
        acc += tables.log_f(k, c);
    }
    return acc - tables.log_g(k, fan_out(tables.dimension()))[m];
}

/// Top-down perfect-sampling descent. visit(cube, count) is called for every
/// non-root node with a positive count, parents before children. Nodes at
/// level K+1 holding two or more points get a uniform ground-state subtree,
/// matching the seed of the truncated partition function.
template <class Visit>
void sample_descent(const LevelTables& tables, RandomStream& rng, Visit&& visit)
{
    const int      d     = tables.dimension();
    const unsigned depth = tables.depth();
    struct Pending
    {
        DyadicCube    cube;
        std::uint64_t count;
    };
    std::vector<Pending> stack;
    stack.push_back({DyadicCube::root(d), tables.max_count()});
    while (!stack.empty())
    {
        Pending node = std::move(stack.back());
        stack.pop_back();
        if (node.count <= 1)
            continue;
        if (node.cube.level > depth)
        {
            grow_ground_subtree(node.cube, node.count, &rng, visit);
            continue;
        }
        if (node.cube.level >= max_level)
            throw std::out_of_range("descent passed level 64");
        const auto counts = sample_counts(tables, node.count, node.cube.level, rng);
        // Push in reverse so children are expanded in index order.
        for (std::uint64_t i = counts.size(); i-- > 0;)
        {
            if (counts[i] == 0)
                continue;
            DyadicCube kid = node.cube.child(i);
            visit(kid, counts[i]);
            stack.push_back({std::move(kid), counts[i]});
        }
    }
}

/// One exact draw of the occupancy tree of the n-point system.
inline CountTree sample_partition(SamplerState& state)
{
    const auto& t = *state.tables;
    CountTree   tree(t.dimension(), t.max_count());
    sample_descent(t, state.rng, [&](const DyadicCube& c, std::uint64_t k) { tree.set(c, k); });
    return tree;
}

/// Uniform point inside each count-1 leaf: the cube coordinates form the
/// high bits, fresh random bits the rest.
inline PointConfiguration sample_points(const CountTree& tree, RandomStream& rng)
{
    if (!tree.is_resolved())
        throw std::invalid_argument("sample_points needs a resolved tree");
    PointConfiguration cfg;
    cfg.d = tree.dimension();
    if (tree.size() == 1)
    {
        cfg.points.emplace_back();
        detail::place_point(DyadicCube::root(cfg.d), rng, cfg.points.back());
        return cfg;
    }
    for (const auto& [cube, cnt] : tree.nodes())
        if (cnt == 1)
        {
            cfg.points.emplace_back();
            detail::place_point(cube, rng, cfg.points.back());
        }
    return cfg;
}

/// Tree and points in a single descent (no intermediate CountTree).
inline PointConfiguration sample_configuration(SamplerState& state)
{
    const auto&        t = *state.tables;
    PointConfiguration cfg;
    cfg.d = t.dimension();
    cfg.points.reserve(t.max_count());
    if (t.max_count() == 1)
    {
        cfg.points.emplace_back();
        detail::place_point(DyadicCube::root(cfg.d), state.rng, cfg.points.back());
        return cfg;
    }
    sample_descent(t, state.rng, [&](const DyadicCube& c, std::uint64_t k) {
        if (k == 1)
        {
            cfg.points.emplace_back();
            detail::place_point(c, state.rng, cfg.points.back());
        }
    });
    return cfg;
}

/// `# seed=... stream=... n=... beta=... d=... depth_pad=...`
inline void write_replica_metadata(std::ostream& os, const SamplerState& s)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.tables->beta());
    os << "# seed=" << s.rng.seed() << " stream=" << s.rng.stream() << " n=" << s.tables->max_count()
       << " beta=" << buf << " d=" << s.tables->dimension()
       << " depth_pad=" << s.tables->depth_pad() << '\n';
}

} // namespace hcg

#endif // HCG_SAMPLER_HPP_INCLUDED
