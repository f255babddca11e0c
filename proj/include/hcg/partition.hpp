#ifndef HCG_PARTITION_HPP_INCLUDED
#define HCG_PARTITION_HPP_INCLUDED

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcg/numtheory.hpp"

namespace hcg
{
/// Deepest level representable by 64-bit fixed-point coordinates.
inline constexpr unsigned max_level = 64;

/// Raised when two points share every coordinate word.
class CoLocatedError : public std::domain_error
{
public:
    CoLocatedError() : std::domain_error("infinite energy pair: co-located points") {}
};

/// A point of [0,1)^d; coordinate j is words[j] / 2^64.
struct FixedPoint
{
    std::vector<std::uint64_t> words;

    int dimension() const
    {
        return static_cast<int>(words.size());
    }

    double coordinate(int j) const
    {
        return static_cast<double>(words[j]) * 0x1.0p-64;
    }

    /// Fixed-point truncation of the given reals, each clamped into [0,1).
    static FixedPoint from_reals(const std::vector<double>& xs)
    {
        FixedPoint p;
        p.words.reserve(xs.size());
        for (double x : xs)
            p.words.push_back(word_from_real(x));
        return p;
    }

    static std::uint64_t word_from_real(double x)
    {
        if (!(x > 0))
            return 0;
        if (x >= 1)
            return ~std::uint64_t(0);
        const long double scaled = std::ldexp(static_cast<long double>(x), 64);
        if (scaled >= 0x1.0p64L)
            return ~std::uint64_t(0);
        return static_cast<std::uint64_t>(scaled);
    }

    bool operator==(const FixedPoint&) const = default;
};

/// Product of half-open intervals [i_j 2^-k, (i_j+1) 2^-k).
struct DyadicCube
{
    unsigned                   level = 0;
    std::vector<std::uint64_t> coords;

    static DyadicCube root(int d)
    {
        return {0, std::vector<std::uint64_t>(static_cast<std::size_t>(d), 0)};
    }

    int dimension() const
    {
        return static_cast<int>(coords.size());
    }

    /// Child number `index` in [0, 2^d); the first coordinate supplies the
    /// most significant bit, so index order is lexicographic in the coords.
    DyadicCube child(std::uint64_t index) const
    {
        if (level >= max_level)
            throw std::out_of_range("dyadic cube below level 64 is not representable");
        const int  d = dimension();
        DyadicCube c{level + 1, coords};
        for (int j = 0; j < d; ++j)
            c.coords[j] = (coords[j] << 1) | ((index >> (d - 1 - j)) & 1u);
        return c;
    }

    DyadicCube parent() const
    {
        DyadicCube p{level - 1, coords};
        for (auto& c : p.coords)
            c >>= 1;
        return p;
    }

    /// Position of this cube among its parent's children.
    std::uint64_t child_index() const
    {
        std::uint64_t idx = 0;
        for (auto c : coords)
            idx = (idx << 1) | (c & 1u);
        return idx;
    }

    bool contains(const FixedPoint& p) const
    {
        if (level == 0)
            return true;
        for (int j = 0; j < dimension(); ++j)
            if ((p.words[j] >> (64 - level)) != coords[j])
                return false;
        return true;
    }

    double volume() const
    {
        return std::ldexp(1.0, -static_cast<int>(level) * dimension());
    }

    auto operator<=>(const DyadicCube&) const = default;
};

/// The cube of the given level containing p.
inline DyadicCube cube_of(const FixedPoint& p, unsigned level)
{
    DyadicCube c{level, std::vector<std::uint64_t>(p.words.size(), 0)};
    if (level > 0)
        for (std::size_t j = 0; j < p.words.size(); ++j)
            c.coords[j] = p.words[j] >> (64 - level);
    return c;
}

/// Index in [0, 2^d) of the child of the level-`level` cube containing p.
inline std::uint64_t child_index_of(const FixedPoint& p, unsigned level)
{
    std::uint64_t idx = 0;
    for (auto w : p.words)
        idx = (idx << 1) | ((w >> (63 - level)) & 1u);
    return idx;
}

/// Sparse occupancy record: positive counts per dyadic cube. The root is
/// implicit and holds n; zero counts are never stored.
class CountTree
{
public:
    CountTree(int d, std::uint64_t n) : d_(d), n_(n)
    {
        check_dimension(d);
    }

    int dimension() const
    {
        return d_;
    }
    std::uint64_t size() const
    {
        return n_;
    }
    const std::map<DyadicCube, std::uint64_t>& nodes() const
    {
        return nodes_;
    }

    /// Stores a non-root node; a zero count erases it.
    void set(const DyadicCube& cube, std::uint64_t count)
    {
        if (cube.dimension() != d_)
            throw std::invalid_argument("cube dimension does not match tree");
        if (cube.level == 0)
        {
            if (count != n_)
                throw std::invalid_argument("root count is fixed to n");
            return;
        }
        if (count == 0)
            nodes_.erase(cube);
        else
            nodes_[cube] = count;
    }

    std::uint64_t count(const DyadicCube& cube) const
    {
        if (cube.level == 0)
            return n_;
        auto it = nodes_.find(cube);
        return it == nodes_.end() ? 0 : it->second;
    }

    /// Counts of the 2^d children of `cube`, absent children as 0.
    std::vector<std::uint64_t> children_counts(const DyadicCube& cube) const
    {
        std::vector<std::uint64_t> out(fan_out(d_), 0);
        for (std::uint64_t i = 0; i < out.size(); ++i)
            out[i] = count(cube.child(i));
        return out;
    }

    unsigned depth() const
    {
        return nodes_.empty() ? 0 : nodes_.rbegin()->first.level;
    }

    /// Per stored parent (root included): sum of children counts, number of
    /// stored children, min and max stored child count.
    struct ChildSummary
    {
        std::uint64_t sum     = 0;
        std::uint64_t sum_sq  = 0;
        std::uint64_t stored  = 0;
        std::uint64_t min_kid = ~std::uint64_t(0);
        std::uint64_t max_kid = 0;
    };

    std::map<DyadicCube, ChildSummary> child_summaries() const
    {
        std::map<DyadicCube, ChildSummary> out;
        for (const auto& [cube, cnt] : nodes_)
        {
            auto& s = out[cube.parent()];
            s.sum += cnt;
            s.sum_sq += cnt * cnt;
            ++s.stored;
            s.min_kid = std::min(s.min_kid, cnt);
            s.max_kid = std::max(s.max_kid, cnt);
        }
        return out;
    }

    /// Structural check: every stored node has its parent stored, children
    /// sums equal parent counts, and count-1 nodes have no stored children.
    /// Throws std::invalid_argument on violation.
    void validate() const
    {
        const auto summaries = child_summaries();
        for (const auto& [parent, s] : summaries)
        {
            const std::uint64_t pc = count(parent);
            if (pc == 0)
                throw std::invalid_argument("stored node has no stored parent");
            if (s.sum != pc)
                throw std::invalid_argument("children counts do not sum to parent count");
            if (pc == 1)
                throw std::invalid_argument("count-1 node has stored children");
        }
    }

    /// Every node of count >= 2 has stored children (so leaves hold <= 1).
    bool is_resolved() const
    {
        if (n_ <= 1)
            return true;
        const auto summaries = child_summaries();
        if (!summaries.contains(DyadicCube::root(d_)))
            return false;
        for (const auto& [cube, cnt] : nodes_)
            if (cnt >= 2 && !summaries.contains(cube))
                return false;
        return true;
    }

    bool operator==(const CountTree&) const = default;

private:
    int                                 d_;
    std::uint64_t                       n_;
    std::map<DyadicCube, std::uint64_t> nodes_;
};

/// n points with fixed-point coordinates in [0,1)^d.
struct PointConfiguration
{
    int                     d = 3;
    std::vector<FixedPoint> points;

    std::size_t size() const
    {
        return points.size();
    }
};

/// 1 + length of the bit prefix shared by every coordinate pair.
inline unsigned separation_level(const FixedPoint& x, const FixedPoint& y)
{
    unsigned shared = 64;
    for (std::size_t j = 0; j < x.words.size(); ++j)
    {
        const std::uint64_t diff = x.words[j] ^ y.words[j];
        if (diff != 0)
            shared = std::min(shared, static_cast<unsigned>(std::countl_zero(diff)));
    }
    if (shared == 64)
        throw CoLocatedError();
    return shared + 1;
}

/// w(x, y) = 2^{(d-2)(k-1)} with k the separation level.
inline BigInt pair_potential(const FixedPoint& x, const FixedPoint& y, int d)
{
    check_dimension(d);
    return BigInt(1) << ((d - 2) * (separation_level(x, y) - 1));
}

/// Exact H by the level decomposition
///   H = sum_v 2^{(d-2) level(v)} (N(v)^2 - sum_{c child of v} N(c)^2).
/// Requires a resolved tree: the energy inside an unsplit node of count >= 2
/// is not determined by the tree.
inline BigInt hamiltonian(const CountTree& tree)
{
    tree.validate();
    if (!tree.is_resolved())
        throw std::invalid_argument("hamiltonian needs a resolved tree (unsplit node of count >= 2)");
    const int d = tree.dimension();
    BigInt    h = 0;
    for (const auto& [parent, s] : tree.child_summaries())
    {
        const BigInt n = tree.count(parent);
        h += (n * n - s.sum_sq) << ((d - 2) * parent.level);
    }
    return h;
}

/// O(n^2) ordered-pair sum of the pair potential.
inline BigInt hamiltonian_points(const PointConfiguration& cfg)
{
    check_dimension(cfg.d);
    std::vector<std::uint64_t> per_level(max_level + 1, 0);
    for (std::size_t a = 0; a < cfg.points.size(); ++a)
        for (std::size_t b = a + 1; b < cfg.points.size(); ++b)
            ++per_level[separation_level(cfg.points[a], cfg.points[b])];
    BigInt h = 0;
    for (unsigned k = 1; k <= max_level; ++k)
        if (per_level[k])
            h += BigInt(2 * per_level[k]) << ((cfg.d - 2) * (k - 1));
    return h;
}

namespace detail
{
    inline void induce_split(const PointConfiguration& cfg, const DyadicCube& cube,
                             std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi,
                             CountTree& tree)
    {
        if (hi - lo <= 1)
            return;
        if (cube.level >= max_level)
            throw CoLocatedError();
        const unsigned level = cube.level;
        std::sort(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                  idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                      return child_index_of(cfg.points[a], level)
                             < child_index_of(cfg.points[b], level);
                  });
        std::size_t start = lo;
        while (start < hi)
        {
            const std::uint64_t c   = child_index_of(cfg.points[idx[start]], level);
            std::size_t         end = start + 1;
            while (end < hi && child_index_of(cfg.points[idx[end]], level) == c)
                ++end;
            const DyadicCube kid = cube.child(c);
            tree.set(kid, end - start);
            induce_split(cfg, kid, idx, start, end, tree);
            start = end;
        }
    }
} // namespace detail

/// The unique resolved tree of a configuration.
inline CountTree induce_tree(const PointConfiguration& cfg)
{
    CountTree tree(cfg.d, cfg.points.size());
    for (const auto& p : cfg.points)
        if (p.dimension() != cfg.d)
            throw std::invalid_argument("point dimension does not match configuration");
    std::vector<std::size_t> idx(cfg.points.size());
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    detail::induce_split(cfg, DyadicCube::root(cfg.d), idx, 0, idx.size(), tree);
    return tree;
}

/// Squared permutation-invariant distance: sorted-vs-sorted squared L2.
inline std::uint64_t perm_distance_squared(std::vector<std::uint64_t> a,
                                           std::vector<std::uint64_t> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("perm_distance: length mismatch");
    if (std::accumulate(a.begin(), a.end(), std::uint64_t(0))
        != std::accumulate(b.begin(), b.end(), std::uint64_t(0)))
        throw std::invalid_argument("perm_distance: sum mismatch");
    std::sort(a.rbegin(), a.rend());
    std::sort(b.rbegin(), b.rend());
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        const std::uint64_t diff = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        acc += diff * diff;
    }
    return acc;
}

inline double perm_distance(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
{
    return std::sqrt(static_cast<double>(perm_distance_squared(a, b)));
}

// ---------------------------------------------------------------------------
// Text formats

/// One node per line, `level i_1 ... i_d count`, sorted by (level, coords).
/// The root line `0 0 ... 0 n` comes first; an empty tree (n = 0) has no lines.
inline void write_tree(std::ostream& os, const CountTree& tree)
{
    auto line = [&](const DyadicCube& c, std::uint64_t cnt) {
        os << c.level;
        for (auto x : c.coords)
            os << ' ' << x;
        os << ' ' << cnt << '\n';
    };
    if (tree.size() == 0)
        return;
    line(DyadicCube::root(tree.dimension()), tree.size());
    for (const auto& [cube, cnt] : tree.nodes())
        line(cube, cnt);
}

inline CountTree read_tree(std::istream& is, int d_if_empty = 3)
{
    std::string                             text;
    std::vector<std::vector<std::uint64_t>> rows;
    while (std::getline(is, text))
    {
        if (text.empty() || text[0] == '#')
            continue;
        std::istringstream         ls(text);
        std::vector<std::uint64_t> row;
        std::uint64_t              v;
        while (ls >> v)
            row.push_back(v);
        if (!ls.eof())
            throw std::invalid_argument("tree line is not a list of integers: " + text);
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        return CountTree(d_if_empty, 0);
    if (rows[0].size() < 5)
        throw std::invalid_argument("tree line too short");
    const int d = static_cast<int>(rows[0].size()) - 2;
    if (rows[0][0] != 0)
        throw std::invalid_argument("first tree line must be the root");
    CountTree tree(d, rows[0].back());
    for (std::size_t r = 1; r < rows.size(); ++r)
    {
        if (static_cast<int>(rows[r].size()) != d + 2)
            throw std::invalid_argument("inconsistent dimension in tree file");
        DyadicCube c{static_cast<unsigned>(rows[r][0]),
                     {rows[r].begin() + 1, rows[r].begin() + 1 + d}};
        if (c.level == 0 || c.level > max_level)
            throw std::invalid_argument("bad level in tree file");
        for (auto x : c.coords)
            if (c.level < 64 && (x >> c.level) != 0)
                throw std::invalid_argument("cube coordinate out of range");
        tree.set(c, rows[r].back());
    }
    tree.validate();
    return tree;
}

/// CSV with header `x1..xd,w1..wd`: decimal coordinates followed by the exact
/// 64-bit words in hexadecimal. Lines starting with '#' are metadata.
inline void write_points(std::ostream& os, const PointConfiguration& cfg)
{
    for (int j = 1; j <= cfg.d; ++j)
        os << 'x' << j << ',';
    for (int j = 1; j <= cfg.d; ++j)
        os << 'w' << j << (j == cfg.d ? '\n' : ',');
    char buf[64];
    for (const auto& p : cfg.points)
    {
        for (int j = 0; j < cfg.d; ++j)
        {
            std::snprintf(buf, sizeof buf, "%.17g,", p.coordinate(j));
            os << buf;
        }
        for (int j = 0; j < cfg.d; ++j)
        {
            std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(p.words[j]));
            os << buf << (j + 1 == cfg.d ? '\n' : ',');
        }
    }
}

/// Reads the format of write_points; coordinates come from the hex words.
inline PointConfiguration read_points(std::istream& is)
{
    PointConfiguration cfg;
    std::string        text;
    bool               header = false;
    while (std::getline(is, text))
    {
        if (text.empty() || text[0] == '#')
            continue;
        std::vector<std::string> cells;
        std::stringstream        ss(text);
        std::string              cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!header)
        {
            if (cells.size() % 2 != 0)
                throw std::invalid_argument("point CSV header must have 2d columns");
            cfg.d  = static_cast<int>(cells.size() / 2);
            header = true;
            continue;
        }
        if (static_cast<int>(cells.size()) != 2 * cfg.d)
            throw std::invalid_argument("point CSV row has wrong column count");
        FixedPoint p;
        for (int j = 0; j < cfg.d; ++j)
            p.words.push_back(std::stoull(cells[static_cast<std::size_t>(cfg.d + j)], nullptr, 16));
        cfg.points.push_back(std::move(p));
    }
    return cfg;
}

} // namespace hcg

#endif // HCG_PARTITION_HPP_INCLUDED
