#include <gtest/gtest.h>

#include <set>

#include "hcg/oracle.hpp"
#include "hcg/zfun.hpp"

using namespace hcg;

TEST(Compositions, CountAndOrder)
{
    std::vector<Composition> seen;
    for_each_composition(3, 3, [&](const Composition& c) {
        seen.push_back(c);
        return true;
    });
    EXPECT_EQ(seen.size(), 10u);
    EXPECT_EQ(seen.front(), (Composition{0, 0, 3}));
    EXPECT_EQ(seen.back(), (Composition{3, 0, 0}));
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
    std::uint64_t n = 0;
    for_each_composition(5, 8, [&](const Composition&) { return ++n < 7; });
    EXPECT_EQ(n, 7u);
}

TEST(TreeCount, Examples)
{
    TreeCounter c(3);
    EXPECT_EQ(c.count(1, 0), 1);
    EXPECT_EQ(c.count(2, 1), 28);
    EXPECT_EQ(c.count(2, 2), 252);
    EXPECT_EQ(c.count(3, 0), 0);
}

TEST(Enumerate, VisitsEveryTreeOnce)
{
    for (std::uint64_t n : {1u, 2u, 3u})
    {
        std::set<std::string> seen;
        std::uint64_t         visits = 0;
        enumerate_trees(n, 3, 2, [&](const CountTree& t) {
            ++visits;
            EXPECT_NO_THROW(t.validate());
            EXPECT_TRUE(t.is_resolved());
            std::ostringstream os;
            write_tree(os, t);
            seen.insert(os.str());
        });
        EXPECT_EQ(visits, seen.size());
        EXPECT_EQ(BigInt(visits), TreeCounter(3).count(n, 2));
    }
}

TEST(Enumerate, BudgetError)
{
    EXPECT_THROW(enumerate_trees(12, 3, 3, [](const CountTree&) {}, 1000), BudgetError);
}

TEST(Enumerate, GroundStatesAreMinimisers)
{
    // Every tree of depth <= h_n + 1 has H >= L_n, with equality exactly on ground states.
    for (std::uint64_t n = 2; n <= 4; ++n)
    {
        const BigInt  l       = ground_energy(n, 3);
        std::uint64_t minimal = 0;
        enumerate_trees(n, 3, base_level(n, 3) + 1, [&](const CountTree& t) {
            const BigInt h = hamiltonian(t);
            EXPECT_GE(h, l);
            EXPECT_EQ(h == l, is_ground_state(t));
            minimal += h == l;
        });
        EXPECT_EQ(BigInt(minimal), count_ground_trees(n, 3));
    }
}

TEST(Enumerate, GroundTreesMatchCount)
{
    for (int d : {3, 4})
        for (std::uint64_t n = 0; n <= (d == 3 ? 10u : 16u); ++n)
        {
            std::uint64_t visits = 0;
            enumerate_ground_trees(n, d, [&](const CountTree& t) {
                ++visits;
                EXPECT_TRUE(is_ground_state(t));
                EXPECT_EQ(hamiltonian(t), ground_energy(n, d));
            });
            EXPECT_EQ(BigInt(visits), count_ground_trees(n, d)) << "n=" << n << " d=" << d;
        }
}

TEST(BruteMinimum, Examples)
{
    const auto a = brute_min_energy(9, 3);
    EXPECT_EQ(a.energy, 74);
    EXPECT_TRUE(a.argmin_is_balanced);
    const auto b = brute_min_energy(2, 3);
    EXPECT_EQ(b.energy, 2);
    EXPECT_EQ(b.minimizer_count, 28);
    const auto c = brute_min_energy(1, 3);
    EXPECT_EQ(c.energy, 0);
    EXPECT_EQ(c.minimizer_count, 1);
    EXPECT_THROW(brute_min_energy(65, 3), BudgetError);
}

TEST(BruteMinimum, MinimisersAreGroundTrees)
{
    for (int d : {3, 4})
        for (std::uint64_t n = 0; n <= (d == 3 ? 17u : 10u); ++n)
        {
            const auto r = brute_min_energy(n, d);
            EXPECT_EQ(r.energy, ground_energy(n, d)) << n;
            EXPECT_EQ(r.minimizer_count, count_ground_trees(n, d)) << n;
            EXPECT_TRUE(r.argmin_is_balanced) << n;
        }
}

TEST(CountDistribution, ZeroBetaIsMultinomial)
{
    const auto dist = exact_count_distribution(2, 0.0, 3);
    double     same = 0;
    for (const auto& [c, p] : dist.probability)
        if (*std::max_element(c.begin(), c.end()) == 2)
            same += p;
    EXPECT_NEAR(same, 1.0 / 8, 1e-14);
    EXPECT_EQ(dist.z, 1.0);
}

TEST(CountDistribution, TwoPointSeries)
{
    for (double beta : {0.2, 1.0, 3.0})
    {
        const auto dist = exact_count_distribution(2, beta, 3);
        EXPECT_NEAR(std::log(dist.z), two_point_log_partition(beta, 3), 1e-11);
        // Same-cell probability: 2^{-d} Z(2, 2^{d-2} beta) / Z(2, beta).
        double same = 0;
        for (const auto& [c, p] : dist.probability)
            if (*std::max_element(c.begin(), c.end()) == 2)
                same += p;
        const double expect = 0.125 * std::exp(two_point_log_partition(2 * beta, 3)
                                               - two_point_log_partition(beta, 3));
        EXPECT_NEAR(same, expect, 1e-11);
    }
}

TEST(CountDistribution, NormalisedAndMatchesTables)
{
    for (double beta : {0.5, 1.5})
        for (std::uint64_t n = 2; n <= 5; ++n)
        {
            const auto dist = exact_count_distribution(n, beta, 3);
            double     total = 0;
            for (const auto& [c, p] : dist.probability)
            {
                EXPECT_GE(p, 0.0);
                total += p;
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
            EXPECT_LE(dist.bracket_width, 1e-12);
            EXPECT_NEAR(std::log(dist.z), log_partition(n, beta, 3).log_z, 1e-8);
        }
    EXPECT_THROW(exact_count_distribution(7, 1.0, 3), BudgetError);
}

TEST(TwoPoint, Limits)
{
    EXPECT_NEAR(two_point_log_partition(0.0, 3), 0.0, 1e-15);
    // Large beta: dominated by the first term.
    EXPECT_NEAR(two_point_log_partition(40.0, 3), std::log(7.0 / 8) - 80.0, 1e-12);
}
