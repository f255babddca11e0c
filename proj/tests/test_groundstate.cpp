#include <gtest/gtest.h>

#include <map>

#include "hcg/groundstate.hpp"
#include "hcg/oracle.hpp"
#include "hcg/stats.hpp"

using namespace hcg;

TEST(GroundEnergy, Examples)
{
    EXPECT_EQ(ground_energy(0, 3), 0);
    EXPECT_EQ(ground_energy(1, 3), 0);
    EXPECT_EQ(ground_energy(2, 3), 2);
    EXPECT_EQ(ground_energy(3, 3), 6);
    EXPECT_EQ(ground_energy(8, 3), 56);
    EXPECT_EQ(ground_energy(9, 3), 74);
    EXPECT_EQ(ground_energy(0, 5), 0);
}

TEST(GroundEnergy, BruteForceSmall)
{
    for (int d : {3, 4})
        for (std::uint64_t n = 0; n <= 9; ++n)
            EXPECT_EQ(ground_energy(n, d), brute_min_energy(n, d).energy) << "n=" << n << " d=" << d;
}

TEST(EnergyIncrement, Examples)
{
    EXPECT_EQ(energy_increment(0, 3), 0);
    EXPECT_EQ(energy_increment(1, 3), 2);
    EXPECT_EQ(energy_increment(2, 3), 4);
    EXPECT_EQ(energy_increment(8, 3), 18);
}

TEST(EnergyIncrement, TelescopesAndRecursionAgrees)
{
    for (int d : {3, 4, 5})
    {
        const GroundEnergyTable t(d, 1'000'001);
        for (std::uint64_t n = 0; n <= 1'000'000; ++n)
        {
            const std::int64_t dn = t.increment(n);
            ASSERT_EQ(t.energy(n + 1) - t.energy(n), dn) << "d=" << d << " n=" << n;
            ASSERT_EQ(energy_increment_recursive(n, d), dn);
            // E_n = D_n - 2n obeys E_n = 2^{d-2} E_{floor(n/2^d)} + (2^{d-1} - 2) floor(n/2^d).
            const std::uint64_t q  = n >> d;
            const std::int64_t  en = dn - 2 * std::int64_t(n);
            const std::int64_t  eq = t.increment(q) - 2 * std::int64_t(q);
            ASSERT_EQ(en, (eq << (d - 2)) + ((std::int64_t(1) << (d - 1)) - 2) * std::int64_t(q));
        }
        EXPECT_EQ(BigInt(t.energy(5000)), ground_energy(5000, d));
    }
}

TEST(GroundEnergy, LeadingTermBounded)
{
    for (int d : {3, 4, 5})
    {
        const GroundEnergyTable t(d, 1'000'000);
        const double            c = dim_constant(d).value.convert_to<double>();
        double                  lo = 1e300, hi = -1e300;
        for (std::uint64_t n = 2; n <= 1'000'000; ++n)
        {
            const double nd = double(n);
            const double r  = (double(t.energy(n)) - (c + 2) * nd * nd / 2) / std::pow(nd, (2.0 * d - 2) / d);
            lo              = std::min(lo, r);
            hi              = std::max(hi, r);
        }
        EXPECT_LE(std::abs(lo), 10.0) << "d=" << d;
        EXPECT_LE(std::abs(hi), 10.0) << "d=" << d;
    }
}

TEST(MinPartition, Examples)
{
    const auto t    = min_partition(9, 3);
    const auto root = DyadicCube::root(3);
    EXPECT_EQ(t.count(root.child(0)), 2u);
    for (int i = 1; i < 8; ++i)
        EXPECT_EQ(t.count(root.child(i)), 1u);
    EXPECT_EQ(t.count(root.child(0).child(0)), 1u);
    EXPECT_EQ(t.count(root.child(0).child(1)), 1u);
    EXPECT_EQ(hamiltonian(t), 74);
    EXPECT_TRUE(min_partition(1, 3).nodes().empty());

    const auto full = min_partition(64, 3);
    for (const auto& [cube, cnt] : full.nodes())
        if (cube.level > 0)
        {
            EXPECT_EQ(cnt, cube.level == 1 ? 8u : 1u);
        }
}

TEST(MinPartition, EnergyAndGroundState)
{
    for (int d : {3, 4})
        for (std::uint64_t n = 0; n <= 10000; n = n < 100 ? n + 1 : n * 3 / 2)
        {
            const auto t = min_partition(n, d);
            EXPECT_EQ(hamiltonian(t), ground_energy(n, d)) << n;
            EXPECT_TRUE(is_ground_state(t));
        }
}

TEST(IsGroundState, RejectsUnbalanced)
{
    CountTree  t(3, 9);
    const auto root = DyadicCube::root(3);
    t.set(root.child(0), 3);
    for (int i = 1; i < 7; ++i)
        t.set(root.child(i), 1);
    for (int i = 0; i < 3; ++i)
        t.set(root.child(0).child(i), 1);
    EXPECT_FALSE(is_ground_state(t));
}

TEST(IsGroundState, PermutationInvariant)
{
    RandomStream rng(1, 0);
    for (std::uint64_t n : {9u, 30u, 77u})
    {
        const auto t = sample_ground_state(n, 3, rng);
        EXPECT_TRUE(is_ground_state(t));
        EXPECT_EQ(hamiltonian(t), ground_energy(n, 3));
    }
}

TEST(Counting, Examples)
{
    EXPECT_EQ(count_ground_states(0, 3), 1);
    EXPECT_EQ(count_ground_states(1, 3), 1);
    EXPECT_EQ(count_ground_states(2, 3), 28);
    EXPECT_EQ(count_ground_states(9, 3), 469762048);
    EXPECT_EQ(count_ground_states(8, 3), 1);
    EXPECT_EQ(count_ground_states(64, 3), 1);
    EXPECT_EQ(count_ground_states(16, 4), 1);
}

TEST(Counting, ClosedFormAtPowers)
{
    // b_{N+1} = 2^{-1} N (2^d - 1) (2^d)^N for N = 2^{dk}.
    for (int d : {3, 4})
        for (unsigned k : {1u, 2u})
        {
            if (d == 4 && k == 2)
                continue;
            const std::uint64_t N      = std::uint64_t(1) << (d * k);
            const BigInt        expect = BigInt(N) * (fan_out(d) - 1) * pow(BigInt(fan_out(d)), unsigned(N)) / 2;
            EXPECT_EQ(count_ground_states(N + 1, d), expect);
        }
}

TEST(Counting, MatchesEnumeration)
{
    for (std::uint64_t n = 0; n <= 10; ++n)
        EXPECT_EQ(pattern_count_by_enumeration(n, 3), count_ground_states(n, 3)) << n;
    for (std::uint64_t n = 0; n <= 6; ++n)
        EXPECT_EQ(pattern_count_by_enumeration(n, 4), count_ground_states(n, 4)) << n;
}

TEST(Counting, SingleLevelIsBinomial)
{
    for (std::uint64_t n = 2; n <= 8; ++n)
        EXPECT_EQ(count_ground_states(n, 3), GroundStateCounter::binomial(8, n));
}

TEST(Counting, BudgetError)
{
    EXPECT_THROW(count_ground_states(100000, 3, 64), BudgetError);
}

TEST(GroundWeight, Examples)
{
    EXPECT_DOUBLE_EQ(ground_state_weight(1, 3).log(), 0.0);
    EXPECT_DOUBLE_EQ(ground_state_weight(0, 3).log(), 0.0);
    EXPECT_NEAR(ground_state_weight(2, 3).log(), std::log(7.0 / 16), 1e-14);
    EXPECT_EQ(ground_state_weight_exact(2, 3), BigRational(7, 16));
    EXPECT_EQ(ground_state_weight_exact(9, 3) / ground_state_weight_exact(8, 3), BigRational(7, 16));
    for (std::uint64_t n = 0; n < 40; ++n)
        EXPECT_NEAR(ground_state_weight(n, 3).log(),
                    std::log(ground_state_weight_exact(n, 3).convert_to<double>()), 1e-10);
}

TEST(GroundWeight, LogRatioBracket)
{
    for (int d : {3, 4, 5})
    {
        GroundWeightTable w(d);
        const double      c     = 2 * d * std::log(2.0);
        double            worst = 0;
        for (std::uint64_t n = 0; n <= 100000; ++n)
            worst = std::max(worst, std::abs(w.log_weight(n + 1) - w.log_weight(n)) / std::log(n + 2.0));
        EXPECT_LE(worst, c) << "d=" << d << " measured constant " << worst;
    }
}

TEST(LogZGround, Examples)
{
    EXPECT_DOUBLE_EQ(log_z_ground(0, 1, 3).log(), 0.0);
    EXPECT_DOUBLE_EQ(log_z_ground(1, 7, 3).log(), 0.0);
    EXPECT_NEAR(log_z_ground(2, 1, 3).log(), -2 + std::log(2.0) + std::log(7.0 / 16), 1e-14);
    GroundWeightTable w(3);
    for (std::uint64_t n = 0; n <= 10000; ++n)
        ASSERT_LE(log_factorial(n) + w.log_weight(n), 1e-9) << n;
}

TEST(SampleGroundState, UniformOverPairs)
{
    RandomStream                        rng(2, 0);
    std::map<std::vector<std::uint64_t>, std::uint64_t> hits;
    const int                           draws = 100000;
    for (int i = 0; i < draws; ++i)
    {
        const auto t = sample_ground_state(2, 3, rng);
        ASSERT_TRUE(is_ground_state(t));
        hits[t.children_counts(DyadicCube::root(3))]++;
    }
    EXPECT_EQ(hits.size(), 28u);
    std::vector<std::uint64_t> obs;
    for (const auto& [k, v] : hits)
        obs.push_back(v);
    const auto chi = stats::chi_square_gof(obs, std::vector<double>(obs.size(), 1.0 / 28));
    EXPECT_GT(chi.p_value, 1e-3);
}

TEST(SampleGroundState, DeterministicAtPowers)
{
    RandomStream rng(3, 0);
    EXPECT_EQ(sample_ground_state(64, 3, rng), min_partition(64, 3));
}
