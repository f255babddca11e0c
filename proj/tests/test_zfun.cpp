#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "hcg/oracle.hpp"
#include "hcg/verify.hpp"
#include "hcg/zfun.hpp"

using namespace hcg;

TEST(LogPartition, TrivialCases)
{
    EXPECT_EQ(log_partition(0, 1.0, 3).log_z, 0.0);
    EXPECT_EQ(log_partition(1, 1.0, 3).log_z, 0.0);
    EXPECT_EQ(log_partition(500, 0.0, 3).log_z, 0.0);
    EXPECT_THROW(log_partition(5, -1.0, 3), std::invalid_argument);
    EXPECT_THROW(log_partition(5, 1.0, 2), std::invalid_argument);
}

TEST(LogPartition, ZeroBetaTablesApproachZeroFromBelow)
{
    // The ground-state seed under-counts Z = 1 at beta = 0; the deficit shrinks with depth.
    const auto a = build_tables(40, 0.0, 3, 2);
    const auto b = build_tables(40, 0.0, 3, 12);
    for (std::uint64_t m = 2; m <= 40; ++m)
    {
        EXPECT_LE(a.log_z(m), 1e-12);
        EXPECT_LE(a.log_z(m), b.log_z(m) + 1e-12);
        EXPECT_NEAR(b.log_z(m), 0.0, 1e-6);
    }
}

TEST(LogPartition, TwoPointSeries)
{
    for (int d : {3, 4, 5})
        for (double beta : {0.1, 0.5, 1.0, 3.0, 10.0})
            EXPECT_NEAR(log_partition(2, beta, d).log_z, two_point_log_partition(beta, d), 1e-10)
                << "d=" << d << " beta=" << beta;
}

TEST(LogPartition, NineAtUnitBetaBetweenBrackets)
{
    const double lz = log_partition(9, 1.0, 3).log_z;
    EXPECT_GE(lz, log_z_ground(9, 1.0, 3).log() - 1e-12);
    EXPECT_LE(lz, -74.0 + 1e-12);
}

TEST(LogPartition, BracketsHoldOnTables)
{
    for (int d : {3, 4})
        for (double beta : {0.05, 1.0, 8.0})
        {
            const auto r = verify::bracket_slacks(build_tables(200, beta, d, 8));
            EXPECT_GE(r.worst_lower, -1e-9);
            EXPECT_GE(r.worst_upper, -1e-9);
        }
}

TEST(LogPartition, MatchesExactDistributionNormaliser)
{
    // Z(n) from an independent linear-domain composition sum.
    for (double beta : {0.3, 1.0})
        for (std::uint64_t n = 2; n <= 5; ++n)
        {
            const auto exact = exact_count_distribution(n, beta, 3);
            EXPECT_NEAR(log_partition(n, beta, 3).log_z, std::log(exact.z), 1e-9)
                << "n=" << n << " beta=" << beta;
        }
}

TEST(Truncation, MonotoneInDepth)
{
    double prev = -1e300;
    for (unsigned pad : {0u, 1u, 2u, 4u, 8u, 16u})
    {
        const double v = build_tables(50, 0.5, 3, pad).log_z(50);
        EXPECT_GE(v, prev - 1e-12) << pad;
        prev = v;
    }
}

TEST(Tables, LevelConsistency)
{
    const double beta = 0.02;
    const auto   t    = build_tables(60, beta, 3, 12);
    for (unsigned k = 1; k <= 3; ++k)
    {
        const double bk = level_beta(beta, 3, k);
        EXPECT_DOUBLE_EQ(t.level(k).beta, bk);
        for (std::uint64_t m : {2u, 7u, 30u, 60u})
            EXPECT_NEAR(t.log_z(m, k), log_partition(m, bk, 3).log_z, 1e-9) << "k=" << k << " m=" << m;
    }
}

TEST(Tables, PartialsAgreeWithDyadicPowers)
{
    const auto a = build_tables(30, 0.7, 4, 6);
    TableOptions opt;
    opt.depth_pad = 6;
    opt.partials  = false;
    const auto b  = build_tables(30, 0.7, 4, opt);
    EXPECT_TRUE(a.has_partials());
    EXPECT_FALSE(b.has_partials());
    for (std::uint64_t m = 0; m <= 30; ++m)
        EXPECT_DOUBLE_EQ(a.log_z(m), b.log_z(m));
}

TEST(Tables, SaveLoadRoundTrip)
{
    const auto path = (std::filesystem::temp_directory_path() / "hcg_tables_test.bin").string();
    const auto t    = build_tables(25, 1.3, 3, 5);
    save_tables(path, t);
    const auto u = load_tables(path);
    std::remove(path.c_str());
    EXPECT_EQ(u.dimension(), 3);
    EXPECT_EQ(u.max_count(), 25u);
    EXPECT_EQ(u.depth(), t.depth());
    EXPECT_EQ(u.beta(), 1.3);
    for (unsigned k = 0; k <= t.depth(); ++k)
    {
        EXPECT_EQ(u.level(k).log_z, t.level(k).log_z);
        EXPECT_EQ(u.level(k).log_g, t.level(k).log_g);
    }
}

TEST(Tables, LoadRejectsGarbage)
{
    const auto path = (std::filesystem::temp_directory_path() / "hcg_tables_bad.bin").string();
    {
        std::ofstream os(path, std::ios::binary);
        os << "not a table";
    }
    EXPECT_THROW(load_tables(path), std::runtime_error);
    std::remove(path.c_str());
}

TEST(Ratio, MatchesDifference)
{
    const auto r  = log_partition_ratio(20, 1.0, 3);
    const auto z1 = log_partition(21, 1.0, 3).log_z;
    const auto z0 = log_partition(20, 1.0, 3).log_z;
    EXPECT_NEAR(r.ratio, z1 - z0, 1e-9);
    EXPECT_NEAR(r.residual, r.ratio + double(energy_increment(20, 3)), 1e-12);
    EXPECT_THROW(log_partition_ratio(1, 1.0, 3), std::invalid_argument);
}

TEST(Tables, BudgetEnforced)
{
    TableOptions opt;
    opt.memory_budget = 1024;
    EXPECT_THROW(build_tables(1000, 1.0, 3, opt), BudgetError);
}
