#include <gtest/gtest.h>

#include "hcg/rng.hpp"
#include "hcg/stats.hpp"

using namespace hcg;

TEST(ChiSquare, UpperTail)
{
    EXPECT_NEAR(stats::chi_square_upper_tail(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_NEAR(stats::chi_square_upper_tail(2.0, 2), std::exp(-1.0), 1e-14);
    EXPECT_EQ(stats::chi_square_upper_tail(5.0, 0), 1.0);
}

TEST(ChiSquare, GoodnessOfFit)
{
    const auto r = stats::chi_square_gof({50, 50}, {0.5, 0.5});
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.dof, 1u);
    const auto bad = stats::chi_square_gof({90, 10}, {0.5, 0.5});
    EXPECT_NEAR(bad.statistic, 64.0, 1e-12);
    EXPECT_LT(bad.p_value, 1e-10);
    EXPECT_THROW(stats::chi_square_gof({1}, {0.5, 0.5}), std::invalid_argument);
}

TEST(ChiSquare, PoolsSmallCells)
{
    const auto r = stats::chi_square_gof({98, 1, 1}, {0.98, 0.01, 0.01});
    EXPECT_EQ(r.cells, 1u);
    EXPECT_EQ(r.dof, 0u);
}

TEST(ChiSquare, UniformDrawsPass)
{
    RandomStream               rng(1, 0);
    std::vector<std::uint64_t> obs(10, 0);
    for (int i = 0; i < 100000; ++i)
        obs[rng.below(10)]++;
    EXPECT_GT(stats::chi_square_gof(obs, std::vector<double>(10, 0.1)).p_value, 1e-3);
}

TEST(ChiSquare, Homogeneity)
{
    EXPECT_NEAR(stats::chi_square_homogeneity({{10, 20}, {20, 40}}).statistic, 0.0, 1e-12);
    EXPECT_LT(stats::chi_square_homogeneity({{100, 10}, {10, 100}}).p_value, 1e-10);
    EXPECT_THROW(stats::chi_square_homogeneity({{1, 2}, {1}}), std::invalid_argument);
}

TEST(Kolmogorov, Tail)
{
    EXPECT_NEAR(stats::kolmogorov_tail(1.3580986393225507), 0.05, 1e-6);
    EXPECT_EQ(stats::kolmogorov_tail(0.0), 1.0);
    EXPECT_LT(stats::kolmogorov_tail(3.0), 1e-7);
}

TEST(Kolmogorov, UniformAndShifted)
{
    RandomStream        rng(2, 0);
    std::vector<double> u, s;
    for (int i = 0; i < 20000; ++i)
    {
        const double x = rng.uniform();
        u.push_back(x);
        s.push_back(x * x);
    }
    EXPECT_GT(stats::ks_uniform(u).p_value, 1e-3);
    EXPECT_LT(stats::ks_uniform(s).p_value, 1e-10);
}

TEST(LeastSquares, ExactLine)
{
    const auto f = stats::least_squares({1, 2, 3, 4}, {3, 5, 7, 9});
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.slope_se, 0.0, 1e-14);
    EXPECT_THROW(stats::least_squares({1, 1}, {2, 3}), std::invalid_argument);
}

TEST(Moments, NormalSample)
{
    RandomStream        rng(3, 0);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i)
        xs.push_back(2.0 * rng.normal() + 1.0);
    const auto m = stats::sample_moments(xs);
    EXPECT_NEAR(m.mean, 1.0, 4 * m.mean_se);
    EXPECT_NEAR(m.variance, 4.0, 4 * m.var_se);
    // Var(s^2) = 2 sigma^4 / (n-1) for normal data.
    EXPECT_NEAR(m.var_se, std::sqrt(2 * 16.0 / 99999), 0.05 * m.var_se);
    EXPECT_THROW(stats::sample_moments({1.0}), std::invalid_argument);
}
