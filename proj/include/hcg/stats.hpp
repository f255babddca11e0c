#ifndef HCG_STATS_HPP_INCLUDED
#define HCG_STATS_HPP_INCLUDED

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace hcg::stats
{
struct ChiSquareResult
{
    double      statistic = 0;
    std::size_t dof       = 0;
    double      p_value   = 1;
    std::size_t cells     = 0;
};

inline double chi_square_upper_tail(double x, std::size_t dof)
{
    if (dof == 0)
        return 1.0;
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
    return boost::math::cdf(boost::math::complement(dist, std::max(0.0, x)));
}

/// Goodness of fit of observed counts against cell probabilities. Cells are
/// visited in decreasing expected count and merged until each pooled cell
/// expects at least `min_expected` observations.
inline ChiSquareResult chi_square_gof(const std::vector<std::uint64_t>& observed,
                                      const std::vector<double>& probability, double min_expected = 5.0)
{
    if (observed.size() != probability.size())
        throw std::invalid_argument("observed and probability sizes differ");
    double total = 0;
    for (auto o : observed)
        total += double(o);
    std::vector<std::size_t> order(observed.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probability[a] > probability[b]; });

    std::vector<double> pooled_obs, pooled_exp;
    double              o_acc = 0, e_acc = 0;
    for (auto i : order)
    {
        o_acc += double(observed[i]);
        e_acc += probability[i] * total;
        if (e_acc >= min_expected)
        {
            pooled_obs.push_back(o_acc);
            pooled_exp.push_back(e_acc);
            o_acc = e_acc = 0;
        }
    }
    if (!pooled_exp.empty())
    {
        pooled_obs.back() += o_acc;
        pooled_exp.back() += e_acc;
    }
    else if (e_acc > 0)
    {
        pooled_obs.push_back(o_acc);
        pooled_exp.push_back(e_acc);
    }
    ChiSquareResult r;
    r.cells = pooled_exp.size();
    for (std::size_t i = 0; i < pooled_exp.size(); ++i)
    {
        const double diff = pooled_obs[i] - pooled_exp[i];
        r.statistic += diff * diff / pooled_exp[i];
    }
    r.dof     = r.cells > 0 ? r.cells - 1 : 0;
    r.p_value = chi_square_upper_tail(r.statistic, r.dof);
    return r;
}

/// Homogeneity of several count vectors over the same categories
/// (rows = samples, columns = categories). Columns with fewer than
/// `min_expected` expected per row are merged into one.
inline ChiSquareResult chi_square_homogeneity(const std::vector<std::vector<std::uint64_t>>& table,
                                              double min_expected = 5.0)
{
    if (table.empty())
        return {};
    const std::size_t rows = table.size(), cols = table[0].size();
    std::vector<double> col_tot(cols, 0), row_tot(rows, 0);
    double              total = 0;
    for (std::size_t i = 0; i < rows; ++i)
    {
        if (table[i].size() != cols)
            throw std::invalid_argument("ragged contingency table");
        for (std::size_t j = 0; j < cols; ++j)
        {
            col_tot[j] += double(table[i][j]);
            row_tot[i] += double(table[i][j]);
            total += double(table[i][j]);
        }
    }
    if (total == 0)
        return {};
    const double min_row = *std::min_element(row_tot.begin(), row_tot.end());
    std::vector<std::vector<double>> merged(rows);
    std::vector<double>              rest(rows, 0);
    std::vector<double>              merged_col;
    double                           rest_col = 0;
    for (std::size_t j = 0; j < cols; ++j)
    {
        const bool keep = col_tot[j] * min_row / total >= min_expected;
        for (std::size_t i = 0; i < rows; ++i)
        {
            if (keep)
                merged[i].push_back(double(table[i][j]));
            else
                rest[i] += double(table[i][j]);
        }
        if (keep)
            merged_col.push_back(col_tot[j]);
        else
            rest_col += col_tot[j];
    }
    if (rest_col > 0)
    {
        for (std::size_t i = 0; i < rows; ++i)
            merged[i].push_back(rest[i]);
        merged_col.push_back(rest_col);
    }
    ChiSquareResult r;
    r.cells = merged_col.size();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < merged_col.size(); ++j)
        {
            const double e = row_tot[i] * merged_col[j] / total;
            if (e > 0)
                r.statistic += (merged[i][j] - e) * (merged[i][j] - e) / e;
        }
    r.dof     = (rows - 1) * (r.cells > 0 ? r.cells - 1 : 0);
    r.p_value = chi_square_upper_tail(r.statistic, r.dof);
    return r;
}

/// Kolmogorov distribution tail P(K > x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
inline double kolmogorov_tail(double x)
{
    if (x <= 0)
        return 1.0;
    if (x < 0.2)
        return 1.0;
    double sum = 0;
    for (int j = 1; j < 200; ++j)
    {
        const double t = std::exp(-2.0 * j * j * x * x);
        sum += (j % 2 == 1 ? t : -t);
        if (t < 1e-18)
            break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult
{
    double statistic = 0;
    double p_value   = 1;
};

/// One-sample Kolmogorov-Smirnov test against U[0,1), with the
/// Stephens small-sample correction of the statistic.
inline KsResult ks_uniform(std::vector<double> xs)
{
    if (xs.empty())
        return {};
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double       d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
        const double x = std::clamp(xs[i], 0.0, 1.0);
        d              = std::max({d, (double(i) + 1) / n - x, x - double(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

struct LinearFit
{
    double slope     = 0;
    double intercept = 0;
    double slope_se  = 0;
};

/// Ordinary least squares y = a + b x with the usual standard error of b.
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least squares needs two or more paired points");
    const double n  = double(x.size());
    double       mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0)
        throw std::invalid_argument("least squares needs distinct x values");
    LinearFit f;
    f.slope     = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2)
    {
        double rss = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_se = std::sqrt(rss / (n - 2) / sxx);
    }
    return f;
}

/// Sample mean, unbiased variance and the standard error of that variance
/// from the fourth central moment:
///   Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n.
struct Moments
{
    double mean     = 0;
    double variance = 0;
    double var_se   = 0;
    double mean_se  = 0;
};

inline Moments sample_moments(const std::vector<double>& xs)
{
    Moments m;
    const double n = double(xs.size());
    if (xs.size() < 2)
        throw std::invalid_argument("moments need two or more samples");
    for (double x : xs)
        m.mean += x;
    m.mean /= n;
    double m2 = 0, m4 = 0;
    for (double x : xs)
    {
        const double c  = x - m.mean;
        const double c2 = c * c;
        m2 += c2;
        m4 += c2 * c2;
    }
    m.variance      = m2 / (n - 1);
    m4             /= n;
    const double vv = (m4 - (n - 3) / (n - 1) * m.variance * m.variance) / n;
    m.var_se        = std::sqrt(std::max(0.0, vv));
    m.mean_se       = std::sqrt(m.variance / n);
    return m;
}

} // namespace hcg::stats

#endif // HCG_STATS_HPP_INCLUDED
