#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcg/experiments.hpp"
#include "hcg/groundstate.hpp"
#include "hcg/numtheory.hpp"
#include "hcg/parallel.hpp"
#include "hcg/sampler.hpp"
#include "hcg/stats.hpp"
#include "hcg/verify.hpp"
#include "hcg/zfun.hpp"

using json = nlohmann::ordered_json;

namespace
{
enum Exit
{
    ok            = 0,
    verify_failed = 1,
    usage         = 2,
    budget        = 3
};

struct RunConfig
{
    std::string   command;
    std::uint64_t n         = 9;
    double        beta      = 1.0;
    int           d         = 3;
    std::uint64_t seed      = 0;
    std::uint64_t reps      = 1;
    unsigned      depth_pad = 0; // 0 = converge from 4 upwards
    double        tol       = 1e-12;
    std::string   out;
    std::string   format = "text";
    std::string   suite;
    std::string   check;
    unsigned      n_min_exp = 8;
    unsigned      n_max_exp = 13;
    bool          mutate_gamma = false;
};

std::string real(double x)
{
    return hcg::format_real(x);
}

json config_json(const RunConfig& c)
{
    json j;
    j["command"]   = c.command;
    j["n"]         = c.n;
    j["beta"]      = c.beta;
    j["d"]         = c.d;
    j["seed"]      = c.seed;
    j["reps"]      = c.reps;
    j["depth_pad"] = c.depth_pad;
    j["tol"]       = c.tol;
    if (!c.suite.empty())
        j["suite"] = c.suite;
    if (c.command == "experiment")
    {
        j["n_min"] = std::uint64_t(1) << c.n_min_exp;
        j["n_max"] = std::uint64_t(1) << c.n_max_exp;
    }
    j["threads"] = hcg::default_thread_count();
    return j;
}

std::string config_line(const RunConfig& c)
{
    std::ostringstream os;
    os << "# command=" << c.command << " n=" << c.n << " beta=" << real(c.beta) << " d=" << c.d
       << " seed=" << c.seed << " reps=" << c.reps << " depth_pad=" << c.depth_pad << " tol=" << real(c.tol);
    if (!c.suite.empty())
        os << " suite=" << c.suite;
    if (c.command == "experiment")
        os << " n_min=" << (std::uint64_t(1) << c.n_min_exp) << " n_max=" << (std::uint64_t(1) << c.n_max_exp);
    return os.str();
}

/// Writes to --out when given, stdout otherwise.
class Output
{
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty())
        {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw std::runtime_error("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream()
    {
        return file_.is_open() ? file_ : std::cout;
    }

private:
    std::ofstream file_;
};

hcg::LevelTables tables_for(const RunConfig& c, bool partials, hcg::PartitionValue* value = nullptr)
{
    hcg::TableOptions opt;
    opt.partials = partials;
    opt.threads  = hcg::default_thread_count();
    if (c.depth_pad > 0)
    {
        opt.depth_pad = c.depth_pad;
        auto t        = hcg::build_tables(c.n, c.beta, c.d, opt);
        if (value)
            *value = {t.log_z(c.n), 0.0, c.depth_pad};
        return t;
    }
    return hcg::build_tables_converged(c.n, c.beta, c.d, c.tol, opt, value);
}

int cmd_ground(const RunConfig& c)
{
    hcg::check_dimension(c.d);
    const auto     l = hcg::ground_energy(c.n, c.d);
    const auto     h = hcg::base_level(c.n, c.d);
    const auto     dn = hcg::energy_increment(c.n, c.d);
    const double   log_gsw = hcg::ground_state_weight(c.n, c.d).log();
    std::string    b;
    try
    {
        b = hcg::count_ground_states(c.n, c.d).str();
    }
    catch (const hcg::BudgetError&)
    {}
    auto& os = std::cout;
    if (c.format == "json")
    {
        json j;
        j["config"]  = config_json(c);
        j["L"]       = l.str();
        j["D"]       = std::to_string(dn);
        j["h"]       = h;
        j["log_gsw"] = log_gsw;
        if (!b.empty())
            j["b"] = b;
        os << j.dump(2) << '\n';
        return ok;
    }
    os << config_line(c) << '\n';
    os << "L " << l.str() << '\n' << "D " << dn << '\n';
    if (!b.empty())
        os << "b " << b << '\n';
    else
        os << "log_gsw " << real(log_gsw) << '\n';
    os << "h " << h << '\n';
    return ok;
}

int cmd_logz(const RunConfig& c)
{
    hcg::check_dimension(c.d);
    if (!(c.beta >= 0))
        throw std::invalid_argument("beta must be non-negative");
    double   log_z = 0, delta = 0;
    unsigned pad   = c.depth_pad;
    if (c.n > 1 && c.beta > 0)
    {
        hcg::PartitionValue v;
        tables_for(c, false, &v);
        log_z = v.log_z;
        delta = v.delta;
        pad   = v.depth_pad;
    }
    const double l     = hcg::ground_energy(c.n, c.d).convert_to<double>();
    const double lower = log_z - hcg::log_z_ground(c.n, c.beta, c.d).log();
    const double upper = -c.beta * l - log_z;
    const bool   good  = lower >= -1e-9 && upper >= -1e-9;
    if (c.format == "json")
    {
        json j;
        j["config"]      = config_json(c);
        j["log_z"]       = log_z;
        j["delta"]       = delta;
        j["depth_pad"]   = pad;
        j["lower_slack"] = lower;
        j["upper_slack"] = upper;
        j["bracket_ok"]  = good;
        std::cout << j.dump(2) << '\n';
    }
    else
    {
        std::cout << config_line(c) << '\n'
                  << "log_z " << real(log_z) << '\n'
                  << "delta " << real(delta) << '\n'
                  << "depth_pad " << pad << '\n'
                  << "lower_slack " << real(lower) << '\n'
                  << "upper_slack " << real(upper) << '\n';
    }
    return good ? ok : verify_failed;
}

int cmd_sample(const RunConfig& c)
{
    hcg::check_dimension(c.d);
    if (c.reps == 0)
        throw std::invalid_argument("reps must be positive");
    auto tables = std::make_shared<const hcg::LevelTables>(tables_for(c, true));
    std::vector<std::string>   text(c.reps);
    std::vector<hcg::CountTree> trees;
    const bool keep_trees = !c.check.empty();
    if (keep_trees)
        trees.resize(c.reps, hcg::CountTree(c.d, c.n));
    std::vector<char> roundtrip(c.reps, 1);
    hcg::parallel_for(c.reps, hcg::default_thread_count(), [&](std::size_t r) {
        hcg::SamplerState state(tables, c.seed, r);
        const auto        tree = hcg::sample_partition(state);
        const auto        cfg  = hcg::sample_points(tree, state.rng);
        std::ostringstream os;
        hcg::write_replica_metadata(os, state);
        hcg::write_points(os, cfg);
        text[r] = os.str();
        if (keep_trees)
        {
            roundtrip[r] = hcg::induce_tree(cfg) == tree;
            trees[r]     = tree;
        }
    });
    Output out(c.out);
    out.stream() << config_line(c) << '\n';
    for (const auto& t : text)
        out.stream() << t;

    if (c.check.empty())
        return ok;
    bool        passed = true;
    std::string detail;
    if (c.check == "roundtrip")
    {
        std::uint64_t bad = 0;
        for (char x : roundtrip)
            bad += x ? 0 : 1;
        passed = bad == 0;
        detail = std::to_string(bad) + " replicas fail induce_tree(sample_points(t)) == t";
    }
    else if (c.check == "ground")
    {
        std::uint64_t bad = 0;
        for (const auto& t : trees)
            bad += hcg::is_ground_state(t) ? 0 : 1;
        passed = bad == 0;
        detail = std::to_string(bad) + " replicas are not ground states";
    }
    else if (c.check == "multinomial")
    {
        if (c.beta != 0)
            throw std::invalid_argument("--verify multinomial needs --beta 0");
        const std::uint64_t       kids = hcg::fan_out(c.d);
        std::vector<std::uint64_t> hist(c.n + 1, 0);
        for (const auto& t : trees)
            ++hist[t.count(hcg::DyadicCube::root(c.d).child(0))];
        std::vector<double> prob(c.n + 1);
        const double        p = 1.0 / double(kids);
        for (std::uint64_t k = 0; k <= c.n; ++k)
            prob[k] = std::exp(hcg::log_binomial(c.n, k) + double(k) * std::log(p)
                               + double(c.n - k) * std::log1p(-p));
        const auto chi = hcg::stats::chi_square_gof(hist, prob);
        passed         = chi.p_value > 1e-3;
        detail         = "chi2 " + real(chi.statistic) + " dof " + std::to_string(chi.dof) + " p " + real(chi.p_value);
    }
    else
        throw std::invalid_argument("unknown --verify check '" + c.check + "'");
    std::cerr << (passed ? "PASS " : "FAIL ") << c.check << ": " << detail << '\n';
    return passed ? ok : verify_failed;
}

int cmd_experiment(const RunConfig& c)
{
    hcg::check_dimension(c.d);
    if (c.n_min_exp > c.n_max_exp || c.n_max_exp > 20)
        throw std::invalid_argument("bad n range");
    hcg::ExperimentOptions opt;
    opt.threads   = hcg::default_thread_count();
    opt.depth_pad = c.depth_pad > 0 ? c.depth_pad : 4;
    std::vector<std::string> stat_names;
    if (c.suite == "hyper")
        stat_names = {"cube"};
    else if (c.suite == "boundary")
        stat_names = {"ball"};
    else if (c.suite == "linear")
        stat_names = {"x1"};
    else if (c.suite == "baseline")
        stat_names = {"cube", "ball", "x1"};
    else
        throw std::invalid_argument("unknown experiment suite '" + c.suite + "'");

    std::vector<hcg::ExperimentRow> rows;
    for (auto n : hcg::dyadic_grid(c.n_min_exp, c.n_max_exp))
    {
        std::vector<hcg::Statistic> stats;
        for (auto& s : hcg::standard_statistics(n, c.d))
            for (const auto& want : stat_names)
                if (s.name == want)
                    stats.push_back(s);
        const auto part = c.suite == "baseline" ? hcg::poisson_baselines(stats, n, c.d, c.reps, c.seed, opt)
                                                : hcg::estimate_variances(stats, n, c.beta, c.d, c.reps, c.seed, opt);
        rows.insert(rows.end(), part.begin(), part.end());
    }

    Output out(c.out);
    out.stream() << config_line(c) << '\n';
    hcg::write_rows_csv(out.stream(), rows);

    json summary;
    summary["config"] = config_json(c);
    json fits         = json::array();
    for (const auto& name : stat_names)
    {
        const auto f = hcg::fit_exponent(rows, name);
        json       j;
        j["stat"]      = name;
        j["slope"]     = f.slope;
        j["slope_se"]  = f.slope_se;
        j["ci95"]      = {f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se};
        j["intercept"] = f.intercept;
        j["points"]    = f.points;
        j["warnings"]  = f.warnings;
        bool means_ok  = true;
        for (const auto& r : rows)
            if (r.stat == name)
                means_ok = means_ok && r.mean_consistent();
        j["means_within_4se"] = means_ok;
        fits.push_back(j);
    }
    summary["fits"] = fits;
    if (c.out.empty())
        std::cout << summary.dump(2) << '\n';
    else
    {
        std::ofstream js(c.out + ".json", std::ios::binary);
        if (!js)
            throw std::runtime_error("cannot write " + c.out + ".json");
        js << summary.dump(2) << '\n';
    }
    return ok;
}

std::uint64_t broken_gamma(std::uint64_t n, int d)
{
    // Digit sum without the 2^{i(d-2)} scaling.
    std::uint64_t acc = 0;
    for (; n > 0; n >>= d)
        acc += n & (hcg::fan_out(d) - 1);
    return acc;
}

int cmd_verify(const RunConfig& c)
{
    hcg::verify::SuiteOptions o;
    o.seed = c.seed;
    if (c.mutate_gamma)
        o.gamma_impl = broken_gamma;
    const auto rows = hcg::verify::run_suite(c.suite, o);
    std::cout << config_line(c) << '\n';
    hcg::verify::print_table(std::cout, rows);
    bool all = true;
    for (const auto& r : rows)
        all = all && r.passed;
    std::cout << (all ? "all checks passed" : "verification FAILED") << '\n';
    return all ? ok : verify_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hcg: hierarchical Coulomb gas toolkit"};
    app.require_subcommand(1);
    RunConfig c;

    auto add_common = [&](CLI::App* s, bool with_beta) {
        s->add_option("--n", c.n, "number of points")->check(CLI::Range(std::uint64_t(0), std::uint64_t(1) << 40));
        s->add_option("--d", c.d, "dimension (3..16)")->capture_default_str();
        if (with_beta)
            s->add_option("--beta", c.beta, "inverse temperature")->capture_default_str();
    };

    auto* ground = app.add_subcommand("ground", "ground-state energy, increment, counts and base level");
    add_common(ground, false);
    ground->add_option("--format", c.format)->check(CLI::IsMember({"text", "json"}));

    auto* logz = app.add_subcommand("logz", "log partition function with bracket slacks");
    add_common(logz, true);
    logz->add_option("--tol", c.tol)->capture_default_str();
    logz->add_option("--depth-pad", c.depth_pad, "fixed depth pad (0: converge)");
    logz->add_option("--format", c.format)->check(CLI::IsMember({"text", "json"}));

    auto* sample = app.add_subcommand("sample", "exact samples as point CSV");
    add_common(sample, true);
    sample->add_option("--reps", c.reps)->capture_default_str();
    sample->add_option("--seed", c.seed)->capture_default_str();
    sample->add_option("--out", c.out, "output file (default stdout)");
    sample->add_option("--tol", c.tol)->capture_default_str();
    sample->add_option("--depth-pad", c.depth_pad, "fixed depth pad (0: converge)");
    sample->add_option("--verify", c.check, "multinomial | ground | roundtrip")
        ->check(CLI::IsMember({"multinomial", "ground", "roundtrip"}));

    auto* experiment = app.add_subcommand("experiment", "variance scaling experiments");
    experiment->add_option("--suite", c.suite)->required()->check(
        CLI::IsMember({"hyper", "boundary", "linear", "baseline"}));
    experiment->add_option("--d", c.d)->capture_default_str();
    experiment->add_option("--beta", c.beta)->capture_default_str();
    std::uint64_t experiment_reps = 4000;
    experiment->add_option("--reps", experiment_reps)->capture_default_str();
    experiment->add_option("--seed", c.seed)->capture_default_str();
    experiment->add_option("--depth-pad", c.depth_pad);
    experiment->add_option("--n-min-exp", c.n_min_exp)->capture_default_str();
    experiment->add_option("--n-max-exp", c.n_max_exp)->capture_default_str();
    experiment->add_option("--out", c.out, "CSV path; the summary goes to <out>.json");

    auto* verify = app.add_subcommand("verify", "invariant suites with a pass/fail table");
    verify->add_option("--suite", c.suite)->required()->check(CLI::IsMember(hcg::verify::suite_names()));
    verify->add_option("--seed", c.seed)->capture_default_str();
    verify->add_flag("--mutate-gamma", c.mutate_gamma)->group("");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try
    {
        c.command = app.get_subcommands().front()->get_name();
        if (c.command == "experiment")
            c.reps = experiment_reps;
        if (c.command == "ground")
            return cmd_ground(c);
        if (c.command == "logz")
            return cmd_logz(c);
        if (c.command == "sample")
            return cmd_sample(c);
        if (c.command == "experiment")
            return cmd_experiment(c);
        return cmd_verify(c);
    }
    catch (const hcg::BudgetError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return budget;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    }
    catch (const std::out_of_range& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return verify_failed;
    }
}
