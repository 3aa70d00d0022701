#include "jumpflow/errors.hpp"
#include "jumpflow/io.hpp"
#include "jumpflow/scenario.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Common {
    std::string config;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
};

jumpflow::Scenario load(const Common& c)
{
    auto s = jumpflow::load_scenario(c.config);
    if (!c.output_dir.empty()) {
        s.output_dir = c.output_dir;
    }
    if (c.seed) {
        if (!s.permeability || !s.permeability->synthetic) {
            throw jumpflow::ValidationError("--seed: the config has no synthetic permeability block");
        }
        s.permeability->synthetic->seed = *c.seed;
    }
    return s;
}

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("config", c.config, "Scenario file (JSON, schema 1)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--output-dir", c.output_dir, "Directory for emitted files (overrides output.dir)");
    cmd->add_option("--seed", c.seed, "Seed of the synthetic permeability field");
}

int run_solve(const Common& c)
{
    const auto s = load(c);
    const auto out = jumpflow::solve_scenario(s);
    for (const auto& f : out.files) {
        std::cout << f.string() << '\n';
    }
    std::cout << "n_solves=" << out.result.report.n_solves
              << ",converged=" << (out.result.report.converged ? "true" : "false") << '\n';
    return out.result.report.converged ? 0 : 2;
}

int run_sweep(const Common& c)
{
    const auto s = load(c);
    const auto out = jumpflow::run_sweep(s);
    std::cout << "param,value,n_solves,converged,frac_regime_2\n";
    for (const auto& r : out.rows) {
        std::cout << r.param << ',' << jumpflow::format_double(r.value) << ',' << r.n_solves << ','
                  << (r.converged ? 1 : 0) << ',' << jumpflow::format_double(r.frac_regime_2) << '\n';
    }
    const bool all = std::all_of(out.rows.begin(), out.rows.end(), [](const auto& r) { return r.converged; });
    return all ? 0 : 2;
}

int run_table(const Common& c, std::optional<double> a_max, std::size_t n)
{
    const auto s = load(c);
    double top = *a_max;
    const auto path = s.output_dir / (s.name + "_table.csv");
    jumpflow::write_table(s, top, n, path);
    std::cout << path.string() << '\n';
    return 0;
}

int run_compare(const Common& c)
{
    const auto s = load(c);
    const auto out = jumpflow::compare_scenario(s);
    std::cout << out.csv.string() << '\n';
    std::cout << "err_p=" << jumpflow::format_double(out.errors.err_p)
              << ",err_u=" << jumpflow::format_double(out.errors.err_u) << '\n';
    return out.solve.result.report.converged ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mixed finite element flow with regime-switching drag laws"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    Common solve_opts, sweep_opts, table_opts, compare_opts;
    auto* solve = app.add_subcommand("solve", "Run one scenario");
    add_common(solve, solve_opts);
    auto* sweep = app.add_subcommand("sweep", "Run the sweep block of a scenario");
    add_common(sweep, sweep_opts);
    auto* table = app.add_subcommand("table", "Sample the mollified law of the first term");
    add_common(table, table_opts);
    std::optional<double> a_max;
    std::size_t n = 1000;
    table->add_option("--a-max", a_max, "Upper end of the sampled |u|^2 range")->required()->check(CLI::PositiveNumber);
    table->add_option("--n", n, "Number of samples")->check(CLI::Range(2, 10000000));
    auto* compare = app.add_subcommand("compare", "Compare a 1D run with the exact solution");
    add_common(compare, compare_opts);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*solve) {
            return run_solve(solve_opts);
        }
        if (*sweep) {
            return run_sweep(sweep_opts);
        }
        if (*table) {
            return run_table(table_opts, a_max, n);
        }
        return run_compare(compare_opts);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
