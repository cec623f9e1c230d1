#include "tcglab/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Trust-region / truncated-CG experiments"};
    app.require_subcommand(1);

    std::vector< std::string > params;
    std::uint64_t              seed = 20240611;
    std::string                out  = ".";

    for (const auto& name : tcglab::experiment_names())
    {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--param,-p", params, "key=value (repeatable)");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--out", out, "output directory");
    }
    CLI11_PARSE(app, argc, argv);

    tcglab::ExperimentSpec spec;
    spec.name    = app.get_subcommands().front()->get_name();
    spec.seed    = seed;
    spec.out_dir = out;
    for (const auto& kv : params)
    {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
        {
            std::cerr << "error: --param expects key=value, got '" << kv << "'\n";
            return 2;
        }
        if (!spec.params.emplace(kv.substr(0, eq), kv.substr(eq + 1)).second)
        {
            std::cerr << "error: parameter '" << kv.substr(0, eq) << "' given twice\n";
            return 2;
        }
    }

    try
    {
        const auto result = tcglab::run_experiment(spec);
        std::cout << result.summary_json << '\n';
        return result.exit_code;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
