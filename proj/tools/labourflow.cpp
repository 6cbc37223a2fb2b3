// Command-line front end for the labour-flow pipeline.
//
//   labourflow run --config pipeline.conf [--stages ingest,graph] [--workers 4]
//   labourflow validate --config pipeline.conf
//   labourflow generate --output data/ [--scenario scenario.json]
//
// Exit codes: 0 on success, 1 for configuration/usage problems, 2 for
// runtime failures (missing checkpoints, unreadable inputs, ...).

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "labourflow/core.hpp"
#include "labourflow/pipeline.hpp"
#include "labourflow/synth.hpp"

namespace {

struct RunArgs {
    std::string config_path;
    std::string stages = "ingest,graph,metrics,communities,demand,correlate,report";
    int workers = 0;           // 0 = keep configured value
    std::string output_dir;    // empty = keep configured value
    std::string format;        // empty = keep configured value
};

labourflow::pipeline::PipelineConfig load_config(const RunArgs& args) {
    auto cfg = labourflow::pipeline::PipelineConfig::load(args.config_path);
    if (args.workers > 0) cfg.workers = args.workers;
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    if (!args.format.empty()) cfg.report_format = args.format;
    return cfg;
}

// Loads and validates; returns nullopt (after reporting) when the
// configuration is unusable.  Parse errors count as validation failures.
std::optional<labourflow::pipeline::PipelineConfig> checked_config(const RunArgs& args) {
    try {
        auto cfg = load_config(args);
        const auto problems = labourflow::pipeline::validate(cfg);
        if (problems.empty()) return cfg;
        for (const auto& problem : problems) {
            std::cerr << "error: " << problem << "\n";
        }
    } catch (const labourflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return std::nullopt;
}

int cmd_validate(const RunArgs& args) {
    if (!checked_config(args)) return 1;
    std::cout << "configuration ok\n";
    return 0;
}

int cmd_run(const RunArgs& args) {
    const auto cfg = checked_config(args);
    if (!cfg) return 1;
    std::vector<labourflow::pipeline::Stage> stages;
    try {
        stages = labourflow::pipeline::parse_stages(args.stages);
    } catch (const labourflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    labourflow::pipeline::run(*cfg, stages, std::cout);
    return 0;
}

int cmd_generate(const std::string& scenario_path, const std::string& output_dir,
                 std::int64_t seed_override) {
    labourflow::synth::Scenario scenario =
        scenario_path.empty() ? labourflow::synth::Scenario::default_scenario()
                              : labourflow::synth::Scenario::from_json_file(scenario_path);
    if (seed_override >= 0) scenario.seed = static_cast<std::uint64_t>(seed_override);
    const auto files = labourflow::synth::generate(scenario, output_dir);
    std::cout << "wrote " << files.registry.string() << "\n"
              << "wrote " << files.queries.string() << "\n"
              << "wrote " << files.postings.string() << "\n"
              << "wrote " << files.indicators.string() << "\n"
              << "wrote " << files.ground_truth.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"labour-market flow analytics"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run pipeline stages");
    run->add_option("--config", run_args.config_path, "pipeline configuration file")
        ->required();
    run->add_option("--stages", run_args.stages, "comma-separated stages to run");
    run->add_option("--workers", run_args.workers, "worker thread count override");
    run->add_option("--output", run_args.output_dir, "output directory override");
    run->add_option("--format", run_args.format, "report format override (csv or json)");

    RunArgs validate_args;
    auto* validate = app.add_subcommand("validate", "check a configuration file");
    validate->add_option("--config", validate_args.config_path, "pipeline configuration file")
        ->required();

    std::string scenario_path;
    std::string generate_out;
    std::int64_t seed_override = -1;
    auto* generate = app.add_subcommand("generate", "generate a synthetic dataset");
    generate->add_option("--scenario", scenario_path, "scenario description (JSON)");
    generate->add_option("--output", generate_out, "directory to write the dataset into")
        ->required();
    generate->add_option("--seed", seed_override, "scenario seed override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (validate->parsed()) return cmd_validate(validate_args);
        return cmd_generate(scenario_path, generate_out, seed_override);
    } catch (const labourflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
