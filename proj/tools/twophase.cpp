#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twophase/cli.hpp"
#include "twophase/errors.hpp"

int main(int argc, char** argv) {
    using namespace twophase;

    CLI::App app{"Steady states and decay experiments for two-phase outflow on a half-line"};
    app.set_version_flag("--version", cli::version_string());
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    std::vector<std::string> overrides;

    for (const auto& name : cli::subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat section.key = value config file")->required();
        sub->add_option("--out", out_dir, "output directory (default: output.directory, $TWOPHASE_OUT, twophase_out)");
        sub->add_option("--workers", workers, "sweep worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--override", overrides, "section.key=value, applied after the file");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
    }
    const std::string name = app.get_subcommands().front()->get_name();
    const std::optional<std::string> cli_out = out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);

    cli::ExperimentConfig config;
    try {
        config = cli::parse_config(config_path);
        for (const auto& o : overrides) config.apply_override(o);
        config.validate();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        cli::record_failure(name, cli::resolve_output_dir(cli_out, cli::ExperimentConfig{}), e.exit_code(), e.what());
        return e.exit_code();
    }

    const cli::RunRecord rec = cli::run_subcommand(name, config, {cli::resolve_output_dir(cli_out, config), workers});
    if (rec.exit_code != 0) std::cerr << "error: " << rec.reason << '\n';
    std::cout << rec.to_json() << '\n';
    return rec.exit_code;
}
