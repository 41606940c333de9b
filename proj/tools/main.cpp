#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "riskquant/errors.hpp"
#include "riskquant/experiment.hpp"
#include "riskquant/model_io.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

int do_run(const std::string& config_path) {
    try {
        std::string dir = riskquant::cli::run_experiment_file(config_path);
        std::cout << "artifacts written to " << dir << "\n";
        return 0;
    } catch (const riskquant::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const riskquant::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int do_validate(const std::string& config_path) {
    try {
        auto cfg = riskquant::cli::ExperimentConfig::from_file(config_path);
        cfg.validate();
        std::cout << "config ok: " << riskquant::cli::experiment_kind_name(cfg.kind)
                  << ", output_dir=" << cfg.output_dir << "\n";
        return 0;
    } catch (const riskquant::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const riskquant::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int do_export(const std::string& model_path, const std::string& format) {
    if (format != "json") {
        std::cerr << "unsupported export format '" << format << "'\n";
        return 2;
    }
    try {
        auto model = riskquant::load_model_file(model_path);
        std::visit([](const auto& m) { std::cout << riskquant::to_json(m) << "\n"; }, model);
        return 0;
    } catch (const riskquant::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional VaR/ES learning toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string model_path;
    std::string format = "json";

    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("config", config_path, "TOML experiment config")->required();

    auto* validate = app.add_subcommand("validate", "check a config without executing");
    validate->add_option("config", config_path, "TOML experiment config")->required();

    auto* export_cmd = app.add_subcommand("export-model", "re-emit a model file");
    export_cmd->add_option("model", model_path, "model JSON file")->required();
    export_cmd->add_option("--format", format, "output format (json)");

    auto* version = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        // CLI11 returns 0 for --help; anything else is a usage error.
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) return do_run(config_path);
    if (validate->parsed()) return do_validate(config_path);
    if (export_cmd->parsed()) return do_export(model_path, format);
    if (version->parsed()) {
        std::cout << "riskquant " << kVersion << "\n";
        return 0;
    }
    return 2;
}
