#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using degenlab::cli::json;

int report_error(const std::string& kind, const std::string& key, const std::string& message, int status) {
    json err = {{"error", kind}, {"message", message}, {"exit_status", status}};
    if (!key.empty()) err["key"] = key;
    std::cerr << err.dump() << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = degenlab::cli;
    CLI::App app{"Experiments for the boundary-degenerate wave equation on the unit square"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir, seed_text;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_text, "master seed");

    // one option per parameter key, stored as text and typed later against the defaults
    std::map<std::string, std::map<std::string, std::string>> texts;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> about{
        {"spectrum", "radial eigenpairs of -(r^alpha R')' on (0,1)"},
        {"simulate", "modal wave evolution: energy and boundary trace series"},
        {"hardy", "subcritical and truncated critical Hardy constants"},
        {"carleman-check", "conjugation residual convergence and Carleman component integrals"},
        {"observability", "high-mode obstruction scan and hidden trace ensemble"},
        {"validate-params", "check (alpha, delta0, beta, T, lambda, s) and derive epsilon"},
    };
    for (const auto& [name, defaults] : cli::subcommand_defaults()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        subs[name] = sub;
        for (const auto& [key, value] : defaults.items()) {
            const std::string flag = "--" + cli::flag_name(key);
            if (value.is_boolean()) {
                sub->add_flag_callback(flag, [&texts, name, key] { texts[name][key] = "true"; });
                sub->add_flag_callback("--no-" + cli::flag_name(key), [&texts, name, key] { texts[name][key] = "false"; });
            } else {
                sub->add_option_function<std::string>(flag, [&texts, name, key](const std::string& v) { texts[name][key] = v; },
                                                      "default " + value.dump());
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("ConfigError", "", e.what(), 2);
    }

    std::string name;
    for (const auto& [n, sub] : subs)
        if (sub->parsed()) name = n;

    cli::RunConfig rc;
    try {
        const json file = config_path.empty() ? json() : cli::load_config_file(config_path);
        auto overrides = texts[name];
        if (!out_dir.empty()) overrides["out"] = out_dir;
        if (!seed_text.empty()) overrides["seed"] = seed_text;
        rc = cli::resolve_config(name, file, overrides, cli::environment_overrides(name));
    } catch (const cli::ConfigError& e) {
        return report_error("ConfigError", e.key(), e.what(), 2);
    } catch (const json::exception& e) {
        return report_error("ConfigError", "config", e.what(), 2);
    }

    try {
        const auto artifacts = cli::run(rc);
        const json doc = cli::write_artifacts(artifacts, rc);
        std::cout << doc.dump(2) << "\n";
    } catch (const cli::ConfigError& e) {
        return report_error("ConfigError", e.key(), e.what(), 2);
    } catch (const degenlab::Error& e) {
        return report_error(std::string(degenlab::to_string(e.code())), "", e.what(), 1);
    } catch (const std::exception& e) {
        return report_error("InternalError", "", e.what(), 1);
    }
    return 0;
}
