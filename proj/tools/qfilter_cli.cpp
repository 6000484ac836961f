// Command-line front end; talks to the shared library through the C API only.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qfilter/qfilter.h"

namespace {

void print_and_free(char* json, const std::string& json_path) {
    if (!json) return;
    if (!json_path.empty()) {
        FILE* f = std::fopen(json_path.c_str(), "wb");
        if (f) {
            std::fputs(json, f);
            std::fclose(f);
        } else {
            std::fprintf(stderr, "warning: cannot write %s\n", json_path.c_str());
        }
    } else {
        std::fputs(json, stdout);
    }
    qf_string_free(json);
}

int report_error(int code) {
    std::fprintf(stderr, "error (%d): %s\n", code, qf_last_error());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("qfilter - quantum trajectory and filtering toolkit (") +
                 qf_version() + ")"};
    app.require_subcommand(1);

    // run
    std::string run_scenario_path, run_out_dir = "out";
    long long run_seed = -1;
    auto* run = app.add_subcommand("run", "execute a scenario file");
    run->add_option("--scenario", run_scenario_path, "scenario TOML file")->required();
    run->add_option("--seed", run_seed, "override the scenario seed");
    run->add_option("--out", run_out_dir, "output directory");

    // verify
    std::string verify_suite_name, verify_json_path;
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("--suite", verify_suite_name,
                       "one of: structure, ito_table, nondemolition, martingale, "
                       "oracle_filter, riccati, classical_crosscheck, convergence, all")
        ->required();
    verify->add_option("--json", verify_json_path, "write the JSON report here");

    // convergence
    std::string conv_scenario_path, conv_json_path;
    std::vector<double> conv_dts;
    auto* conv = app.add_subcommand("convergence", "re-run a scenario across step sizes");
    conv->add_option("--scenario", conv_scenario_path, "scenario TOML file")->required();
    conv->add_option("--dt-list", conv_dts, "step sizes")->required()->expected(2, 64);
    conv->add_option("--json", conv_json_path, "write the JSON report here");

    // sweep
    std::string sweep_scenario_path, sweep_param, sweep_out_dir = "out";
    std::vector<double> sweep_values;
    auto* sweep = app.add_subcommand("sweep", "run a scenario over parameter values");
    sweep->add_option("--scenario", sweep_scenario_path, "scenario TOML file")->required();
    sweep->add_option("--param", sweep_param, "dotted config key, e.g. model.lambda")->required();
    sweep->add_option("--values", sweep_values, "parameter values")->required()->expected(1, 256);
    sweep->add_option("--out", sweep_out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        char* manifest = nullptr;
        int code = qf_run_scenario_file(run_scenario_path.c_str(), run_seed,
                                        run_out_dir.c_str(), &manifest);
        if (code != QF_OK) return report_error(code);
        std::fprintf(stdout, "wrote %s/manifest.json\n", run_out_dir.c_str());
        qf_string_free(manifest);
        return QF_OK;
    }

    if (verify->parsed()) {
        char* report = nullptr;
        int code = qf_verify(verify_suite_name.c_str(), &report);
        if (code != QF_OK && code != QF_VERIFY_FAILURE) return report_error(code);
        print_and_free(report, verify_json_path);
        std::fprintf(stdout, "suite %s: %s\n", verify_suite_name.c_str(),
                     code == QF_OK ? "PASS" : "FAIL");
        return code;
    }

    if (conv->parsed()) {
        char* report = nullptr;
        int code = qf_convergence(conv_scenario_path.c_str(), conv_dts.data(),
                                  static_cast<int>(conv_dts.size()), &report);
        if (code != QF_OK) return report_error(code);
        print_and_free(report, conv_json_path);
        return QF_OK;
    }

    if (sweep->parsed()) {
        char* report = nullptr;
        int code = qf_sweep(sweep_scenario_path.c_str(), sweep_param.c_str(), sweep_values.data(),
                            static_cast<int>(sweep_values.size()), sweep_out_dir.c_str(), &report);
        if (code != QF_OK) return report_error(code);
        print_and_free(report, "");
        return QF_OK;
    }

    return QF_OK;
}
