#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catt/runner.hpp"

namespace {

// Exit codes, also shown in --help:
//   0 success
//   2 configuration error
//   3 I/O error
//   4 validation error (bad data, shapes, positivity, checkpoint mismatch)
//   5 check failure (gradcheck or benchmark criterion not met)
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kValidationError = 4;
constexpr int kCheckFailed = 5;

catt::ModelMode parse_mode(const std::string& mode) {
    if (mode == "catt") return catt::ModelMode::catt;
    if (mode == "baseline") return catt::ModelMode::baseline;
    throw catt::ConfigError("mode must be catt or baseline, got \"" + mode + "\"");
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        seeds.push_back(std::stoull(item));
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"catt: causal attention toolkit (IS/CS attention, exact front-door oracle, "
                 "confounded benchmark)"};
    app.footer("exit codes: 0 ok, 2 config error, 3 I/O error, 4 validation error, "
               "5 check failure");
    app.require_subcommand(1);

    std::string config_path, out_path, mode = "catt", checkpoint_path, dataset_path, scm_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t oracle_x = 0;
    std::string seeds_csv = "1,2,3,4,5";
    bool corrupt_grad = false;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration file")->required();
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; },
            "override train.seed");
    };

    auto* datagen = app.add_subcommand("datagen", "generate the confounded train/test splits");
    add_config(datagen);

    auto* train = app.add_subcommand("train", "train a model and write checkpoint + metrics");
    add_config(train);
    train->add_option("--mode", mode, "catt or baseline")->check(CLI::IsMember({"catt", "baseline"}));

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a JSONL dataset");
    add_config(eval);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file (default: paths.checkpoint)");
    eval->add_option("--dataset", dataset_path, "JSONL dataset (default: paths.test)");
    eval->add_option("--mode", mode, "catt or baseline")->check(CLI::IsMember({"catt", "baseline"}));

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model");
    add_config(gradcheck);
    gradcheck->add_flag("--corrupt-grad", corrupt_grad,
                        "test hook: tamper with one analytic gradient (must fail)");

    auto* oracle = app.add_subcommand("oracle", "print all adjustment distributions for an SCM");
    oracle->add_option("--scm", scm_path, "SCM file")->required();
    oracle->add_option("--x", oracle_x, "value of X to query")->required();

    auto* benchmark = app.add_subcommand("benchmark", "baseline vs catt deconfounding comparison");
    add_config(benchmark);
    benchmark->add_option("--seeds", seeds_csv, "comma-separated training seeds (need >= 3)");
    benchmark->add_option("--out", out_path, "write the summary table to this file");

    auto* kmeans_dump = app.add_subcommand("kmeans-dump", "print feature-dictionary centroids");
    add_config(kmeans_dump);
    kmeans_dump->add_option("--out", out_path, "write centroids to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        auto load_config = [&]() {
            catt::RunConfig cfg = catt::RunConfig::load(config_path);
            if (seed_set) cfg.train.seed = seed;
            return cfg;
        };

        if (datagen->parsed()) {
            auto cfg = load_config();
            if (seed_set) cfg.data_seed = seed;
            catt::run_datagen(cfg, std::cout);
            return kOk;
        }
        if (train->parsed()) {
            auto cfg = load_config();
            catt::run_train(cfg, parse_mode(mode), std::cout);
            return kOk;
        }
        if (eval->parsed()) {
            auto cfg = load_config();
            if (checkpoint_path.empty()) checkpoint_path = cfg.checkpoint_path;
            if (dataset_path.empty()) dataset_path = cfg.test_path;
            catt::run_eval(cfg, parse_mode(mode), checkpoint_path, dataset_path, std::cout);
            return kOk;
        }
        if (gradcheck->parsed()) {
            auto cfg = load_config();
            auto report = catt::run_gradcheck(cfg, std::cout, corrupt_grad);
            if (!report.passed()) {
                std::cout << "gradcheck FAILED\n";
                return kCheckFailed;
            }
            std::cout << "gradcheck passed\n";
            return kOk;
        }
        if (oracle->parsed()) {
            auto scm = catt::load_scm(scm_path);
            catt::run_oracle(scm, oracle_x, std::cout);
            return kOk;
        }
        if (benchmark->parsed()) {
            auto cfg = load_config();
            auto seeds = parse_seeds(seeds_csv);
            auto result = catt::run_benchmark(cfg, seeds, std::cout);
            if (!out_path.empty()) {
                std::ofstream os(out_path);
                if (!os) throw catt::IoError("benchmark: cannot write " + out_path);
                os << result.table;
            }
            return kOk;
        }
        if (kmeans_dump->parsed()) {
            auto cfg = load_config();
            if (out_path.empty()) {
                catt::run_kmeans_dump(cfg, std::cout);
            } else {
                std::ofstream os(out_path);
                if (!os) throw catt::IoError("kmeans-dump: cannot write " + out_path);
                catt::run_kmeans_dump(cfg, os);
            }
            return kOk;
        }
    } catch (const catt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const catt::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const catt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidationError;
    }
    return kOk;
}
