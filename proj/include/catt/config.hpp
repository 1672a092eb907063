#pragma once

#include <cstdint>
#include <string>

#include "catt/datagen.hpp"
#include "catt/dictionary.hpp"
#include "catt/model.hpp"

namespace catt {

// Flat structured-text run configuration: one "section.key = value" per line,
// '#' comments. Unknown keys are rejected.
struct RunConfig {
    ModelConfig model;
    ConfoundedTaskSpec data;
    std::size_t n_train = 2000;
    std::size_t n_test = 2000;
    std::uint64_t data_seed = 7;

    TrainSettings train;

    DictInit dict_init = DictInit::kmeans;
    std::size_t kmeans_iters = 100;
    double random_scale = 0.5;

    std::string train_path = "data/train.jsonl";
    std::string test_path = "data/test.jsonl";
    std::string checkpoint_path = "out/model.ckpt";
    std::string metrics_path = "out/metrics.txt";

    static RunConfig defaults();
    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text, const std::string& origin);
    std::string to_text() const;

    void validate() const;
};

}  // namespace catt
