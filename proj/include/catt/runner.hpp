#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catt/config.hpp"
#include "catt/gradcheck.hpp"
#include "catt/model.hpp"
#include "catt/scm.hpp"

namespace catt {

Batch to_batch(const std::vector<Sample>& samples);
std::vector<Sample> spurious_subset(const std::vector<Sample>& samples);

struct DatagenSummary {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double train_cooccurrence = 0.0;  // fraction of train samples with the partner token
    double test_spurious_rate = 0.0;
};

// Writes train/test JSONL to the configured paths.
DatagenSummary run_datagen(const RunConfig& cfg, std::ostream& log);

struct TrainResult {
    std::vector<EpochMetrics> history;
    double eval_accuracy = 0.0;           // full test split, last state
    double spurious_accuracy = 0.0;       // spurious-present test subset
    std::size_t parameter_count = 0;
};

// Builds dictionaries (k-means over the training set's embedded tokens, or
// random), trains, writes checkpoint and metrics. The metrics file holds the
// deterministic fields; wall-clock timing goes to the log stream only.
TrainResult run_train(const RunConfig& cfg, ModelMode mode, std::ostream& log);

// In-memory variant used by the benchmark: datasets passed directly, nothing
// written.
TrainResult train_in_memory(const RunConfig& cfg, ModelMode mode,
                            const std::vector<Sample>& train_samples,
                            const std::vector<Sample>& test_samples);

struct EvalSummary {
    EvalReport overall;
    EvalReport spurious;  // spurious-present subset; total == 0 when absent
    bool has_spurious = false;
};

EvalSummary run_eval(const RunConfig& cfg, ModelMode mode, const std::string& checkpoint_path,
                     const std::string& dataset_path, std::ostream& log);

// Full-model finite-difference check on a deterministic synthetic batch.
// Refuses configurations above max_params.
GradcheckReport run_gradcheck(const RunConfig& cfg, std::ostream& log, bool corrupt_gradient = false,
                              std::size_t max_params = 1000);

// Prints observational, front-door, backdoor, mutilated-graph truth and
// per-z interventional distributions for X = x.
void run_oracle(const FrontDoorScm& scm, std::size_t x, std::ostream& out);

struct BenchmarkArm {
    std::string name;
    std::vector<double> per_seed;  // spurious-present test accuracy per seed
    double median = 0.0;
};

struct BenchmarkResult {
    std::vector<std::uint64_t> seeds;
    std::vector<BenchmarkArm> arms;
    std::string table;  // structured-text rendering

    const BenchmarkArm& arm(const std::string& name) const;
};

// Trains baseline, catt with k-means init and catt with random init for each
// seed; reports spurious-present test accuracy per seed and arm medians.
BenchmarkResult run_benchmark(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                              std::ostream& log);

// Builds the feature dictionary exactly as run_train would and writes one
// centroid per line.
void run_kmeans_dump(const RunConfig& cfg, std::ostream& out);

}  // namespace catt
