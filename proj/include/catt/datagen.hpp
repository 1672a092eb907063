#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catt/errors.hpp"

namespace catt {

enum class Split { train, test };

// Synthetic confounded sequence-classification task. Every sample carries its
// label's causal token. A spurious token co-occurs with the label's bias
// partner in training and with an anti-partner at test time, inverting the
// shortcut. Context tokens carry the question-type cue (the label family).
struct ConfoundedTaskSpec {
    std::size_t vocab_in = 32;
    std::size_t vocab_out = 4;
    std::size_t seq_len = 6;
    std::size_t ctx_len = 3;
    double rho_train = 0.95;
    double rho_test = 0.05;
    double noise_rate = 1.0;

    // causal_tokens[y] determines label y; spurious_tokens[y] is label y's
    // bias partner. Noise positions draw from the ids used by neither.
    std::vector<std::size_t> causal_tokens;
    std::vector<std::size_t> spurious_tokens;

    // ids 0..L-1 causal, L..2L-1 spurious
    static ConfoundedTaskSpec defaults();

    std::size_t family(std::size_t label) const { return label / 2; }
    // the other label in the same family; lone labels fall back to (y+1) % L
    std::size_t anti_partner(std::size_t label) const;
    std::vector<std::size_t> noise_pool() const;

    void validate() const;
};

struct Sample {
    std::vector<std::size_t> features;
    std::vector<std::size_t> context;
    std::size_t label = 0;
    // partner label of the planted spurious token, -1 when absent
    int confounder = -1;
    bool spurious_present = false;
};

// Deterministic per (spec, n, split, seed). Labels are stratified so the
// marginal is uniform.
std::vector<Sample> generate(const ConfoundedTaskSpec& spec, std::size_t n, Split split,
                             std::uint64_t seed);

void write_jsonl(const std::vector<Sample>& samples, const std::string& path);
std::vector<Sample> read_jsonl(const std::string& path);

}  // namespace catt
