#include "catt/datagen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "catt/rng.hpp"

namespace catt {

using nlohmann::json;

ConfoundedTaskSpec ConfoundedTaskSpec::defaults() {
    ConfoundedTaskSpec spec;
    spec.causal_tokens.resize(spec.vocab_out);
    spec.spurious_tokens.resize(spec.vocab_out);
    for (std::size_t y = 0; y < spec.vocab_out; ++y) {
        spec.causal_tokens[y] = y;
        spec.spurious_tokens[y] = spec.vocab_out + y;
    }
    return spec;
}

std::size_t ConfoundedTaskSpec::anti_partner(std::size_t label) const {
    std::size_t sibling = label ^ 1u;
    if (sibling < vocab_out) return sibling;
    return (label + 1) % vocab_out;
}

std::vector<std::size_t> ConfoundedTaskSpec::noise_pool() const {
    std::set<std::size_t> used(causal_tokens.begin(), causal_tokens.end());
    used.insert(spurious_tokens.begin(), spurious_tokens.end());
    std::vector<std::size_t> pool;
    for (std::size_t t = 0; t < vocab_in; ++t) {
        if (!used.count(t)) pool.push_back(t);
    }
    return pool;
}

void ConfoundedTaskSpec::validate() const {
    if (vocab_out < 2) throw ConfigError("task: need at least 2 labels");
    if (seq_len < 1 || ctx_len < 1) throw ConfigError("task: sequence lengths must be >= 1");
    if (rho_train < 0.0 || rho_train > 1.0 || rho_test < 0.0 || rho_test > 1.0) {
        throw ConfigError("task: rho values must lie in [0, 1]");
    }
    if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("task: noise_rate must lie in [0, 1]");
    if (causal_tokens.size() != vocab_out) {
        throw ConfigError("task: causal token map must cover every label");
    }
    if (spurious_tokens.size() != vocab_out) {
        throw ConfigError("task: one spurious partner token per label required");
    }
    std::set<std::size_t> causal(causal_tokens.begin(), causal_tokens.end());
    if (causal.size() != vocab_out) throw ConfigError("task: causal tokens must be distinct");
    std::set<std::size_t> spurious(spurious_tokens.begin(), spurious_tokens.end());
    if (spurious.size() != vocab_out) throw ConfigError("task: spurious tokens must be distinct");
    for (auto t : causal_tokens) {
        if (t >= vocab_in) throw ConfigError("task: causal token id out of range");
        if (spurious.count(t)) throw ConfigError("task: spurious set overlaps causal tokens");
    }
    for (auto t : spurious_tokens) {
        if (t >= vocab_in) throw ConfigError("task: spurious token id out of range");
    }
    if (noise_pool().empty()) throw ConfigError("task: vocab_in leaves no noise tokens");
    // family cue ids must be valid context tokens
    if (family(vocab_out - 1) >= vocab_out) throw ConfigError("task: family cue out of range");
}

std::vector<Sample> generate(const ConfoundedTaskSpec& spec, std::size_t n, Split split,
                             std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate: n must be >= 1");
    spec.validate();

    double rho = split == Split::train ? spec.rho_train : spec.rho_test;
    auto pool = spec.noise_pool();
    Rng rng(seed);
    std::vector<Sample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        s.label = i % spec.vocab_out;
        s.features.assign(spec.seq_len, 0);

        std::vector<std::size_t> positions(spec.seq_len);
        for (std::size_t p = 0; p < spec.seq_len; ++p) positions[p] = p;
        rng.shuffle(positions);
        std::size_t next_pos = 0;

        s.features[positions[next_pos++]] = spec.causal_tokens[s.label];
        bool plant_spurious = spec.seq_len > 1 && rng.uniform() < rho;
        if (plant_spurious) {
            std::size_t partner =
                split == Split::train ? s.label : spec.anti_partner(s.label);
            s.features[positions[next_pos++]] = spec.spurious_tokens[partner];
            s.confounder = static_cast<int>(partner);
            s.spurious_present = true;
        }
        while (next_pos < spec.seq_len) {
            std::size_t noise =
                rng.uniform() < spec.noise_rate ? pool[rng.index(pool.size())] : pool.front();
            s.features[positions[next_pos++]] = noise;
        }

        s.context.assign(spec.ctx_len, spec.family(s.label));
        samples.push_back(std::move(s));
    }
    rng.shuffle(samples);
    return samples;
}

void write_jsonl(const std::vector<Sample>& samples, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("datagen: cannot write " + tmp);
        for (const auto& s : samples) {
            json rec;
            rec["features"] = s.features;
            rec["context"] = s.context;
            rec["label"] = s.label;
            rec["meta"] = {{"confounder", s.confounder}, {"spurious_present", s.spurious_present}};
            os << rec.dump() << "\n";
        }
        if (!os) throw IoError("datagen: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Sample> read_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("datagen: cannot read " + path);
    std::vector<Sample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("datagen: line " + std::to_string(lineno) + ": " + e.what());
        }
        for (const char* field : {"features", "context", "label", "meta"}) {
            if (!rec.contains(field)) {
                throw ParseError("datagen: line " + std::to_string(lineno) + ": missing field \"" +
                                 field + "\"");
            }
        }
        try {
            Sample s;
            s.features = rec["features"].get<std::vector<std::size_t>>();
            s.context = rec["context"].get<std::vector<std::size_t>>();
            s.label = rec["label"].get<std::size_t>();
            s.confounder = rec["meta"].value("confounder", -1);
            s.spurious_present = rec["meta"].value("spurious_present", false);
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw ParseError("datagen: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return samples;
}

}  // namespace catt
