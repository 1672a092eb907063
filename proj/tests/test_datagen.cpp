#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "catt/datagen.hpp"

using namespace catt;

namespace {

bool contains(const std::vector<std::size_t>& seq, std::size_t token) {
    for (auto t : seq) {
        if (t == token) return true;
    }
    return false;
}

bool samples_equal(const Sample& a, const Sample& b) {
    return a.features == b.features && a.context == b.context && a.label == b.label &&
           a.confounder == b.confounder && a.spurious_present == b.spurious_present;
}

}  // namespace

TEST_CASE("spec validation") {
    auto spec = ConfoundedTaskSpec::defaults();
    CHECK_NOTHROW(spec.validate());
    spec.rho_train = 1.5;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = ConfoundedTaskSpec::defaults();
    spec.spurious_tokens[0] = spec.causal_tokens[1];  // overlap
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = ConfoundedTaskSpec::defaults();
    spec.vocab_in = 8;  // no room left for noise tokens
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(generate(ConfoundedTaskSpec::defaults(), 0, Split::train, 1), ConfigError);
}

TEST_CASE("rho zero makes train and test exchangeable") {
    auto spec = ConfoundedTaskSpec::defaults();
    spec.rho_train = 0.0;
    spec.rho_test = 0.0;
    auto train = generate(spec, 200, Split::train, 5);
    auto test = generate(spec, 200, Split::test, 5);
    REQUIRE(train.size() == test.size());
    for (std::size_t i = 0; i < train.size(); ++i) CHECK(samples_equal(train[i], test[i]));
    // spurious tokens never planted
    for (const auto& s : train) {
        CHECK_FALSE(s.spurious_present);
        for (auto t : spec.spurious_tokens) CHECK_FALSE(contains(s.features, t));
    }
}

TEST_CASE("length one with zero noise is exactly the causal token") {
    auto spec = ConfoundedTaskSpec::defaults();
    spec.seq_len = 1;
    spec.noise_rate = 0.0;
    auto samples = generate(spec, 100, Split::train, 2);
    for (const auto& s : samples) {
        REQUIRE(s.features.size() == 1);
        CHECK(s.features[0] == spec.causal_tokens[s.label]);
        CHECK_FALSE(s.spurious_present);
    }
}

TEST_CASE("train co-occurrence tracks rho within 0.02") {
    auto spec = ConfoundedTaskSpec::defaults();
    spec.vocab_out = 2;
    spec.causal_tokens = {0, 1};
    spec.spurious_tokens = {2, 3};
    auto samples = generate(spec, 10000, Split::train, 1);
    std::size_t partner = 0;
    for (const auto& s : samples) {
        if (contains(s.features, spec.spurious_tokens[s.label])) ++partner;
    }
    double rate = static_cast<double>(partner) / samples.size();
    CHECK(std::fabs(rate - 0.95) <= 0.02);
}

TEST_CASE("label marginal is uniform") {
    auto spec = ConfoundedTaskSpec::defaults();
    auto samples = generate(spec, 5000, Split::train, 3);
    std::vector<std::size_t> counts(spec.vocab_out, 0);
    for (const auto& s : samples) ++counts[s.label];
    for (auto c : counts) {
        CHECK(std::fabs(static_cast<double>(c) / samples.size() - 0.25) <= 0.02);
    }
}

TEST_CASE("causal token is always present and determines the label") {
    auto spec = ConfoundedTaskSpec::defaults();
    for (Split split : {Split::train, Split::test}) {
        auto samples = generate(spec, 2000, split, 11);
        for (const auto& s : samples) {
            CHECK(contains(s.features, spec.causal_tokens[s.label]));
            // no other causal token ever appears, so the probe is exact
            for (std::size_t y = 0; y < spec.vocab_out; ++y) {
                if (y != s.label) CHECK_FALSE(contains(s.features, spec.causal_tokens[y]));
            }
        }
    }
}

TEST_CASE("majority co-occurrence classifier falls into the trap") {
    auto spec = ConfoundedTaskSpec::defaults();
    auto train = generate(spec, 5000, Split::train, 13);
    auto test = generate(spec, 5000, Split::test, 14);

    auto classify = [&](const Sample& s) -> int {
        for (std::size_t y = 0; y < spec.vocab_out; ++y) {
            if (contains(s.features, spec.spurious_tokens[y])) return static_cast<int>(y);
        }
        return 0;  // fallback when no spurious token is present
    };

    std::size_t train_correct = 0;
    for (const auto& s : train) {
        if (classify(s) == static_cast<int>(s.label)) ++train_correct;
    }
    CHECK(static_cast<double>(train_correct) / train.size() >= 0.90);

    std::size_t present = 0, present_correct = 0;
    for (const auto& s : test) {
        if (!s.spurious_present) continue;
        ++present;
        if (classify(s) == static_cast<int>(s.label)) ++present_correct;
    }
    REQUIRE(present > 0);
    CHECK(static_cast<double>(present_correct) / present <= 0.10);
}

TEST_CASE("context carries the family cue") {
    auto spec = ConfoundedTaskSpec::defaults();
    auto samples = generate(spec, 100, Split::train, 21);
    for (const auto& s : samples) {
        REQUIRE(s.context.size() == spec.ctx_len);
        for (auto t : s.context) CHECK(t == spec.family(s.label));
    }
    CHECK(spec.anti_partner(0) == 1);
    CHECK(spec.anti_partner(1) == 0);
    CHECK(spec.anti_partner(2) == 3);
    CHECK(spec.anti_partner(3) == 2);
}

TEST_CASE("generation is deterministic per seed") {
    auto spec = ConfoundedTaskSpec::defaults();
    auto a = generate(spec, 500, Split::test, 42);
    auto b = generate(spec, 500, Split::test, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(samples_equal(a[i], b[i]));
}

TEST_CASE("jsonl round-trip is the identity") {
    auto spec = ConfoundedTaskSpec::defaults();
    auto samples = generate(spec, 100, Split::train, 5);
    auto path = std::filesystem::temp_directory_path() / "catt_datagen_roundtrip.jsonl";

    write_jsonl({}, path.string());
    CHECK(read_jsonl(path.string()).empty());
    CHECK(std::filesystem::file_size(path) == 0);

    write_jsonl(samples, path.string());
    auto loaded = read_jsonl(path.string());
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) CHECK(samples_equal(samples[i], loaded[i]));
    std::filesystem::remove(path);
}

TEST_CASE("parse errors name the line") {
    auto path = std::filesystem::temp_directory_path() / "catt_datagen_bad.jsonl";
    {
        std::ofstream os(path);
        os << R"({"features":[1],"context":[0],"label":0,"meta":{}})" << "\n";
        os << R"({"features":[1],"context":[0],"meta":{}})" << "\n";  // missing label
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string()), doctest::Contains("line 2"), ParseError);
    {
        std::ofstream os(path);
        os << "not json at all\n";
    }
    CHECK_THROWS_WITH_AS(read_jsonl(path.string()), doctest::Contains("line 1"), ParseError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_jsonl("/nonexistent/none.jsonl"), IoError);
}
