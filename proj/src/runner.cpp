#include "catt/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "catt/checkpoint.hpp"

namespace catt {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_parent_dir(const std::string& path) {
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

// Embeds every token occurrence of the corpus with the model's initial
// table; duplicates weight the clustering by frequency.
Tensor embedded_occurrences(const Tensor& table, const std::vector<Sample>& samples,
                            bool features) {
    std::size_t d = table.cols();
    std::size_t total = 0;
    for (const auto& s : samples) total += features ? s.features.size() : s.context.size();
    Tensor points = Tensor::zeros({total, d});
    std::size_t row = 0;
    for (const auto& s : samples) {
        const auto& ids = features ? s.features : s.context;
        for (auto id : ids) {
            for (std::size_t c = 0; c < d; ++c) points.at(row, c) = table.at(id, c);
            ++row;
        }
    }
    return points;
}

GlobalDictionary build_dictionary(const RunConfig& cfg, const Tensor& points, std::size_t k,
                                  std::uint64_t seed) {
    if (cfg.dict_init == DictInit::kmeans) {
        return kmeans_init(points, k, cfg.kmeans_iters, seed);
    }
    return random_init(k, cfg.model.d, cfg.random_scale, seed);
}

void install_dictionaries(CattModel& model, const RunConfig& cfg,
                          const std::vector<Sample>& train_samples) {
    std::uint64_t base = cfg.train.seed * 0x9e3779b97f4a7c15ull;
    Tensor feat_points = embedded_occurrences(model.feature_embedding(), train_samples, true);
    model.install_feature_dictionary(
        build_dictionary(cfg, feat_points, cfg.model.k_feat, base + 1));
    Tensor ctx_points = embedded_occurrences(model.context_embedding(), train_samples, false);
    model.install_context_dictionary(
        build_dictionary(cfg, ctx_points, cfg.model.k_ctx, base + 2));
}

void write_metrics(const std::string& path, const std::vector<EpochMetrics>& history) {
    ensure_parent_dir(path);
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("metrics: cannot write " + tmp);
        for (const auto& m : history) {
            os << "epoch " << m.epoch << " train_loss " << g17(m.train_loss) << " eval_acc "
               << g17(m.eval_accuracy) << "\n";
        }
    }
    std::filesystem::rename(tmp, path);
}

std::size_t env_threads() {
    const char* raw = std::getenv("CATT_THREADS");
    if (!raw) return 1;
    long v = std::strtol(raw, nullptr, 10);
    return v > 1 ? static_cast<std::size_t>(v) : 1;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Batch to_batch(const std::vector<Sample>& samples) {
    Batch b;
    for (const auto& s : samples) {
        b.features.push_back(s.features);
        b.contexts.push_back(s.context);
        b.labels.push_back(s.label);
    }
    return b;
}

std::vector<Sample> spurious_subset(const std::vector<Sample>& samples) {
    std::vector<Sample> out;
    for (const auto& s : samples) {
        if (s.spurious_present) out.push_back(s);
    }
    return out;
}

DatagenSummary run_datagen(const RunConfig& cfg, std::ostream& log) {
    auto train_samples = generate(cfg.data, cfg.n_train, Split::train, cfg.data_seed);
    auto test_samples = generate(cfg.data, cfg.n_test, Split::test, cfg.data_seed + 1);
    ensure_parent_dir(cfg.train_path);
    ensure_parent_dir(cfg.test_path);
    write_jsonl(train_samples, cfg.train_path);
    write_jsonl(test_samples, cfg.test_path);

    DatagenSummary s;
    s.n_train = train_samples.size();
    s.n_test = test_samples.size();
    std::size_t co = 0;
    for (const auto& smp : train_samples) {
        if (smp.spurious_present) ++co;
    }
    s.train_cooccurrence = static_cast<double>(co) / train_samples.size();
    std::size_t sp = 0;
    for (const auto& smp : test_samples) {
        if (smp.spurious_present) ++sp;
    }
    s.test_spurious_rate = static_cast<double>(sp) / test_samples.size();

    log << "wrote " << s.n_train << " train samples to " << cfg.train_path << "\n";
    log << "wrote " << s.n_test << " test samples to " << cfg.test_path << "\n";
    log << "train spurious-partner co-occurrence: " << s.train_cooccurrence << "\n";
    log << "test spurious-present rate: " << s.test_spurious_rate << "\n";
    return s;
}

TrainResult train_in_memory(const RunConfig& cfg, ModelMode mode,
                            const std::vector<Sample>& train_samples,
                            const std::vector<Sample>& test_samples) {
    CattModel model(cfg.model, mode, cfg.train.seed);
    if (mode == ModelMode::catt) install_dictionaries(model, cfg, train_samples);

    Batch train_batch = to_batch(train_samples);
    Batch test_batch = to_batch(test_samples);
    TrainResult result;
    result.parameter_count = model.parameter_count();
    result.history = train(model, train_batch, test_batch, cfg.train);
    result.eval_accuracy = evaluate(test_batch, model, env_threads()).accuracy();
    auto subset = spurious_subset(test_samples);
    result.spurious_accuracy =
        subset.empty() ? 0.0 : evaluate(to_batch(subset), model, env_threads()).accuracy();
    return result;
}

TrainResult run_train(const RunConfig& cfg, ModelMode mode, std::ostream& log) {
    auto train_samples = read_jsonl(cfg.train_path);
    auto test_samples = read_jsonl(cfg.test_path);
    if (train_samples.empty()) throw InputError("train: dataset " + cfg.train_path + " is empty");

    CattModel model(cfg.model, mode, cfg.train.seed);
    if (mode == ModelMode::catt) {
        install_dictionaries(model, cfg, train_samples);
        if (cfg.dict_init == DictInit::kmeans) {
            log << "feature dictionary: k-means inertia " << model.feature_dictionary().inertia
                << " after " << model.feature_dictionary().iterations << " iterations\n";
        }
    }
    log << "mode " << (mode == ModelMode::catt ? "catt" : "baseline") << ", "
        << model.parameter_count() << " parameters\n";

    Batch train_batch = to_batch(train_samples);
    Batch test_batch = to_batch(test_samples);

    TrainResult result;
    result.parameter_count = model.parameter_count();
    result.history = train(model, train_batch, test_batch, cfg.train);
    for (const auto& m : result.history) {
        log << "epoch " << m.epoch << " train_loss " << m.train_loss << " eval_acc "
            << m.eval_accuracy << " secs " << m.seconds << "\n";
    }

    result.eval_accuracy = evaluate(test_batch, model, env_threads()).accuracy();
    auto subset = spurious_subset(test_samples);
    result.spurious_accuracy =
        subset.empty() ? 0.0 : evaluate(to_batch(subset), model, env_threads()).accuracy();

    ensure_parent_dir(cfg.checkpoint_path);
    save_checkpoint(cfg.checkpoint_path, model.parameters());
    write_metrics(cfg.metrics_path, result.history);
    log << "checkpoint: " << cfg.checkpoint_path << "\n";
    log << "metrics: " << cfg.metrics_path << "\n";
    return result;
}

EvalSummary run_eval(const RunConfig& cfg, ModelMode mode, const std::string& checkpoint_path,
                     const std::string& dataset_path, std::ostream& log) {
    auto samples = read_jsonl(dataset_path);
    if (samples.empty()) throw InputError("eval: dataset " + dataset_path + " is empty");

    CattModel model(cfg.model, mode, cfg.train.seed);
    load_checkpoint(checkpoint_path, model.parameters());

    EvalSummary summary;
    summary.overall = evaluate(to_batch(samples), model, env_threads());
    auto subset = spurious_subset(samples);
    summary.has_spurious = !subset.empty();
    if (summary.has_spurious) {
        summary.spurious = evaluate(to_batch(subset), model, env_threads());
    }

    log << "samples " << summary.overall.total << " accuracy " << summary.overall.accuracy()
        << "\n";
    if (summary.has_spurious) {
        log << "spurious-present subset " << summary.spurious.total << " accuracy "
            << summary.spurious.accuracy() << "\n";
    } else {
        log << "spurious-present subset empty\n";
    }
    return summary;
}

GradcheckReport run_gradcheck(const RunConfig& cfg, std::ostream& log, bool corrupt_gradient,
                              std::size_t max_params) {
    CattModel model(cfg.model, ModelMode::catt, cfg.train.seed);
    if (model.parameter_count() > max_params) {
        throw ConfigError("gradcheck: model has " + std::to_string(model.parameter_count()) +
                          " parameters, limit is " + std::to_string(max_params) +
                          " (finite differences would be too slow)");
    }

    // fixed synthetic batch
    Rng rng(cfg.train.seed + 17);
    Batch batch;
    for (std::size_t i = 0; i < 2; ++i) {
        std::vector<std::size_t> feats(cfg.data.seq_len);
        for (auto& t : feats) t = rng.index(cfg.model.vocab_in);
        std::vector<std::size_t> ctx(cfg.data.ctx_len);
        for (auto& t : ctx) t = rng.index(cfg.model.vocab_out);
        batch.features.push_back(feats);
        batch.contexts.push_back(ctx);
        batch.labels.push_back(rng.index(cfg.model.vocab_out));
    }

    // 1e-4 balances cancellation noise against truncation for the smallest
    // gradient entries
    GradcheckOptions options;
    options.step = 1e-4;
    options.tolerance = 1e-4;
    if (corrupt_gradient) {
        options.tamper_analytic = [](std::vector<Tensor>& grads) {
            grads.front().data.front() += 1.0;
        };
    }

    LossFn f = [&model, &batch](Graph& g) -> Value {
        // rebuilds the mean cross-entropy of the fixed batch on the tape
        Value total{};
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto enc = model.encode(g, batch.features[i]);
            auto pooled = model.decode(g, batch.contexts[i], enc);
            Value probs = g.softmax_rows(model.predict_logits(g, pooled));
            Value nll = g.scale(g.log(g.pick_rows(probs, {batch.labels[i]})), -1.0);
            total = i == 0 ? nll : g.add(total, nll);
        }
        return g.scale(total, 1.0 / static_cast<double>(batch.size()));
    };

    auto report = finite_diff_gradcheck(f, model.parameters(), options);
    log << "gradcheck: " << report.checked << " entries, max relative error " << report.max_rel_err
        << " (tolerance " << report.tolerance << ")\n";
    if (!report.passed()) {
        log << "gradcheck: " << report.failures.size() << " entries failed; worst at "
            << report.failures.front().param << "[" << report.failures.front().index << "]\n";
    }
    return report;
}

void run_oracle(const FrontDoorScm& scm, std::size_t x, std::ostream& out) {
    if (x >= scm.nx) throw InputError("oracle: x out of range");

    auto print_dist = [&out](const std::string& name, const DiscreteDistribution& d) {
        out << name << ":";
        for (double v : d) out << " " << g17(v);
        out << "\n";
    };
    auto obs = observational(scm, x);
    auto fd = front_door(scm, x);
    auto bd = backdoor(scm, x);
    auto truth = intervene_truth(scm, x);

    out << "x = " << x << "\n";
    print_dist("observational", obs);
    print_dist("front_door   ", fd);
    print_dist("backdoor     ", bd);
    print_dist("intervene    ", truth);
    for (std::size_t z = 0; z < scm.nz; ++z) {
        print_dist("do_z[z=" + std::to_string(z) + "]    ", do_z(scm, z));
    }

    double dev = 0.0;
    for (std::size_t y = 0; y < scm.ny; ++y) {
        dev = std::max(dev, std::fabs(fd[y] - truth[y]));
        dev = std::max(dev, std::fabs(bd[y] - truth[y]));
        dev = std::max(dev, std::fabs(fd[y] - bd[y]));
    }
    out << "max interventional deviation: " << g17(dev) << "\n";
}

const BenchmarkArm& BenchmarkResult::arm(const std::string& name) const {
    for (const auto& a : arms) {
        if (a.name == name) return a;
    }
    throw InputError("benchmark: no arm named " + name);
}

BenchmarkResult run_benchmark(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                              std::ostream& log) {
    if (seeds.size() < 3) throw ConfigError("benchmark: need at least 3 seeds");

    auto train_samples = generate(cfg.data, cfg.n_train, Split::train, cfg.data_seed);
    auto test_samples = generate(cfg.data, cfg.n_test, Split::test, cfg.data_seed + 1);

    struct ArmSpec {
        std::string name;
        ModelMode mode;
        DictInit init;
    };
    std::vector<ArmSpec> arm_specs = {
        {"baseline", ModelMode::baseline, cfg.dict_init},
        {"catt", ModelMode::catt, DictInit::kmeans},
        {"catt_random_init", ModelMode::catt, DictInit::random},
    };

    BenchmarkResult result;
    result.seeds = seeds;
    for (const auto& spec : arm_specs) {
        BenchmarkArm arm;
        arm.name = spec.name;
        for (auto seed : seeds) {
            RunConfig run_cfg = cfg;
            run_cfg.train.seed = seed;
            run_cfg.dict_init = spec.init;
            auto r = train_in_memory(run_cfg, spec.mode, train_samples, test_samples);
            arm.per_seed.push_back(r.spurious_accuracy);
            log << "arm " << arm.name << " seed " << seed << " anti_acc " << g17(r.spurious_accuracy)
                << " overall_acc " << g17(r.eval_accuracy) << "\n";
        }
        arm.median = median(arm.per_seed);
        result.arms.push_back(std::move(arm));
    }

    std::ostringstream table;
    table << "arm";
    for (auto seed : seeds) table << " seed" << seed;
    table << " median\n";
    for (const auto& arm : result.arms) {
        table << arm.name;
        for (double v : arm.per_seed) table << " " << g17(v);
        table << " " << g17(arm.median) << "\n";
    }
    result.table = table.str();
    log << result.table;
    return result;
}

void run_kmeans_dump(const RunConfig& cfg, std::ostream& out) {
    auto train_samples = read_jsonl(cfg.train_path);
    if (train_samples.empty()) throw InputError("kmeans-dump: dataset is empty");
    CattModel model(cfg.model, ModelMode::catt, cfg.train.seed);
    Tensor points = embedded_occurrences(model.feature_embedding(), train_samples, true);
    auto dict = kmeans_init(points, cfg.model.k_feat, cfg.kmeans_iters,
                            cfg.train.seed * 0x9e3779b97f4a7c15ull + 1);
    const Tensor& centroids = dict.entries->value;
    for (std::size_t i = 0; i < centroids.rows(); ++i) {
        for (std::size_t j = 0; j < centroids.cols(); ++j) {
            out << (j ? " " : "") << g17(centroids.at(i, j));
        }
        out << "\n";
    }
}

}  // namespace catt
