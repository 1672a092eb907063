#include "catt/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace catt {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
    if (std::is_unsigned_v<T> && value.find('-') != std::string::npos) {
        throw ConfigError("config: bad value \"" + value + "\" for " + key);
    }
    T out{};
    std::istringstream is(value);
    is >> out;
    if (!is || !is.eof()) {
        throw ConfigError("config: bad value \"" + value + "\" for " + key);
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean \"" + value + "\" for " + key);
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.data = ConfoundedTaskSpec::defaults();
    return cfg;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
    RunConfig cfg = defaults();
    using Setter = std::function<void(const std::string&, const std::string&)>;
    std::map<std::string, Setter> keys;

    auto size_key = [&](const std::string& name, std::size_t& slot) {
        keys[name] = [&slot, name](const std::string& v, const std::string&) {
            slot = parse_number<std::size_t>(v, name);
        };
    };
    auto double_key = [&](const std::string& name, double& slot) {
        keys[name] = [&slot, name](const std::string& v, const std::string&) {
            slot = parse_number<double>(v, name);
        };
    };
    auto bool_key = [&](const std::string& name, bool& slot) {
        keys[name] = [&slot, name](const std::string& v, const std::string&) {
            slot = parse_bool(v, name);
        };
    };
    auto string_key = [&](const std::string& name, std::string& slot) {
        keys[name] = [&slot](const std::string& v, const std::string&) { slot = v; };
    };
    auto u64_key = [&](const std::string& name, std::uint64_t& slot) {
        keys[name] = [&slot, name](const std::string& v, const std::string&) {
            slot = parse_number<std::uint64_t>(v, name);
        };
    };

    size_key("model.enc_layers", cfg.model.enc_layers);
    size_key("model.dec_layers", cfg.model.dec_layers);
    size_key("model.d", cfg.model.d);
    size_key("model.heads", cfg.model.heads);
    size_key("model.k_feat", cfg.model.k_feat);
    size_key("model.k_ctx", cfg.model.k_ctx);
    bool_key("model.share_params", cfg.model.share_params);

    size_key("data.vocab_in", cfg.data.vocab_in);
    size_key("data.vocab_out", cfg.data.vocab_out);
    size_key("data.seq_len", cfg.data.seq_len);
    size_key("data.ctx_len", cfg.data.ctx_len);
    double_key("data.rho_train", cfg.data.rho_train);
    double_key("data.rho_test", cfg.data.rho_test);
    double_key("data.noise_rate", cfg.data.noise_rate);
    size_key("data.n_train", cfg.n_train);
    size_key("data.n_test", cfg.n_test);
    u64_key("data.seed", cfg.data_seed);

    double_key("train.lr", cfg.train.lr);
    size_key("train.epochs", cfg.train.epochs);
    size_key("train.batch", cfg.train.batch_size);
    u64_key("train.seed", cfg.train.seed);

    keys["dict.init"] = [&cfg](const std::string& v, const std::string&) {
        if (v == "kmeans") {
            cfg.dict_init = DictInit::kmeans;
        } else if (v == "random") {
            cfg.dict_init = DictInit::random;
        } else {
            throw ConfigError("config: dict.init must be kmeans or random, got \"" + v + "\"");
        }
    };
    size_key("dict.kmeans_iters", cfg.kmeans_iters);
    double_key("dict.random_scale", cfg.random_scale);

    string_key("paths.train", cfg.train_path);
    string_key("paths.test", cfg.test_path);
    string_key("paths.checkpoint", cfg.checkpoint_path);
    string_key("paths.metrics", cfg.metrics_path);

    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = keys.find(key);
        if (it == keys.end()) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": unknown key \"" + key + "\"");
        }
        it->second(value, key);
    }

    // keep derived fields in sync with the configured label count
    cfg.model.vocab_in = cfg.data.vocab_in;
    cfg.model.vocab_out = cfg.data.vocab_out;
    if (cfg.data.causal_tokens.size() != cfg.data.vocab_out) {
        cfg.data.causal_tokens.resize(cfg.data.vocab_out);
        cfg.data.spurious_tokens.resize(cfg.data.vocab_out);
        for (std::size_t y = 0; y < cfg.data.vocab_out; ++y) {
            cfg.data.causal_tokens[y] = y;
            cfg.data.spurious_tokens[y] = cfg.data.vocab_out + y;
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("config: cannot read " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse(buf.str(), path);
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    os << "model.enc_layers = " << model.enc_layers << "\n";
    os << "model.dec_layers = " << model.dec_layers << "\n";
    os << "model.d = " << model.d << "\n";
    os << "model.heads = " << model.heads << "\n";
    os << "model.k_feat = " << model.k_feat << "\n";
    os << "model.k_ctx = " << model.k_ctx << "\n";
    os << "model.share_params = " << (model.share_params ? "true" : "false") << "\n";
    os << "data.vocab_in = " << data.vocab_in << "\n";
    os << "data.vocab_out = " << data.vocab_out << "\n";
    os << "data.seq_len = " << data.seq_len << "\n";
    os << "data.ctx_len = " << data.ctx_len << "\n";
    os << "data.rho_train = " << num(data.rho_train) << "\n";
    os << "data.rho_test = " << num(data.rho_test) << "\n";
    os << "data.noise_rate = " << num(data.noise_rate) << "\n";
    os << "data.n_train = " << n_train << "\n";
    os << "data.n_test = " << n_test << "\n";
    os << "data.seed = " << data_seed << "\n";
    os << "train.lr = " << num(train.lr) << "\n";
    os << "train.epochs = " << train.epochs << "\n";
    os << "train.batch = " << train.batch_size << "\n";
    os << "train.seed = " << train.seed << "\n";
    os << "dict.init = " << (dict_init == DictInit::kmeans ? "kmeans" : "random") << "\n";
    os << "dict.kmeans_iters = " << kmeans_iters << "\n";
    os << "dict.random_scale = " << num(random_scale) << "\n";
    os << "paths.train = " << train_path << "\n";
    os << "paths.test = " << test_path << "\n";
    os << "paths.checkpoint = " << checkpoint_path << "\n";
    os << "paths.metrics = " << metrics_path << "\n";
    return os.str();
}

void RunConfig::validate() const {
    model.validate();
    data.validate();
    if (model.vocab_in != data.vocab_in || model.vocab_out != data.vocab_out) {
        throw ConfigError("config: model and data vocab sizes disagree");
    }
    if (n_train < 1 || n_test < 1) throw ConfigError("config: dataset sizes must be >= 1");
    if (train.lr < 0.0) throw ConfigError("config: train.lr must be >= 0");
    if (train.batch_size < 1) throw ConfigError("config: train.batch must be >= 1");
    if (kmeans_iters < 1) throw ConfigError("config: dict.kmeans_iters must be >= 1");
    if (random_scale < 0.0) throw ConfigError("config: dict.random_scale must be >= 0");
}

}  // namespace catt
