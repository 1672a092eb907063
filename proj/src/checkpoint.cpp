#include "catt/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace catt {

namespace {

constexpr const char* kTag = "catt-checkpoint v1";

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<ParamPtr>& params) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("checkpoint: cannot write " + tmp);
        os << kTag << "\n";
        os << "params " << params.size() << "\n";
        for (const auto& p : params) {
            os << "param " << p->name << " " << p->value.rank();
            for (auto d : p->value.shape) os << " " << d;
            os << "\n";
            const Tensor& t = p->value;
            std::size_t per_line = t.rank() == 2 ? t.cols() : t.size();
            if (per_line == 0) per_line = 1;
            for (std::size_t i = 0; i < t.size(); ++i) {
                os << format_g17(t.data[i]);
                os << ((i % per_line == per_line - 1 || i + 1 == t.size()) ? "\n" : " ");
            }
        }
        if (!os) throw IoError("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::string& path, const std::vector<ParamPtr>& params) {
    std::ifstream is(path);
    if (!is) throw IoError("checkpoint: cannot read " + path);
    std::string line;
    if (!std::getline(is, line) || line != kTag) {
        throw CheckpointError("checkpoint: bad version tag in " + path);
    }
    std::string word;
    std::size_t count = 0;
    is >> word >> count;
    if (word != "params") throw CheckpointError("checkpoint: missing params header");
    if (count != params.size()) {
        throw CheckpointError("checkpoint: has " + std::to_string(count) + " parameters, model has " +
                              std::to_string(params.size()));
    }
    for (const auto& p : params) {
        std::string name;
        std::size_t rank = 0;
        is >> word >> name >> rank;
        if (!is || word != "param") throw CheckpointError("checkpoint: truncated entry");
        if (name != p->name) {
            throw CheckpointError("checkpoint: expected parameter " + p->name + ", found " + name);
        }
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) is >> d;
        if (shape != p->value.shape) {
            throw CheckpointError("checkpoint: shape mismatch for " + name + ": file " +
                                  Tensor::zeros(shape).shape_str() + " vs model " +
                                  p->value.shape_str());
        }
        for (auto& v : p->value.data) {
            if (!(is >> v)) throw CheckpointError("checkpoint: truncated values for " + name);
        }
    }
}

}  // namespace catt
