#pragma once

#include <cstdint>
#include <vector>

#include "catt/tensor.hpp"

namespace catt {

enum class DictInit { kmeans, random };

// K x d trainable matrix serving as the cross-sample key/value set.
struct GlobalDictionary {
    ParamPtr entries;  // K x d
    DictInit source = DictInit::random;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // one entry per Lloyd iteration
    std::size_t iterations = 0;

    std::size_t size() const { return entries->value.rows(); }
    std::size_t width() const { return entries->value.cols(); }
};

// Lloyd's algorithm with k-means++ seeding. Deterministic per seed. Stops
// when assignments are unchanged or after max_iters. Empty clusters are
// repaired by promoting the point farthest from its centroid.
GlobalDictionary kmeans_init(const Tensor& points, std::size_t k, std::size_t max_iters,
                             std::uint64_t seed);

// Entries i.i.d. uniform in [-scale, scale].
GlobalDictionary random_init(std::size_t k, std::size_t d, double scale, std::uint64_t seed);

// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
std::vector<std::size_t> assign(const Tensor& points, const GlobalDictionary& dict);

}  // namespace catt
