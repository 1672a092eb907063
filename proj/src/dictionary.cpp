#include "catt/dictionary.hpp"

#include <cmath>
#include <limits>

namespace catt {

namespace {

double sq_dist(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double s = 0.0;
    std::size_t d = a.cols();
    for (std::size_t c = 0; c < d; ++c) {
        double diff = a.at(i, c) - b.at(j, c);
        s += diff * diff;
    }
    return s;
}

std::vector<std::size_t> assign_to(const Tensor& points, const Tensor& centroids) {
    std::size_t n = points.rows(), k = centroids.rows();
    std::vector<std::size_t> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = sq_dist(points, i, centroids, 0);
        for (std::size_t j = 1; j < k; ++j) {
            double d = sq_dist(points, i, centroids, j);
            if (d < best) {
                best = d;
                labels[i] = j;
            }
        }
    }
    return labels;
}

double inertia_of(const Tensor& points, const Tensor& centroids,
                  const std::vector<std::size_t>& labels) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) s += sq_dist(points, i, centroids, labels[i]);
    return s;
}

Tensor seed_plus_plus(const Tensor& points, std::size_t k, Rng& rng) {
    std::size_t n = points.rows(), d = points.cols();
    Tensor centroids = Tensor::zeros({k, d});
    std::size_t first = rng.index(n);
    for (std::size_t c = 0; c < d; ++c) centroids.at(0, c) = points.at(first, c);

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points, i, centroids, 0);
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.index(n);
        } else {
            double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        }
        for (std::size_t c = 0; c < d; ++c) centroids.at(j, c) = points.at(pick, c);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(points, i, centroids, j));
        }
    }
    return centroids;
}

}  // namespace

GlobalDictionary kmeans_init(const Tensor& points, std::size_t k, std::size_t max_iters,
                             std::uint64_t seed) {
    std::size_t n = points.rows();
    if (k < 1 || n < k) {
        throw ConfigError("kmeans: need at least k=" + std::to_string(k) + " points, got " +
                          std::to_string(n));
    }
    if (max_iters < 1) throw ConfigError("kmeans: max_iters must be >= 1");
    if (!points.finite()) throw InputError("kmeans: non-finite input point");

    std::size_t d = points.cols();
    Rng rng(seed);
    Tensor centroids = seed_plus_plus(points, k, rng);

    GlobalDictionary dict;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> prev_labels;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        labels = assign_to(points, centroids);

        std::vector<std::size_t> counts(k, 0);
        for (auto l : labels) ++counts[l];
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            // promote the point farthest from its current centroid
            std::size_t worst = 0;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[labels[i]] <= 1) continue;  // don't empty another cluster
                double dd = sq_dist(points, i, centroids, labels[i]);
                if (dd > worst_d) {
                    worst_d = dd;
                    worst = i;
                }
            }
            --counts[labels[worst]];
            labels[worst] = j;
            counts[j] = 1;
        }

        centroids = Tensor::zeros({k, d});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < d; ++c) centroids.at(labels[i], c) += points.at(i, c);
        }
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t c = 0; c < d; ++c) centroids.at(j, c) /= static_cast<double>(counts[j]);
        }

        dict.inertia_history.push_back(inertia_of(points, centroids, labels));
        dict.iterations = iter + 1;
        if (labels == prev_labels) break;
        prev_labels = labels;
    }

    dict.entries = make_param("dictionary", std::move(centroids));
    dict.source = DictInit::kmeans;
    dict.inertia = dict.inertia_history.back();
    return dict;
}

GlobalDictionary random_init(std::size_t k, std::size_t d, double scale, std::uint64_t seed) {
    if (k < 1 || d < 1) throw ConfigError("random_init: k and d must be >= 1");
    if (scale < 0.0) throw ConfigError("random_init: scale must be >= 0");
    Rng rng(seed);
    Tensor entries = Tensor::zeros({k, d});
    for (auto& v : entries.data) v = rng.uniform(-scale, scale);
    GlobalDictionary dict;
    dict.entries = make_param("dictionary", std::move(entries));
    dict.source = DictInit::random;
    return dict;
}

std::vector<std::size_t> assign(const Tensor& points, const GlobalDictionary& dict) {
    if (points.cols() != dict.width()) {
        throw ShapeError("assign: point width " + std::to_string(points.cols()) +
                         " does not match dictionary width " + std::to_string(dict.width()));
    }
    return assign_to(points, dict.entries->value);
}

}  // namespace catt
