#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "catt/errors.hpp"
#include "catt/rng.hpp"

namespace catt {

// Dense row-major f64 tensor. Everything in the attention stack is a matrix;
// vectors travel as 1xN rows.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
    static Tensor row(std::vector<double> values);
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
    bool finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// Trainable tensor plus a same-shape gradient accumulator. Gradients add up
// across backward calls until zero_grad.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string name, Tensor value);
    void zero_grad();
    std::size_t size() const { return value.size(); }
};

using ParamPtr = std::shared_ptr<Parameter>;

ParamPtr make_param(std::string name, Tensor value);
// Uniform(-limit, limit) with the Xavier limit sqrt(6 / (fan_in + fan_out)).
ParamPtr make_param_xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng);
ParamPtr make_param_uniform(std::string name, std::size_t rows, std::size_t cols, double scale, Rng& rng);

// Handle to a node on a Graph tape.
struct Value {
    std::uint32_t id = 0;
};

// Append-only reverse-mode tape. Forward outputs are cached at insertion;
// backward() walks nodes in exact reverse insertion order and accumulates
// (+=) into every reachable Parameter's grad.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Value input(Tensor t);
    Value param(const ParamPtr& p);

    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    // a: m x n, bias: 1 x n added to every row (the only broadcast supported)
    Value add_row_bias(Value a, Value bias);
    Value scale(Value a, double factor);
    Value hadamard(Value a, Value b);
    Value relu(Value a);
    Value softmax_rows(Value a);
    Value concat_cols(Value a, Value b);
    Value mean_rows(Value a);
    Value sum_all(Value a);
    Value log(Value a);
    // gathers probs[i, labels[i]] into an m x 1 column
    Value pick_rows(Value probs, std::vector<std::size_t> labels);

    const Tensor& value(Value v) const;
    std::size_t nodes() const { return nodes_.size(); }

    // loss must be a 1x1 node; throws ShapeError otherwise.
    void backward(Value loss);

private:
    struct Node {
        Tensor out;
        std::vector<std::uint32_t> inputs;
        ParamPtr leaf_param;  // set on parameter leaves
        std::function<void(Graph&, std::uint32_t)> back;
    };

    Value push(Node node);
    Tensor& grad_of(std::uint32_t id) { return grads_[id]; }
    const Tensor& out_of(std::uint32_t id) const { return nodes_[id].out; }

    // deque keeps node outputs at stable addresses while the tape grows
    std::deque<Node> nodes_;
    std::vector<Tensor> grads_;
};

// Position-wise feed-forward with residual: x + relu(x W1 + b1) W2 + b2.
// Inner width is 4x the model width.
struct EmbedParams {
    ParamPtr w1, b1, w2, b2;
    std::vector<ParamPtr> parameters() const { return {w1, b1, w2, b2}; }
};

EmbedParams init_embed_params(std::size_t width, Rng& rng, const std::string& prefix);
Value embed_block(Graph& g, Value x, const EmbedParams& p);

}  // namespace catt
