#include "catt/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace catt {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void require_matrix(const Tensor& t, const char* op) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected a matrix, got " + t.shape_str());
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    if (shape_product(shape) != data.size()) {
        throw ShapeError("tensor: shape " + shape_str() + " does not match " +
                         std::to_string(data.size()) + " values");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::row(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    std::size_t m = rows.size();
    std::size_t n = m == 0 ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(m * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw ShapeError("from_rows: ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return Tensor({m, n}, std::move(flat));
}

std::size_t Tensor::rows() const {
    return rank() == 2 ? shape[0] : (rank() == 1 ? 1 : 0);
}

std::size_t Tensor::cols() const {
    return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 0);
}

bool Tensor::finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Parameter::Parameter(std::string name_in, Tensor value_in)
    : name(std::move(name_in)), value(std::move(value_in)), grad(Tensor::zeros(value.shape)) {}

void Parameter::zero_grad() {
    std::fill(grad.data.begin(), grad.data.end(), 0.0);
}

ParamPtr make_param(std::string name, Tensor value) {
    return std::make_shared<Parameter>(std::move(name), std::move(value));
}

ParamPtr make_param_xavier(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    return make_param_uniform(std::move(name), rows, cols, limit, rng);
}

ParamPtr make_param_uniform(std::string name, std::size_t rows, std::size_t cols, double scale,
                            Rng& rng) {
    Tensor t = Tensor::zeros({rows, cols});
    for (auto& v : t.data) v = rng.uniform(-scale, scale);
    return make_param(std::move(name), std::move(t));
}

Value Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::value(Value v) const {
    return nodes_.at(v.id).out;
}

Value Graph::input(Tensor t) {
    Node n;
    n.out = std::move(t);
    return push(std::move(n));
}

Value Graph::param(const ParamPtr& p) {
    Node n;
    n.out = p->value;
    n.leaf_param = p;
    n.back = [](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& pg = g.nodes_[self].leaf_param->grad;
        for (std::size_t i = 0; i < go.data.size(); ++i) pg.data[i] += go.data[i];
    };
    return push(std::move(n));
}

Value Graph::matmul(Value a, Value b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_matrix(ta, "matmul");
    require_matrix(tb, "matmul");
    if (ta.cols() != tb.rows()) {
        throw ShapeError("matmul: inner dimensions mismatch: " + ta.shape_str() + " x " +
                         tb.shape_str());
    }
    std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double aip = ta.at(i, p);
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * tb.at(p, j);
        }
    }
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id, b.id};
    node.back = [m, k, n](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta2 = g.out_of(g.nodes_[self].inputs[0]);
        const Tensor& tb2 = g.out_of(g.nodes_[self].inputs[1]);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        Tensor& gb = g.grad_of(g.nodes_[self].inputs[1]);
        // dA = dOut * B^T, dB = A^T * dOut
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double gij = go.at(i, j);
                for (std::size_t p = 0; p < k; ++p) {
                    ga.at(i, p) += gij * tb2.at(p, j);
                    gb.at(p, j) += ta2.at(i, p) * gij;
                }
            }
        }
    };
    return push(std::move(node));
}

Value Graph::transpose(Value a) {
    const Tensor& ta = value(a);
    require_matrix(ta, "transpose");
    std::size_t m = ta.rows(), n = ta.cols();
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
    }
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [m, n](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += go.at(j, i);
        }
    };
    return push(std::move(node));
}

Value Graph::add(Value a, Value b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
        throw ShapeError("add: shape mismatch: " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id, b.id};
    node.back = [](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        Tensor& gb = g.grad_of(g.nodes_[self].inputs[1]);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i];
            gb.data[i] += go.data[i];
        }
    };
    return push(std::move(node));
}

Value Graph::add_row_bias(Value a, Value bias) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(bias);
    require_matrix(ta, "add_row_bias");
    if (tb.rows() != 1 || tb.cols() != ta.cols()) {
        throw ShapeError("add_row_bias: bias " + tb.shape_str() + " does not fit " +
                         ta.shape_str());
    }
    std::size_t m = ta.rows(), n = ta.cols();
    Tensor out = ta;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += tb.at(0, j);
    }
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id, bias.id};
    node.back = [m, n](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        Tensor& gb = g.grad_of(g.nodes_[self].inputs[1]);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ga.at(i, j) += go.at(i, j);
                gb.at(0, j) += go.at(i, j);
            }
        }
    };
    return push(std::move(node));
}

Value Graph::scale(Value a, double factor) {
    Tensor out = value(a);
    for (auto& v : out.data) v *= factor;
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [factor](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += factor * go.data[i];
    };
    return push(std::move(node));
}

Value Graph::hadamard(Value a, Value b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
        throw ShapeError("hadamard: shape mismatch: " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id, b.id};
    node.back = [](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta2 = g.out_of(g.nodes_[self].inputs[0]);
        const Tensor& tb2 = g.out_of(g.nodes_[self].inputs[1]);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        Tensor& gb = g.grad_of(g.nodes_[self].inputs[1]);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i] * tb2.data[i];
            gb.data[i] += go.data[i] * ta2.data[i];
        }
    };
    return push(std::move(node));
}

Value Graph::relu(Value a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta2 = g.out_of(g.nodes_[self].inputs[0]);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            if (ta2.data[i] > 0.0) ga.data[i] += go.data[i];
        }
    };
    return push(std::move(node));
}

Value Graph::softmax_rows(Value a) {
    const Tensor& ta = value(a);
    require_matrix(ta, "softmax_rows");
    std::size_t m = ta.rows(), n = ta.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double mx = ta.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, ta.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out.at(i, j) = std::exp(ta.at(i, j) - mx);
            sum += out.at(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= sum;
    }
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [m, n](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& s = g.out_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        // per row: dx_j = s_j * (dy_j - sum_k s_k dy_k)
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += s.at(i, j) * go.at(i, j);
            for (std::size_t j = 0; j < n; ++j) {
                ga.at(i, j) += s.at(i, j) * (go.at(i, j) - dot);
            }
        }
    };
    return push(std::move(node));
}

Value Graph::concat_cols(Value a, Value b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_matrix(ta, "concat_cols");
    require_matrix(tb, "concat_cols");
    if (ta.rows() != tb.rows()) {
        throw ShapeError("concat_cols: row counts differ: " + ta.shape_str() + " vs " +
                         tb.shape_str());
    }
    std::size_t m = ta.rows(), p = ta.cols(), q = tb.cols();
    Tensor out = Tensor::zeros({m, p + q});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) out.at(i, j) = ta.at(i, j);
        for (std::size_t j = 0; j < q; ++j) out.at(i, p + j) = tb.at(i, j);
    }
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id, b.id};
    node.back = [m, p, q](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        Tensor& gb = g.grad_of(g.nodes_[self].inputs[1]);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < p; ++j) ga.at(i, j) += go.at(i, j);
            for (std::size_t j = 0; j < q; ++j) gb.at(i, j) += go.at(i, p + j);
        }
    };
    return push(std::move(node));
}

Value Graph::mean_rows(Value a) {
    const Tensor& ta = value(a);
    require_matrix(ta, "mean_rows");
    std::size_t m = ta.rows(), n = ta.cols();
    if (m == 0) throw ShapeError("mean_rows: empty matrix");
    Tensor out = Tensor::zeros({1, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(0, j) += ta.at(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out.at(0, j) /= static_cast<double>(m);
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [m, n](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        double inv = 1.0 / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += inv * go.at(0, j);
        }
    };
    return push(std::move(node));
}

Value Graph::sum_all(Value a) {
    const Tensor& ta = value(a);
    double sum = 0.0;
    for (double v : ta.data) sum += v;
    Node node;
    node.out = Tensor::scalar(sum);
    node.inputs = {a.id};
    node.back = [](Graph& g, std::uint32_t self) {
        double go = g.grad_of(self).data[0];
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (auto& v : ga.data) v += go;
    };
    return push(std::move(node));
}

Value Graph::log(Value a) {
    Tensor out = value(a);
    for (auto& v : out.data) v = std::log(v);
    Node node;
    node.out = std::move(out);
    node.inputs = {a.id};
    node.back = [](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        const Tensor& ta2 = g.out_of(g.nodes_[self].inputs[0]);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] / ta2.data[i];
    };
    return push(std::move(node));
}

Value Graph::pick_rows(Value probs, std::vector<std::size_t> labels) {
    const Tensor& tp = value(probs);
    require_matrix(tp, "pick_rows");
    std::size_t m = tp.rows(), n = tp.cols();
    if (labels.size() != m) {
        throw ShapeError("pick_rows: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(m) + " rows");
    }
    for (auto l : labels) {
        if (l >= n) throw InputError("pick_rows: label " + std::to_string(l) + " out of range");
    }
    Tensor out = Tensor::zeros({m, 1});
    for (std::size_t i = 0; i < m; ++i) out.at(i, 0) = tp.at(i, labels[i]);
    Node node;
    node.out = std::move(out);
    node.inputs = {probs.id};
    node.back = [labels = std::move(labels)](Graph& g, std::uint32_t self) {
        const Tensor& go = g.grad_of(self);
        Tensor& ga = g.grad_of(g.nodes_[self].inputs[0]);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            ga.at(i, labels[i]) += go.at(i, 0);
        }
    };
    return push(std::move(node));
}

void Graph::backward(Value loss) {
    if (value(loss).size() != 1) {
        throw ShapeError("backward: loss must be scalar, got " + value(loss).shape_str());
    }
    grads_.clear();
    grads_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) grads_[i] = Tensor::zeros(nodes_[i].out.shape);
    grads_[loss.id].data[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, static_cast<std::uint32_t>(i));
    }
}

EmbedParams init_embed_params(std::size_t width, Rng& rng, const std::string& prefix) {
    std::size_t hidden = 4 * width;
    EmbedParams p;
    p.w1 = make_param_xavier(prefix + ".ffn_w1", width, hidden, rng);
    p.b1 = make_param(prefix + ".ffn_b1", Tensor::zeros({1, hidden}));
    p.w2 = make_param_xavier(prefix + ".ffn_w2", hidden, width, rng);
    p.b2 = make_param(prefix + ".ffn_b2", Tensor::zeros({1, width}));
    return p;
}

Value embed_block(Graph& g, Value x, const EmbedParams& p) {
    const Tensor& tx = g.value(x);
    if (tx.cols() != p.w1->value.rows()) {
        throw ShapeError("embed_block: input width " + std::to_string(tx.cols()) +
                         " does not match params width " + std::to_string(p.w1->value.rows()));
    }
    Value h = g.relu(g.add_row_bias(g.matmul(x, g.param(p.w1)), g.param(p.b1)));
    Value f = g.add_row_bias(g.matmul(h, g.param(p.w2)), g.param(p.b2));
    return g.add(x, f);
}

}  // namespace catt
