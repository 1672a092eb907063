#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "catt/checkpoint.hpp"
#include "catt/gradcheck.hpp"
#include "catt/tensor.hpp"

using namespace catt;

TEST_CASE("matmul identity") {
    Graph g;
    Value i2 = g.input(Tensor::from_rows({{1, 0}, {0, 1}}));
    Value m = g.input(Tensor::from_rows({{3.5, -2}, {7, 0.25}}));
    Value out = g.matmul(i2, m);
    CHECK(g.value(out).data == g.value(m).data);
}

TEST_CASE("matmul 2x2 times 2x1") {
    Graph g;
    Value a = g.input(Tensor::from_rows({{1, 2}, {3, 4}}));
    Value b = g.input(Tensor::from_rows({{5}, {6}}));
    const Tensor& out = g.value(g.matmul(a, b));
    CHECK(out.shape == std::vector<std::size_t>{2, 1});
    CHECK(out.at(0, 0) == 17.0);
    CHECK(out.at(1, 0) == 39.0);
}

TEST_CASE("matmul zero annihilator") {
    Graph g;
    Rng rng(3);
    Tensor b = Tensor::zeros({3, 4});
    for (auto& v : b.data) v = rng.uniform(-1, 1);
    const Tensor& out = g.value(g.matmul(g.input(Tensor::zeros({1, 3})), g.input(b)));
    CHECK(out.shape == std::vector<std::size_t>{1, 4});
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("matmul shape error names both shapes") {
    Graph g;
    Value a = g.input(Tensor::zeros({2, 3}));
    Value b = g.input(Tensor::zeros({4, 5}));
    CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("[2 x 3]"), ShapeError);
}

TEST_CASE("matmul associativity within 1e-9") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t m = 1 + rng.index(8), k = 1 + rng.index(8), p = 1 + rng.index(8),
                    n = 1 + rng.index(8);
        auto rand_mat = [&](std::size_t r, std::size_t c) {
            Tensor t = Tensor::zeros({r, c});
            for (auto& v : t.data) v = rng.uniform(-2, 2);
            return t;
        };
        Graph g;
        Value a = g.input(rand_mat(m, k));
        Value b = g.input(rand_mat(k, p));
        Value c = g.input(rand_mat(p, n));
        const Tensor& left = g.value(g.matmul(g.matmul(a, b), c));
        const Tensor& right = g.value(g.matmul(a, g.matmul(b, c)));
        for (std::size_t i = 0; i < left.size(); ++i) {
            CHECK(std::fabs(left.data[i] - right.data[i]) < 1e-9);
        }
    }
}

TEST_CASE("softmax of zeros is uniform") {
    Graph g;
    const Tensor& out = g.value(g.softmax_rows(g.input(Tensor::row({0, 0, 0}))));
    for (double v : out.data) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax shift invariance") {
    Graph g;
    Value a = g.softmax_rows(g.input(Tensor::row({0.3, -1.2, 2.5, 0.0})));
    Value b = g.softmax_rows(g.input(Tensor::row({0.3 + 7, -1.2 + 7, 2.5 + 7, 0.0 + 7})));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(g.value(a).data[i] == doctest::Approx(g.value(b).data[i]).epsilon(1e-14));
    }
}

TEST_CASE("softmax frozen values for [1,2,3]") {
    Graph g;
    const Tensor& out = g.value(g.softmax_rows(g.input(Tensor::row({1, 2, 3}))));
    CHECK(out.data[0] == doctest::Approx(0.090030573170380458).epsilon(1e-12));
    CHECK(out.data[1] == doctest::Approx(0.24472847105479765).epsilon(1e-12));
    CHECK(out.data[2] == doctest::Approx(0.66524095577482189).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to 1 including +-700 entries") {
    Graph g;
    Tensor big = Tensor::from_rows({{700, -700, 0}, {-700, -699, -701}, {699, 700, 698}});
    const Tensor& out = g.value(g.softmax_rows(g.input(big)));
    CHECK(out.finite());
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(out.at(i, j) >= 0.0);
            sum += out.at(i, j);
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("concat neutral empty element") {
    Graph g;
    Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    const Tensor& out = g.value(g.concat_cols(g.input(a), g.input(Tensor::zeros({2, 0}))));
    CHECK(out.shape == a.shape);
    CHECK(out.data == a.data);
}

TEST_CASE("concat layout") {
    Graph g;
    const Tensor& out = g.value(g.concat_cols(g.input(Tensor::from_rows({{1}, {2}})),
                                              g.input(Tensor::from_rows({{3}, {4}}))));
    CHECK(out.shape == std::vector<std::size_t>{2, 2});
    CHECK(out.data == std::vector<double>{1, 3, 2, 4});
}

TEST_CASE("concat shape law and row mismatch") {
    Graph g;
    Value a = g.input(Tensor::zeros({3, 2}));
    Value b = g.input(Tensor::zeros({3, 5}));
    CHECK(g.value(g.concat_cols(a, b)).shape == std::vector<std::size_t>{3, 7});
    Value c = g.input(Tensor::zeros({4, 5}));
    CHECK_THROWS_AS(g.concat_cols(a, c), ShapeError);
}

TEST_CASE("embed_block zero weights is the identity") {
    Rng rng(5);
    EmbedParams p = init_embed_params(3, rng, "t");
    for (auto& param : p.parameters()) {
        std::fill(param->value.data.begin(), param->value.data.end(), 0.0);
    }
    Graph g;
    Tensor x = Tensor::from_rows({{1.5, -2, 0.25}, {0, 3, -1}});
    const Tensor& out = g.value(embed_block(g, g.input(x), p));
    CHECK(out.data == x.data);
}

TEST_CASE("embed_block scalar hand computation") {
    Rng rng(5);
    EmbedParams p = init_embed_params(1, rng, "t");
    // width 1 -> hidden 4; route everything through the first hidden unit
    std::fill(p.w1->value.data.begin(), p.w1->value.data.end(), 0.0);
    std::fill(p.w2->value.data.begin(), p.w2->value.data.end(), 0.0);
    std::fill(p.b1->value.data.begin(), p.b1->value.data.end(), 0.0);
    std::fill(p.b2->value.data.begin(), p.b2->value.data.end(), 0.0);
    p.w1->value.at(0, 0) = 1.0;
    p.w2->value.at(0, 0) = 1.0;
    Graph g;
    const Tensor& out = g.value(embed_block(g, g.input(Tensor::row({2.0})), p));
    CHECK(out.data[0] == 4.0);  // 2 + relu(2*1)*1
}

TEST_CASE("embed_block keeps input shape") {
    Rng rng(9);
    EmbedParams p = init_embed_params(4, rng, "t");
    Graph g;
    Tensor x = Tensor::zeros({5, 4});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    CHECK(g.value(embed_block(g, g.input(x), p)).shape == x.shape);
    CHECK_THROWS_AS(embed_block(g, g.input(Tensor::zeros({2, 3})), p), ShapeError);
}

TEST_CASE("backward of sum gives all ones") {
    auto p = make_param("p", Tensor::from_rows({{1, 2}, {3, 4}}));
    Graph g;
    g.backward(g.sum_all(g.param(p)));
    for (double v : p->grad.data) CHECK(v == 1.0);
}

TEST_CASE("backward of sum of squares") {
    auto p = make_param("p", Tensor::row({1, 2, 3}));
    Graph g;
    Value v = g.param(p);
    g.backward(g.sum_all(g.hadamard(v, v)));
    CHECK(p->grad.data == std::vector<double>{2, 4, 6});
}

TEST_CASE("two backwards without zero_grad double the grads") {
    auto p = make_param("p", Tensor::row({1, 2, 3}));
    Graph g;
    Value v = g.param(p);
    Value loss = g.sum_all(g.hadamard(v, v));
    g.backward(loss);
    g.backward(loss);
    CHECK(p->grad.data == std::vector<double>{4, 8, 12});
}

TEST_CASE("non-scalar loss is a contract error") {
    Graph g;
    Value v = g.input(Tensor::row({1, 2}));
    CHECK_THROWS_AS(g.backward(v), ShapeError);
}

TEST_CASE("gradcheck exact for linear function") {
    Rng rng(1);
    auto p = make_param_uniform("p", 3, 3, 1.0, rng);
    Tensor c = Tensor::zeros({3, 3});
    for (auto& v : c.data) v = rng.uniform(-1, 1);
    LossFn f = [&](Graph& g) { return g.sum_all(g.hadamard(g.param(p), g.input(c))); };
    auto report = finite_diff_gradcheck(f, {p}, {1e-5, 1e-10, nullptr});
    CHECK(report.passed());
    CHECK(report.max_rel_err <= 1e-10);
}

TEST_CASE("gradcheck constant function") {
    auto p = make_param("p", Tensor::row({1, 2}));
    LossFn f = [&](Graph& g) {
        g.param(p);  // on the tape but unused downstream
        return g.sum_all(g.input(Tensor::scalar(42.0)));
    };
    auto report = finite_diff_gradcheck(f, {p}, {1e-5, 1e-12, nullptr});
    CHECK(report.passed());
    CHECK(report.max_rel_err == 0.0);
}

TEST_CASE("gradcheck cross-entropy of softmax of matmul, seed 42") {
    Rng rng(42);
    auto w = make_param_uniform("w", 3, 3, 1.0, rng);
    Tensor x = Tensor::zeros({3, 3});
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<std::size_t> labels = {rng.index(3), rng.index(3), rng.index(3)};
    LossFn f = [&](Graph& g) {
        Value probs = g.softmax_rows(g.matmul(g.input(x), g.param(w)));
        return g.scale(g.sum_all(g.log(g.pick_rows(probs, labels))), -1.0 / 3.0);
    };
    auto report = finite_diff_gradcheck(f, {w}, {1e-5, 1e-6, nullptr});
    CHECK(report.passed());
    CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("gradcheck random compositions at shapes <= 8x8") {
    Rng rng(123);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t m = 1 + rng.index(8), k = 1 + rng.index(8), n = 1 + rng.index(8);
        auto a = make_param_uniform("a", m, k, 1.0, rng);
        auto b = make_param_uniform("b", k, n, 1.0, rng);
        auto bias = make_param_uniform("bias", 1, n, 1.0, rng);
        LossFn f = [&](Graph& g) {
            Value h = g.add_row_bias(g.matmul(g.param(a), g.param(b)), g.param(bias));
            Value s = g.softmax_rows(g.scale(h, 0.7));
            Value r = g.relu(g.add(h, h));
            Value joined = g.concat_cols(s, g.transpose(g.matmul(r, g.transpose(s))));
            return g.sum_all(g.hadamard(g.mean_rows(joined), g.mean_rows(joined)));
        };
        auto report = finite_diff_gradcheck(f, {a, b, bias}, {1e-5, 1e-5, nullptr});
        CHECK(report.passed());
    }
}

TEST_CASE("tape determinism is bit exact") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        auto w = make_param_uniform("w", 4, 4, 1.0, rng);
        Tensor x = Tensor::zeros({4, 4});
        for (auto& v : x.data) v = rng.uniform(-1, 1);
        Graph g;
        Value probs = g.softmax_rows(g.matmul(g.input(x), g.param(w)));
        Value loss = g.scale(g.sum_all(g.log(probs)), -0.25);
        g.backward(loss);
        return std::make_pair(g.value(loss).data[0], w->grad.data);
    };
    auto [l1, g1] = run(7);
    auto [l2, g2] = run(7);
    CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint round-trips exactly") {
    Rng rng(31);
    auto a = make_param_uniform("layer.weight", 3, 5, 2.0, rng);
    auto b = make_param("layer.bias", Tensor::row({1e-300, -0.1, 3.14159265358979312}));
    std::vector<ParamPtr> params = {a, b};
    Tensor a_saved = a->value;
    Tensor b_saved = b->value;

    auto path = std::filesystem::temp_directory_path() / "catt_ckpt_test.txt";
    save_checkpoint(path.string(), params);
    for (auto& v : a->value.data) v = 0.0;
    for (auto& v : b->value.data) v = 0.0;
    load_checkpoint(path.string(), params);
    CHECK(a->value.data == a_saved.data);
    CHECK(b->value.data == b_saved.data);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint mismatch errors") {
    Rng rng(32);
    auto a = make_param_uniform("w", 2, 2, 1.0, rng);
    auto path = std::filesystem::temp_directory_path() / "catt_ckpt_mismatch.txt";
    save_checkpoint(path.string(), {a});

    auto wrong_shape = make_param("w", Tensor::zeros({3, 2}));
    CHECK_THROWS_AS(load_checkpoint(path.string(), {wrong_shape}), CheckpointError);
    auto wrong_name = make_param("other", Tensor::zeros({2, 2}));
    CHECK_THROWS_AS(load_checkpoint(path.string(), {wrong_name}), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/nope.ckpt", {a}), IoError);
    std::filesystem::remove(path);
}
