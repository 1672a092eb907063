#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "catt/scm.hpp"

using namespace catt;

namespace {

// P(C=1)=0.5, P(X=1|C)=0.9/0.1, P(Z=1|X)=0.8/0.2, P(Y=1|Z,C)=0.9 iff Z==C.
// Heavily confounded but front-door identifiable.
FrontDoorScm binary_catalog_scm() {
    FrontDoorScm scm;
    scm.nc = scm.nx = scm.nz = scm.ny = 2;
    scm.p_c = {0.5, 0.5};
    scm.p_x_given_c = {0.9, 0.1,   // c = 0
                       0.1, 0.9};  // c = 1
    scm.p_z_given_x = {0.8, 0.2,   // x = 0
                       0.2, 0.8};  // x = 1
    scm.p_y_given_zc = {0.1, 0.9,   // z=0, c=0 (z == c)
                        0.9, 0.1,   // z=0, c=1
                        0.9, 0.1,   // z=1, c=0
                        0.1, 0.9};  // z=1, c=1 (z == c)
    scm.validate();
    return scm;
}

FrontDoorScm no_confounding_scm() {
    FrontDoorScm scm = binary_catalog_scm();
    scm.p_x_given_c = {0.3, 0.7, 0.3, 0.7};  // X independent of C
    scm.validate();
    return scm;
}

double max_abs(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

double sum(const DiscreteDistribution& d) {
    double s = 0.0;
    for (double v : d) s += v;
    return s;
}

}  // namespace

TEST_CASE("validation rejects malformed CPTs") {
    FrontDoorScm scm = binary_catalog_scm();
    scm.p_z_given_x[0] = 0.7;  // row x=0 now sums to 0.9
    CHECK_THROWS_WITH_AS(scm.validate(), doctest::Contains("P(Z|X=0)"), ValidationError);
    scm = binary_catalog_scm();
    scm.p_c = {1.2, -0.2};
    CHECK_THROWS_AS(scm.validate(), ValidationError);
}

TEST_CASE("observational equals interventional without confounding") {
    FrontDoorScm scm = no_confounding_scm();
    for (std::size_t x = 0; x < 2; ++x) {
        CHECK(max_abs(observational(scm, x), intervene_truth(scm, x)) <= 1e-12);
        CHECK(max_abs(front_door(scm, x), observational(scm, x)) <= 1e-12);
        CHECK(max_abs(backdoor(scm, x), observational(scm, x)) <= 1e-12);
    }
}

TEST_CASE("deterministic chain is the identity") {
    // Z = X, Y = Z, |C| = 1
    FrontDoorScm scm;
    scm.nc = 1;
    scm.nx = scm.nz = scm.ny = 2;
    scm.p_c = {1.0};
    scm.p_x_given_c = {0.5, 0.5};
    scm.p_z_given_x = {1, 0, 0, 1};
    scm.p_y_given_zc = {1, 0, 0, 1};
    scm.validate();
    for (std::size_t x = 0; x < 2; ++x) {
        auto obs = observational(scm, x);
        CHECK(obs[x] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(max_abs(obs, backdoor(scm, x)) <= 1e-12);  // |C| = 1
    }
}

TEST_CASE("binary catalog SCM frozen values") {
    FrontDoorScm scm = binary_catalog_scm();
    // brute-force enumeration gives P(Y=1|X=x) = 173/250 for both x while the
    // interventional truth is exactly 1/2
    for (std::size_t x = 0; x < 2; ++x) {
        auto obs = observational(scm, x);
        CHECK(obs[1] == doctest::Approx(0.692).epsilon(1e-12));
        auto truth = intervene_truth(scm, x);
        CHECK(truth[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(max_abs(front_door(scm, x), truth) <= 1e-12);
        CHECK(max_abs(backdoor(scm, x), truth) <= 1e-12);
    }
    for (std::size_t z = 0; z < 2; ++z) {
        CHECK(do_z(scm, z)[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("confounding witness exceeds 0.05") {
    FrontDoorScm scm = binary_catalog_scm();
    double witness = 0.0;
    for (std::size_t x = 0; x < 2; ++x) {
        auto obs = observational(scm, x);
        auto truth = intervene_truth(scm, x);
        double tv = 0.0;
        for (std::size_t y = 0; y < 2; ++y) tv += 0.5 * std::fabs(obs[y] - truth[y]);
        witness = std::max(witness, tv);
    }
    CHECK(witness > 0.05);
    CHECK(witness == doctest::Approx(0.192).epsilon(1e-12));
}

TEST_CASE("confounder inert on Y makes do_z marginal") {
    FrontDoorScm scm = binary_catalog_scm();
    scm.p_y_given_zc = {0.3, 0.7, 0.3, 0.7, 0.6, 0.4, 0.6, 0.4};  // depends on z only
    scm.validate();
    CHECK(do_z(scm, 0)[1] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(do_z(scm, 1)[1] == doctest::Approx(0.4).epsilon(1e-12));
    for (std::size_t x = 0; x < 2; ++x) {
        DiscreteDistribution direct(2, 0.0);
        for (std::size_t z = 0; z < 2; ++z) {
            for (std::size_t y = 0; y < 2; ++y) direct[y] += scm.pz_x(z, x) * (y == 1 ? (z == 0 ? 0.7 : 0.4) : (z == 0 ? 0.3 : 0.6));
        }
        CHECK(max_abs(intervene_truth(scm, x), direct) <= 1e-12);
    }
}

TEST_CASE("chaining identity on random SCMs") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng shape_rng(seed * 97 + 5);
        std::size_t nc = 2 + shape_rng.index(4), nx = 2 + shape_rng.index(4),
                    nz = 2 + shape_rng.index(4), ny = 2 + shape_rng.index(4);
        FrontDoorScm scm = random_scm(nc, nx, nz, ny, seed, 1e-3);
        scm.validate();
        for (std::size_t x = 0; x < scm.nx; ++x) {
            auto fd = front_door(scm, x);
            DiscreteDistribution chained(scm.ny, 0.0);
            for (std::size_t z = 0; z < scm.nz; ++z) {
                auto dz = do_z(scm, z);
                for (std::size_t y = 0; y < scm.ny; ++y) chained[y] += scm.pz_x(z, x) * dz[y];
            }
            CHECK(max_abs(fd, chained) <= 1e-12);
            CHECK(max_abs(fd, intervene_truth(scm, x)) <= 1e-12);
            CHECK(max_abs(backdoor(scm, x), intervene_truth(scm, x)) <= 1e-12);
            CHECK(std::fabs(sum(fd) - 1.0) <= 1e-12);
            CHECK(std::fabs(sum(observational(scm, x)) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("positivity violations are named") {
    FrontDoorScm scm = binary_catalog_scm();
    scm.p_z_given_x = {1.0, 0.0, 1.0, 0.0};  // z=1 never occurs
    scm.validate();
    CHECK_THROWS_WITH_AS(do_z(scm, 1), doctest::Contains("(0, 1)"), PositivityError);

    FrontDoorScm zero_x = binary_catalog_scm();
    zero_x.p_x_given_c = {1.0, 0.0, 1.0, 0.0};  // x=1 never occurs
    zero_x.validate();
    CHECK_THROWS_AS(observational(zero_x, 1), PositivityError);

    FrontDoorScm zero_xc = binary_catalog_scm();
    zero_xc.p_x_given_c = {1.0, 0.0, 0.5, 0.5};  // P(X=1|C=0) = 0
    zero_xc.validate();
    CHECK_THROWS_WITH_AS(backdoor(zero_xc, 1), doctest::Contains("(1, 0)"), PositivityError);
}

TEST_CASE("wgm basics") {
    CHECK(wgm({3.7}, {1.0}) == doctest::Approx(3.7).epsilon(1e-15));
    CHECK(wgm({2, 8}, {0.5, 0.5}) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(wgm({1.0, -2.0}, {0.5, 0.5}), InputError);
    CHECK_THROWS_AS(wgm({1.0, 2.0}, {0.6, 0.6}), InputError);
}

TEST_CASE("wgm of exponentials is the exponential of the mean") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng.index(6);
        std::vector<double> g(n), w(n);
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = rng.uniform(-3, 3);
            w[i] = rng.uniform(0.05, 1.0);
            wsum += w[i];
        }
        double expectation = 0.0;
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] /= wsum;
            expectation += w[i] * g[i];
            values[i] = std::exp(g[i]);
        }
        CHECK(std::fabs(wgm(values, w) - std::exp(expectation)) <= 1e-12);
    }
}

TEST_CASE("nwgm gap vanishes for point masses and constant scorers") {
    AffineScorer scorer;
    scorer.z_weight = Tensor::from_rows({{1, 0}, {0, 1}});
    scorer.x_weight = Tensor::from_rows({{1, 0}, {0, 1}});
    scorer.bias = Tensor::row({0.1, -0.2});
    Tensor z_embeds = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor x_embeds = Tensor::from_rows({{0.3, 0.4}, {2, -1}});

    auto point = nwgm_gap(scorer, {1.0, 0.0}, {0.0, 1.0}, z_embeds, x_embeds);
    CHECK(point.gap <= 1e-12);

    AffineScorer constant;
    constant.z_weight = Tensor::zeros({2, 2});
    constant.x_weight = Tensor::zeros({2, 2});
    constant.bias = Tensor::row({0.7, 0.7});
    auto flat = nwgm_gap(constant, {0.4, 0.6}, {0.5, 0.5}, z_embeds, x_embeds);
    CHECK(flat.gap <= 1e-12);
    CHECK(flat.exact[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("nwgm two-state enumeration") {
    // g(z, x) = z_embed + x_embed with Pz uniform over {(1,0), (0,1)} and a
    // point mass on x
    AffineScorer scorer;
    scorer.z_weight = Tensor::from_rows({{1, 0}, {0, 1}});
    scorer.x_weight = Tensor::from_rows({{1, 0}, {0, 1}});
    scorer.bias = Tensor::row({0, 0});
    Tensor z_embeds = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor x_embeds = Tensor::from_rows({{0, 0}});
    auto r = nwgm_gap(scorer, {0.5, 0.5}, {1.0}, z_embeds, x_embeds);

    // independent 4-term enumeration
    auto sm = [](double a, double b) {
        double ea = std::exp(a), eb = std::exp(b);
        return std::pair<double, double>{ea / (ea + eb), eb / (ea + eb)};
    };
    auto s1 = sm(1, 0), s2 = sm(0, 1);
    CHECK(r.exact[0] == doctest::Approx(0.5 * (s1.first + s2.first)).epsilon(1e-12));
    CHECK(r.exact[1] == doctest::Approx(0.5 * (s1.second + s2.second)).epsilon(1e-12));
    auto sa = sm(0.5, 0.5);
    CHECK(r.approx[0] == doctest::Approx(sa.first).epsilon(1e-12));
    CHECK(std::fabs(sum(r.exact) - 1.0) <= 1e-12);
    CHECK(std::fabs(sum(r.approx) - 1.0) <= 1e-12);
    CHECK(r.gap == doctest::Approx(0.0).epsilon(1e-12));  // symmetric case

    // asymmetric weights produce a real gap, and it is only reported
    auto skew = nwgm_gap(scorer, {0.9, 0.1}, {1.0}, z_embeds, x_embeds);
    CHECK(skew.gap > 0.0);
    CHECK_THROWS_AS(nwgm_gap(scorer, {0.9, 0.2}, {1.0}, z_embeds, x_embeds), InputError);
}

TEST_CASE("random_scm is deterministic and valid") {
    auto a = random_scm(3, 4, 2, 5, 123, 1e-3);
    auto b = random_scm(3, 4, 2, 5, 123, 1e-3);
    CHECK(a.p_y_given_zc == b.p_y_given_zc);
    a.validate();
    for (double v : a.p_x_given_c) CHECK(v > 0.0);
    CHECK_THROWS_AS(random_scm(2, 2, 2, 2, 1, 0.6), ConfigError);
}

TEST_CASE("scm serialization round-trips") {
    FrontDoorScm scm = random_scm(2, 3, 4, 2, 9, 1e-3);
    auto path = std::filesystem::temp_directory_path() / "catt_scm_roundtrip.txt";
    save_scm(path.string(), scm);
    FrontDoorScm loaded = load_scm(path.string());
    CHECK(loaded.p_c == scm.p_c);
    CHECK(loaded.p_x_given_c == scm.p_x_given_c);
    CHECK(loaded.p_z_given_x == scm.p_z_given_x);
    CHECK(loaded.p_y_given_zc == scm.p_y_given_zc);
    std::filesystem::remove(path);

    std::istringstream bad("nonsense\n");
    CHECK_THROWS_AS(read_scm(bad, "test"), ParseError);
}
