#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catt/tensor.hpp"

namespace catt {

// Probabilities indexed by outcome; sums to 1 within 1e-12.
using DiscreteDistribution = std::vector<double>;

// Discrete structural causal model over the graph C->X, C->Y, X->Z, Z->Y.
// C confounds X and Y; Z mediates every causal path from X to Y.
struct FrontDoorScm {
    std::size_t nc = 0, nx = 0, nz = 0, ny = 0;
    std::vector<double> p_c;           // |C|
    std::vector<double> p_x_given_c;   // row per c, |X| wide
    std::vector<double> p_z_given_x;   // row per x, |Z| wide
    std::vector<double> p_y_given_zc;  // row per (z,c) pair (z outer), |Y| wide

    double pc(std::size_t c) const { return p_c[c]; }
    double px_c(std::size_t x, std::size_t c) const { return p_x_given_c[c * nx + x]; }
    double pz_x(std::size_t z, std::size_t x) const { return p_z_given_x[x * nz + z]; }
    double py_zc(std::size_t y, std::size_t z, std::size_t c) const {
        return p_y_given_zc[(z * nc + c) * ny + y];
    }
    double joint(std::size_t c, std::size_t x, std::size_t z, std::size_t y) const {
        return pc(c) * px_c(x, c) * pz_x(z, x) * py_zc(y, z, c);
    }

    // Checks every CPT row is a distribution; throws ValidationError naming
    // the offending row otherwise.
    void validate() const;
};

// P(Y | X=x) by exact conditioning of the joint table.
DiscreteDistribution observational(const FrontDoorScm& scm, std::size_t x);

// Ground truth P(Y | do(X=x)) on the mutilated graph (C->X deleted).
DiscreteDistribution intervene_truth(const FrontDoorScm& scm, std::size_t x);

// Front-door adjustment: sum_z P(z|x) sum_x' P(x') P(Y|z,x'), built from
// observational quantities only.
DiscreteDistribution front_door(const FrontDoorScm& scm, std::size_t x);

// P(Y | do(Z=z)) = sum_x P(x) P(Y|x,z).
DiscreteDistribution do_z(const FrontDoorScm& scm, std::size_t z);

// Backdoor adjustment over the observed confounder: sum_c P(c) P(Y|x,c).
DiscreteDistribution backdoor(const FrontDoorScm& scm, std::size_t x);

// Weighted geometric mean prod_i values[i]^weights[i]. Values must be
// positive; weights must be a distribution.
double wgm(const std::vector<double>& values, const std::vector<double>& weights);

// Affine scorer over a pair of embeddings: logits = ze * z_weight +
// xe * x_weight + bias.
struct AffineScorer {
    Tensor z_weight;  // dz x L
    Tensor x_weight;  // dx x L
    Tensor bias;      // 1 x L
};

struct NwgmResult {
    DiscreteDistribution exact;   // E over (z,x) of softmax(g(z,x))
    DiscreteDistribution approx;  // softmax(g(E[z], E[x]))
    double gap = 0.0;             // max-abs difference
};

// Compares the exact expectation of a softmax-terminated affine scorer with
// the expectation moved inside the softmax. The gap is reported, not
// asserted: the normalized weighted geometric mean step is an approximation.
NwgmResult nwgm_gap(const AffineScorer& scorer, const DiscreteDistribution& pz,
                    const DiscreteDistribution& px, const Tensor& z_embeds,
                    const Tensor& x_embeds);

// Random SCM with all CPT rows floored at eps and renormalized, so every
// positivity precondition of the estimators holds. Deterministic per seed.
FrontDoorScm random_scm(std::size_t nc, std::size_t nx, std::size_t nz, std::size_t ny,
                        std::uint64_t seed, double eps);

// Structured-text serialization: domain sizes then each CPT row-major at 17
// significant digits.
void save_scm(const std::string& path, const FrontDoorScm& scm);
FrontDoorScm load_scm(const std::string& path);
FrontDoorScm read_scm(std::istream& is, const std::string& origin);

}  // namespace catt
