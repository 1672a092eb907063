#include "catt/scm.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace catt {

namespace {

constexpr double kRowTol = 1e-12;

void check_row(const std::vector<double>& table, std::size_t offset, std::size_t width,
               const std::string& label) {
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
        double v = table[offset + i];
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("scm: negative or non-finite entry in row " + label);
        }
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kRowTol) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", sum);
        throw ValidationError("scm: row " + label + " sums to " + buf + ", expected 1");
    }
}

void check_distribution(const DiscreteDistribution& d, const char* what) {
    double sum = 0.0;
    for (double v : d) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InputError(std::string(what) + ": invalid distribution entry");
        }
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kRowTol) {
        throw InputError(std::string(what) + ": distribution does not sum to 1");
    }
}

std::vector<double> softmax_vec(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::string cell(std::size_t a, std::size_t b) {
    return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

}  // namespace

void FrontDoorScm::validate() const {
    if (nc < 1 || nx < 1 || nz < 1 || ny < 1) throw ValidationError("scm: empty domain");
    if (p_c.size() != nc || p_x_given_c.size() != nc * nx || p_z_given_x.size() != nx * nz ||
        p_y_given_zc.size() != nz * nc * ny) {
        throw ValidationError("scm: table sizes do not match domain sizes");
    }
    check_row(p_c, 0, nc, "P(C)");
    for (std::size_t c = 0; c < nc; ++c) {
        check_row(p_x_given_c, c * nx, nx, "P(X|C=" + std::to_string(c) + ")");
    }
    for (std::size_t x = 0; x < nx; ++x) {
        check_row(p_z_given_x, x * nz, nz, "P(Z|X=" + std::to_string(x) + ")");
    }
    for (std::size_t z = 0; z < nz; ++z) {
        for (std::size_t c = 0; c < nc; ++c) {
            check_row(p_y_given_zc, (z * nc + c) * ny, ny,
                      "P(Y|Z=" + std::to_string(z) + ",C=" + std::to_string(c) + ")");
        }
    }
}

DiscreteDistribution observational(const FrontDoorScm& scm, std::size_t x) {
    double px = 0.0;
    for (std::size_t c = 0; c < scm.nc; ++c) px += scm.pc(c) * scm.px_c(x, c);
    if (px <= 0.0) {
        throw PositivityError("observational: P(X=" + std::to_string(x) + ") is zero");
    }
    DiscreteDistribution out(scm.ny, 0.0);
    for (std::size_t y = 0; y < scm.ny; ++y) {
        double num = 0.0;
        for (std::size_t c = 0; c < scm.nc; ++c) {
            for (std::size_t z = 0; z < scm.nz; ++z) num += scm.joint(c, x, z, y);
        }
        out[y] = num / px;
    }
    return out;
}

DiscreteDistribution intervene_truth(const FrontDoorScm& scm, std::size_t x) {
    DiscreteDistribution out(scm.ny, 0.0);
    for (std::size_t y = 0; y < scm.ny; ++y) {
        double total = 0.0;
        for (std::size_t z = 0; z < scm.nz; ++z) {
            double inner = 0.0;
            for (std::size_t c = 0; c < scm.nc; ++c) inner += scm.pc(c) * scm.py_zc(y, z, c);
            total += scm.pz_x(z, x) * inner;
        }
        out[y] = total;
    }
    return out;
}

namespace {

// Observational P(Y=y | Z=z, X=x) by Bayes over the joint; the cell (x, z)
// must have positive probability.
double py_given_zx(const FrontDoorScm& scm, std::size_t y, std::size_t z, std::size_t x,
                   const char* caller) {
    double den = 0.0;
    for (std::size_t c = 0; c < scm.nc; ++c) den += scm.pc(c) * scm.px_c(x, c) * scm.pz_x(z, x);
    if (den <= 0.0) {
        throw PositivityError(std::string(caller) + ": zero-probability cell (x', z) = " +
                              cell(x, z));
    }
    double num = 0.0;
    for (std::size_t c = 0; c < scm.nc; ++c) num += scm.joint(c, x, z, y);
    return num / den;
}

double px_marginal(const FrontDoorScm& scm, std::size_t x) {
    double px = 0.0;
    for (std::size_t c = 0; c < scm.nc; ++c) px += scm.pc(c) * scm.px_c(x, c);
    return px;
}

}  // namespace

DiscreteDistribution front_door(const FrontDoorScm& scm, std::size_t x) {
    DiscreteDistribution out(scm.ny, 0.0);
    for (std::size_t y = 0; y < scm.ny; ++y) {
        double total = 0.0;
        for (std::size_t z = 0; z < scm.nz; ++z) {
            double pzx = scm.pz_x(z, x);
            double inner = 0.0;
            for (std::size_t xp = 0; xp < scm.nx; ++xp) {
                double px = px_marginal(scm, xp);
                if (px <= 0.0) continue;  // zero-weight stratum contributes nothing
                inner += px * py_given_zx(scm, y, z, xp, "front_door");
            }
            total += pzx * inner;
        }
        out[y] = total;
    }
    return out;
}

DiscreteDistribution do_z(const FrontDoorScm& scm, std::size_t z) {
    DiscreteDistribution out(scm.ny, 0.0);
    for (std::size_t y = 0; y < scm.ny; ++y) {
        double total = 0.0;
        for (std::size_t x = 0; x < scm.nx; ++x) {
            double px = px_marginal(scm, x);
            if (px <= 0.0) continue;
            total += px * py_given_zx(scm, y, z, x, "do_z");
        }
        out[y] = total;
    }
    return out;
}

DiscreteDistribution backdoor(const FrontDoorScm& scm, std::size_t x) {
    DiscreteDistribution out(scm.ny, 0.0);
    for (std::size_t y = 0; y < scm.ny; ++y) {
        double total = 0.0;
        for (std::size_t c = 0; c < scm.nc; ++c) {
            if (scm.pc(c) <= 0.0) continue;
            double den = scm.pc(c) * scm.px_c(x, c);
            if (den <= 0.0) {
                throw PositivityError("backdoor: zero-probability cell (x, c) = " + cell(x, c));
            }
            double num = 0.0;
            for (std::size_t z = 0; z < scm.nz; ++z) num += scm.joint(c, x, z, y);
            total += scm.pc(c) * num / den;
        }
        out[y] = total;
    }
    return out;
}

double wgm(const std::vector<double>& values, const std::vector<double>& weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw InputError("wgm: values and weights must be same nonempty length");
    }
    check_distribution(weights, "wgm");
    double log_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) {
            throw InputError("wgm: value at index " + std::to_string(i) + " is not positive");
        }
        log_sum += weights[i] * std::log(values[i]);
    }
    return std::exp(log_sum);
}

NwgmResult nwgm_gap(const AffineScorer& scorer, const DiscreteDistribution& pz,
                    const DiscreteDistribution& px, const Tensor& z_embeds,
                    const Tensor& x_embeds) {
    check_distribution(pz, "nwgm_gap");
    check_distribution(px, "nwgm_gap");
    if (z_embeds.rows() != pz.size() || x_embeds.rows() != px.size()) {
        throw InputError("nwgm_gap: embedding row counts do not match distributions");
    }
    std::size_t n_logits = scorer.bias.cols();

    auto logits_for = [&](const std::vector<double>& ze, const std::vector<double>& xe) {
        std::vector<double> logits(n_logits);
        for (std::size_t l = 0; l < n_logits; ++l) {
            double v = scorer.bias.at(0, l);
            for (std::size_t i = 0; i < z_embeds.cols(); ++i) v += ze[i] * scorer.z_weight.at(i, l);
            for (std::size_t i = 0; i < x_embeds.cols(); ++i) v += xe[i] * scorer.x_weight.at(i, l);
            logits[l] = v;
        }
        return logits;
    };
    auto embed_row = [](const Tensor& t, std::size_t r) {
        std::vector<double> out(t.cols());
        for (std::size_t i = 0; i < t.cols(); ++i) out[i] = t.at(r, i);
        return out;
    };

    NwgmResult result;
    result.exact.assign(n_logits, 0.0);
    for (std::size_t z = 0; z < pz.size(); ++z) {
        for (std::size_t x = 0; x < px.size(); ++x) {
            auto sm = softmax_vec(logits_for(embed_row(z_embeds, z), embed_row(x_embeds, x)));
            for (std::size_t l = 0; l < n_logits; ++l) result.exact[l] += pz[z] * px[x] * sm[l];
        }
    }

    std::vector<double> ze_mean(z_embeds.cols(), 0.0);
    for (std::size_t z = 0; z < pz.size(); ++z) {
        for (std::size_t i = 0; i < z_embeds.cols(); ++i) ze_mean[i] += pz[z] * z_embeds.at(z, i);
    }
    std::vector<double> xe_mean(x_embeds.cols(), 0.0);
    for (std::size_t x = 0; x < px.size(); ++x) {
        for (std::size_t i = 0; i < x_embeds.cols(); ++i) xe_mean[i] += px[x] * x_embeds.at(x, i);
    }
    result.approx = softmax_vec(logits_for(ze_mean, xe_mean));

    for (std::size_t l = 0; l < n_logits; ++l) {
        result.gap = std::max(result.gap, std::fabs(result.exact[l] - result.approx[l]));
    }
    return result;
}

FrontDoorScm random_scm(std::size_t nc, std::size_t nx, std::size_t nz, std::size_t ny,
                        std::uint64_t seed, double eps) {
    std::size_t max_width = std::max(std::max(nc, nx), std::max(nz, ny));
    if (nc < 1 || nx < 1 || nz < 1 || ny < 1) throw ConfigError("random_scm: domain sizes must be >= 1");
    if (!(eps > 0.0) || eps >= 1.0 / static_cast<double>(max_width)) {
        throw ConfigError("random_scm: eps must be in (0, 1/max_domain_size)");
    }
    Rng rng(seed);
    auto draw_row = [&](std::vector<double>& table, std::size_t offset, std::size_t width) {
        // symmetric Dirichlet(1) via normalized exponentials, then floored
        double sum = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            double u = rng.uniform();
            double e = -std::log(1.0 - u);
            table[offset + i] = e;
            sum += e;
        }
        if (sum <= 0.0) sum = 1.0;  // all-zero draw, flooring below makes the row valid
        for (std::size_t i = 0; i < width; ++i) table[offset + i] /= sum;
        double floored = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            table[offset + i] = std::max(table[offset + i], eps);
            floored += table[offset + i];
        }
        for (std::size_t i = 0; i < width; ++i) table[offset + i] /= floored;
    };

    FrontDoorScm scm;
    scm.nc = nc;
    scm.nx = nx;
    scm.nz = nz;
    scm.ny = ny;
    scm.p_c.assign(nc, 0.0);
    scm.p_x_given_c.assign(nc * nx, 0.0);
    scm.p_z_given_x.assign(nx * nz, 0.0);
    scm.p_y_given_zc.assign(nz * nc * ny, 0.0);
    draw_row(scm.p_c, 0, nc);
    for (std::size_t c = 0; c < nc; ++c) draw_row(scm.p_x_given_c, c * nx, nx);
    for (std::size_t x = 0; x < nx; ++x) draw_row(scm.p_z_given_x, x * nz, nz);
    for (std::size_t z = 0; z < nz; ++z) {
        for (std::size_t c = 0; c < nc; ++c) draw_row(scm.p_y_given_zc, (z * nc + c) * ny, ny);
    }
    return scm;
}

namespace {
constexpr const char* kScmTag = "catt-scm v1";

void write_table(std::ostream& os, const std::string& name, const std::vector<double>& table,
                 std::size_t row_width) {
    os << name << "\n";
    char buf[64];
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", table[i]);
        os << buf;
        os << ((i % row_width == row_width - 1) ? "\n" : " ");
    }
}
}  // namespace

void save_scm(const std::string& path, const FrontDoorScm& scm) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("scm: cannot write " + tmp);
        os << kScmTag << "\n";
        os << "sizes " << scm.nc << " " << scm.nx << " " << scm.nz << " " << scm.ny << "\n";
        write_table(os, "P_C", scm.p_c, scm.nc);
        write_table(os, "P_X_given_C", scm.p_x_given_c, scm.nx);
        write_table(os, "P_Z_given_X", scm.p_z_given_x, scm.nz);
        write_table(os, "P_Y_given_ZC", scm.p_y_given_zc, scm.ny);
        if (!os) throw IoError("scm: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

FrontDoorScm read_scm(std::istream& is, const std::string& origin) {
    std::string line;
    if (!std::getline(is, line) || line != kScmTag) {
        throw ParseError("scm: bad version tag in " + origin);
    }
    std::string word;
    FrontDoorScm scm;
    is >> word >> scm.nc >> scm.nx >> scm.nz >> scm.ny;
    if (!is || word != "sizes") throw ParseError("scm: missing sizes line in " + origin);

    auto read_table = [&](const char* name, std::vector<double>& table, std::size_t count) {
        is >> word;
        if (!is || word != name) {
            throw ParseError("scm: expected table " + std::string(name) + " in " + origin);
        }
        table.resize(count);
        for (auto& v : table) {
            if (!(is >> v)) throw ParseError("scm: truncated table " + std::string(name));
        }
    };
    read_table("P_C", scm.p_c, scm.nc);
    read_table("P_X_given_C", scm.p_x_given_c, scm.nc * scm.nx);
    read_table("P_Z_given_X", scm.p_z_given_x, scm.nx * scm.nz);
    read_table("P_Y_given_ZC", scm.p_y_given_zc, scm.nz * scm.nc * scm.ny);
    scm.validate();
    return scm;
}

FrontDoorScm load_scm(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("scm: cannot read " + path);
    return read_scm(is, path);
}

}  // namespace catt
