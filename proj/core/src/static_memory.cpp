#include "damseg/static_memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "damseg/binary_io.hpp"
#include "damseg/errors.hpp"
#include "damseg/rng.hpp"

namespace damseg::memory {

Tensor StaticMemory::keys() const { return matmul(xi, transpose(w_k)); }

Tensor StaticMemory::values() const { return matmul(xi, w_k); }

DamOutputs dam_forward_detailed(const StaticMemory& mem, const Tensor& queries) {
    if (queries.rank() != 2 || queries.dim(1) != mem.width()) {
        throw DimensionError("dam_forward: queries " + shape_to_string(queries.shape()) +
                             " for memory of width " + std::to_string(mem.width()));
    }
    DamOutputs out;
    out.keys = mem.keys();
    out.values = mem.values();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(out.keys.dim(1)));
    out.attention = softmax_rows(scale(matmul(queries, transpose(out.keys)), inv_sqrt_d));
    out.output = matmul(out.attention, out.values);
    return out;
}

Tensor dam_forward(const StaticMemory& mem, const Tensor& queries) {
    return dam_forward_detailed(mem, queries).output;
}

std::size_t complete_linkage_clusters(const Tensor& rows, double tolerance) {
    const std::size_t m = rows.dim(0), d = rows.dim(1);
    auto v = rows.data();
    std::vector<double> dist(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += (v[i * d + c] - v[j * d + c]) * (v[i * d + c] - v[j * d + c]);
            dist[i * m + j] = std::sqrt(s);
        }
    }
    std::vector<std::vector<std::size_t>> clusters(m);
    for (std::size_t i = 0; i < m; ++i) clusters[i] = {i};
    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double worst = 0.0;
        for (auto i : a) {
            for (auto j : b) worst = std::max(worst, dist[i * m + j]);
        }
        return worst;
    };
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double l = linkage(clusters[i], clusters[j]);
                if (l < best) {
                    best = l;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best > tolerance) break;
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return clusters.size();
}

RetrievalDiagnostics dam_diagnostics(const StaticMemory& mem, const Tensor& queries) {
    const auto out = dam_forward_detailed(mem, queries.detach());
    RetrievalDiagnostics diag;
    const std::size_t rows = out.attention.dim(0), m = out.attention.dim(1);
    auto a = out.attention.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double h = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double p = a[r * m + j];
            if (p > 0.0) h -= p * std::log(p);
        }
        diag.attention_entropy.push_back(std::max(0.0, h));
    }
    const Tensor& v = out.values;
    const std::size_t d = v.dim(1);
    double mean_norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += v.at(i, c) * v.at(i, c);
        mean_norm += std::sqrt(s);
    }
    mean_norm /= static_cast<double>(m);
    diag.effective_states = complete_linkage_clusters(v, 1e-3 * mean_norm);
    return diag;
}

InitScheme parse_init_scheme(std::string_view name) {
    if (name == "near_orthogonal") return InitScheme::near_orthogonal;
    if (name == "identity_wk") return InitScheme::identity_wk;
    if (name == "zero_wk") return InitScheme::zero_wk;
    throw ParameterError("unknown init scheme '" + std::string(name) + "'");
}

StaticMemory init_static_memory(std::size_t m, std::size_t d, std::uint64_t seed, InitScheme scheme) {
    if (m < 1 || d < 1) throw ParameterError("init_static_memory: m and d must be >= 1");
    Rng xi_rng(split_seed(seed, 0));
    Rng wk_rng(split_seed(seed, 1));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    StaticMemory mem{Tensor({m, d}), Tensor({d, d})};
    for (auto& v : mem.xi.data_mut()) v = xi_rng.normal() * inv_sqrt_d;
    auto w = mem.w_k.data_mut();
    if (scheme != InitScheme::zero_wk) {
        for (std::size_t i = 0; i < d; ++i) w[i * d + i] = 1.0;
    }
    if (scheme == InitScheme::near_orthogonal) {
        for (auto& v : w) v += 0.01 * wk_rng.normal();
    }
    return mem;
}

void save_static_memory(std::ostream& out, const StaticMemory& mem) {
    out.write(kWeightsMagic, 4);
    io::write_u16(out, kWeightsVersion);
    io::write_u32(out, static_cast<std::uint32_t>(mem.slots()));
    io::write_u32(out, static_cast<std::uint32_t>(mem.width()));
    for (double v : mem.xi.data()) io::write_f64(out, v);
    for (double v : mem.w_k.data()) io::write_f64(out, v);
    if (!out) throw FormatError("DAMW: write failed");
}

StaticMemory load_static_memory(std::istream& in) {
    const auto magic = io::read_bytes(in, 4);
    if (magic != std::string(kWeightsMagic, 4)) throw FormatError("DAMW: bad magic");
    const auto version = io::read_u16(in);
    if (version != kWeightsVersion) {
        throw FormatError("DAMW: unsupported version " + std::to_string(version));
    }
    const std::size_t m = io::read_u32(in);
    const std::size_t d = io::read_u32(in);
    if (m == 0 || d == 0) throw FormatError("DAMW: zero extent");
    StaticMemory mem{Tensor({m, d}), Tensor({d, d})};
    for (auto& v : mem.xi.data_mut()) v = io::read_f64(in);
    for (auto& v : mem.w_k.data_mut()) v = io::read_f64(in);
    return mem;
}

void save_static_memory(const std::string& path, const StaticMemory& mem) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("DAMW: cannot write " + path);
    save_static_memory(out, mem);
}

StaticMemory load_static_memory(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("DAMW: cannot open " + path);
    return load_static_memory(in);
}

}  // namespace damseg::memory
