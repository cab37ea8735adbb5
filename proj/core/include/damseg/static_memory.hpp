#pragma once

// Static-memory attention: m learnable memory slots projected into keys and
// values by one learnable matrix W_k, with K = xi W_k^T and V = xi W_k.
// Queries come from the input; keys and values never do.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "damseg/tensor.hpp"

namespace damseg::memory {

struct StaticMemory {
    Tensor xi;   // [m x d] memory slots
    Tensor w_k;  // [d x d] key projection; the value projection is its transpose

    std::size_t slots() const { return xi.dim(0); }
    std::size_t width() const { return xi.dim(1); }

    /// xi W_k^T, shape [m x d].
    Tensor keys() const;
    /// xi W_k, shape [m x d].
    Tensor values() const;

    std::vector<Tensor> parameters() const { return {xi, w_k}; }
};

struct DamOutputs {
    Tensor output;     // [T x d]
    Tensor attention;  // [T x m], rows on the simplex
    Tensor keys;
    Tensor values;
};

/// softmax(Q K^T / sqrt(d_key)) V for a batch of T query rows.
/// Throws DimensionError unless Q is [T x d].
Tensor dam_forward(const StaticMemory& mem, const Tensor& queries);
DamOutputs dam_forward_detailed(const StaticMemory& mem, const Tensor& queries);

struct RetrievalDiagnostics {
    std::vector<double> attention_entropy;  // one per query row, in [0, log m]
    std::size_t effective_states = 0;       // complete-linkage clusters of V rows
};

RetrievalDiagnostics dam_diagnostics(const StaticMemory& mem, const Tensor& queries);

/// Number of complete-linkage clusters of the rows of `rows` ([m x d]) when
/// merging stops at the given diameter.
std::size_t complete_linkage_clusters(const Tensor& rows, double tolerance);

enum class InitScheme {
    near_orthogonal,  // W_k = I + N(0, 0.01^2) noise
    identity_wk,      // W_k = I exactly
    zero_wk,          // W_k = 0: the memory contributes nothing
};

InitScheme parse_init_scheme(std::string_view name);

/// xi entries i.i.d. N(0, 1) / sqrt(d); W_k per scheme. Deterministic in seed.
StaticMemory init_static_memory(std::size_t m, std::size_t d, std::uint64_t seed,
                                InitScheme scheme = InitScheme::near_orthogonal);

// Weight file: "DAMW", u16 version (1), u32 m, u32 d, then xi rows and W_k
// rows as little-endian float64, row-major.
inline constexpr char kWeightsMagic[4] = {'D', 'A', 'M', 'W'};
inline constexpr std::uint16_t kWeightsVersion = 1;

void save_static_memory(std::ostream& out, const StaticMemory& mem);
/// Throws FormatError on wrong magic, wrong version, or truncation.
StaticMemory load_static_memory(std::istream& in);
void save_static_memory(const std::string& path, const StaticMemory& mem);
StaticMemory load_static_memory(const std::string& path);

}  // namespace damseg::memory
