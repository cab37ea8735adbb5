#pragma once

// Continuous modern Hopfield memory: log-sum-exp energy, softmax retrieval,
// static-query attention, and the similarity/separation/projection
// decomposition of retrieval.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "damseg/csv.hpp"
#include "damseg/rng.hpp"
#include "damseg/tensor.hpp"

namespace damseg::modern {

using Vector = std::vector<double>;

/// Stored patterns as the columns of a d x N matrix, with inverse temperature beta.
class ContinuousStore {
public:
    /// Throws ParameterError for beta <= 0 or non-finite entries, DimensionError
    /// if X is not a non-empty matrix.
    ContinuousStore(Tensor patterns, double beta);
    /// beta defaults to 1/sqrt(d).
    explicit ContinuousStore(Tensor patterns);

    const Tensor& patterns() const { return patterns_; }
    std::size_t dim() const { return patterns_.dim(0); }
    std::size_t count() const { return patterns_.dim(1); }
    double beta() const { return beta_; }
    double entry(std::size_t row, std::size_t col) const { return x_[row * count() + col]; }
    Vector column(std::size_t j) const;
    /// Largest squared column norm (M^2 in the energy).
    double max_sq_norm() const;
    double mean_column_norm() const;

private:
    Tensor patterns_;
    std::span<const double> x_;
    double beta_;
};

/// The retrieval state; a plain finite vector of length d.
struct QueryState {
    Vector xi;
};

/// E = -lse(beta, X^T xi) + xi^T xi / 2 + beta^-1 log N + M^2 / 2.
double energy_continuous(const ContinuousStore& store, const QueryState& query);
/// Same energy as a differentiable scalar in xi (shape [d]).
Tensor energy_continuous(const ContinuousStore& store, const Tensor& xi);

/// xi_new = X softmax(beta X^T xi).
QueryState update_continuous(const ContinuousStore& store, const QueryState& query);
/// Softmax weights used by update_continuous; the convex-hull certificate.
Vector retrieval_weights(const ContinuousStore& store, const QueryState& query);

/// z = softmax(K xi / sqrt(d_k)) Z with keys K [N x d_k] and values Z [N x d_v].
Vector retrieve_static_query(const QueryState& query, const Tensor& keys, const Tensor& values);

enum class Similarity { dot, cosine };
enum class Separation { softmax, max };

Similarity parse_similarity(std::string_view name);
Separation parse_separation(std::string_view name);

struct UhnSpec {
    Similarity sim = Similarity::dot;
    Separation sep = Separation::softmax;
    double beta = 1.0;
    /// Projection P, shape [p x N].
    Tensor projection;

    /// Resolves component names; throws ParameterError for unknown names.
    static UhnSpec from_names(std::string_view sim, std::string_view sep, double beta, Tensor projection);
};

/// z = P sep(sim(M, q)); M is [d x N] with memories as columns.
Vector uhn_retrieve(const UhnSpec& spec, const Tensor& memory, const Vector& q);

struct Attractor {
    Vector state;
    std::size_t basin_count = 0;
};

/// merge tolerance used when none is given: 1e-4 * mean column norm.
double default_merge_tol(const ContinuousStore& store);

/// Iterates update_continuous `iters` times from every probe, merges end
/// states closer than merge_tol (Euclidean) and returns the attractors in
/// lexicographic order of their states.
std::vector<Attractor> metastable_census(const ContinuousStore& store, const std::vector<QueryState>& probes,
                                         std::size_t iters, double merge_tol);

/// Header: attractor_id,basin_count,norm
CsvTable census_table(const std::vector<Attractor>& attractors);

/// `count` mutually orthogonal columns of norm `radius` in dimension `dim`,
/// randomly rotated within the coordinate axes by a signed permutation.
Tensor well_separated_patterns(std::size_t count, std::size_t dim, double radius, Rng& rng);

/// Probes: a random stored column plus isotropic Gaussian noise of the given
/// standard deviation.
std::vector<QueryState> probes_near_patterns(const ContinuousStore& store, std::size_t count, double noise,
                                             Rng& rng);

}  // namespace damseg::modern
