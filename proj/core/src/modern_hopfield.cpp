#include "damseg/modern_hopfield.hpp"

#include <algorithm>
#include <cmath>

#include "damseg/errors.hpp"

namespace damseg::modern {

namespace {

void require_finite_values(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw ParameterError(std::string(what) + ": non-finite entry");
    }
}

// In-place max-shifted softmax; shared by every softmax separation below.
void softmax_inplace(Vector& v) {
    const double top = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (auto& x : v) {
        x = std::exp(x - top);
        total += x;
    }
    for (auto& x : v) x /= total;
}

void require_query(const ContinuousStore& store, const Vector& xi) {
    if (xi.size() != store.dim()) {
        throw DimensionError("modern: query of length " + std::to_string(xi.size()) +
                             " for patterns of dimension " + std::to_string(store.dim()));
    }
}

}  // namespace

ContinuousStore::ContinuousStore(Tensor patterns, double beta) : patterns_(patterns.detach()), beta_(beta) {
    if (patterns_.rank() != 2 || patterns_.dim(0) == 0 || patterns_.dim(1) == 0) {
        throw DimensionError("ContinuousStore: expected a non-empty d x N matrix, got " +
                             shape_to_string(patterns_.shape()));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("ContinuousStore: beta must be positive");
    x_ = patterns_.data();
    require_finite_values(x_, "ContinuousStore");
}

ContinuousStore::ContinuousStore(Tensor patterns)
    : ContinuousStore(patterns, 1.0 / std::sqrt(static_cast<double>(patterns.dim(0)))) {}

Vector ContinuousStore::column(std::size_t j) const {
    Vector c(dim());
    for (std::size_t r = 0; r < dim(); ++r) c[r] = entry(r, j);
    return c;
}

double ContinuousStore::max_sq_norm() const {
    double best = 0.0;
    for (std::size_t j = 0; j < count(); ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < dim(); ++r) s += entry(r, j) * entry(r, j);
        best = std::max(best, s);
    }
    return best;
}

double ContinuousStore::mean_column_norm() const {
    double total = 0.0;
    for (std::size_t j = 0; j < count(); ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < dim(); ++r) s += entry(r, j) * entry(r, j);
        total += std::sqrt(s);
    }
    return total / static_cast<double>(count());
}

double energy_continuous(const ContinuousStore& store, const QueryState& query) {
    require_query(store, query.xi);
    require_finite_values(query.xi, "energy_continuous");
    const std::size_t d = store.dim(), n = store.count();
    Vector sims(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += store.entry(r, j) * query.xi[r];
        sims[j] = s;
    }
    double self = 0.0;
    for (double v : query.xi) self += v * v;
    const double beta = store.beta();
    return -logsumexp(beta, sims) + 0.5 * self + std::log(static_cast<double>(n)) / beta +
           0.5 * store.max_sq_norm();
}

Tensor energy_continuous(const ContinuousStore& store, const Tensor& xi) {
    if (xi.size() != store.dim()) {
        throw DimensionError("energy_continuous: query " + shape_to_string(xi.shape()) +
                             " for patterns " + shape_to_string(store.patterns().shape()));
    }
    const double beta = store.beta();
    const Tensor column = reshape(xi, {store.dim(), 1});
    const Tensor sims = matmul(transpose(store.patterns()), column);
    const Tensor half_norm = scale(sum(mul(xi, xi)), 0.5);
    const double constant =
        std::log(static_cast<double>(store.count())) / beta + 0.5 * store.max_sq_norm();
    return add_scalar(sub(half_norm, lse(beta, sims)), constant);
}

Vector retrieval_weights(const ContinuousStore& store, const QueryState& query) {
    require_query(store, query.xi);
    const std::size_t d = store.dim(), n = store.count();
    Vector w(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += store.entry(r, j) * query.xi[r];
        w[j] = store.beta() * s;
    }
    softmax_inplace(w);
    return w;
}

QueryState update_continuous(const ContinuousStore& store, const QueryState& query) {
    const Vector w = retrieval_weights(store, query);
    const std::size_t d = store.dim(), n = store.count();
    QueryState next{Vector(d, 0.0)};
    for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += store.entry(r, j) * w[j];
        next.xi[r] = s;
    }
    return next;
}

Vector retrieve_static_query(const QueryState& query, const Tensor& keys, const Tensor& values) {
    if (keys.rank() != 2 || values.rank() != 2 || keys.dim(0) != values.dim(0) ||
        keys.dim(1) != query.xi.size() || keys.dim(0) == 0) {
        throw DimensionError("retrieve_static_query: keys " + shape_to_string(keys.shape()) + ", values " +
                             shape_to_string(values.shape()) + ", query of length " +
                             std::to_string(query.xi.size()));
    }
    const std::size_t n = keys.dim(0), dk = keys.dim(1), dv = values.dim(1);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    auto k = keys.data();
    auto z = values.data();
    Vector w(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dk; ++c) s += k[j * dk + c] * query.xi[c];
        w[j] = inv_sqrt_dk * s;
    }
    softmax_inplace(w);
    Vector out(dv, 0.0);
    for (std::size_t r = 0; r < dv; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += z[j * dv + r] * w[j];
        out[r] = s;
    }
    return out;
}

Similarity parse_similarity(std::string_view name) {
    if (name == "dot") return Similarity::dot;
    if (name == "cosine") return Similarity::cosine;
    throw ParameterError("unknown similarity '" + std::string(name) + "' (expected dot or cosine)");
}

Separation parse_separation(std::string_view name) {
    if (name == "softmax") return Separation::softmax;
    if (name == "max") return Separation::max;
    throw ParameterError("unknown separation '" + std::string(name) + "' (expected softmax or max)");
}

UhnSpec UhnSpec::from_names(std::string_view sim, std::string_view sep, double beta, Tensor projection) {
    if (!(beta > 0.0)) throw ParameterError("UhnSpec: beta must be positive");
    return UhnSpec{parse_similarity(sim), parse_separation(sep), beta, std::move(projection)};
}

Vector uhn_retrieve(const UhnSpec& spec, const Tensor& memory, const Vector& q) {
    if (memory.rank() != 2 || memory.dim(0) != q.size() || memory.dim(1) == 0) {
        throw DimensionError("uhn_retrieve: memory " + shape_to_string(memory.shape()) +
                             " vs query of length " + std::to_string(q.size()));
    }
    const std::size_t d = memory.dim(0), n = memory.dim(1);
    const Tensor& p = spec.projection;
    if (p.rank() != 2 || p.dim(1) != n) {
        throw DimensionError("uhn_retrieve: projection " + shape_to_string(p.shape()) + " for " +
                             std::to_string(n) + " memories");
    }
    auto m = memory.data();

    // similarity
    Vector score(n);
    double q_norm = 0.0;
    if (spec.sim == Similarity::cosine) {
        for (double v : q) q_norm += v * v;
        q_norm = std::sqrt(q_norm);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += m[r * n + j] * q[r];
        if (spec.sim == Similarity::cosine) {
            double c = 0.0;
            for (std::size_t r = 0; r < d; ++r) c += m[r * n + j] * m[r * n + j];
            const double denom = std::sqrt(c) * q_norm;
            s = denom > 0.0 ? s / denom : 0.0;
        }
        score[j] = s;
    }

    // separation
    if (spec.sep == Separation::softmax) {
        for (auto& s : score) s = spec.beta * s;
        softmax_inplace(score);
    } else {
        const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
        std::fill(score.begin(), score.end(), 0.0);
        score[best] = 1.0;
    }

    // projection
    const std::size_t rows = p.dim(0);
    auto pv = p.data();
    Vector out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += pv[r * n + j] * score[j];
        out[r] = s;
    }
    return out;
}

double default_merge_tol(const ContinuousStore& store) { return 1e-4 * store.mean_column_norm(); }

std::vector<Attractor> metastable_census(const ContinuousStore& store, const std::vector<QueryState>& probes,
                                         std::size_t iters, double merge_tol) {
    if (iters < 1) throw ParameterError("metastable_census: iters must be >= 1");
    if (!(merge_tol >= 0.0)) throw ParameterError("metastable_census: merge_tol must be >= 0");
    std::vector<Attractor> found;
    for (const auto& probe : probes) {
        QueryState state = probe;
        for (std::size_t t = 0; t < iters; ++t) state = update_continuous(store, state);
        auto match = std::find_if(found.begin(), found.end(), [&](const Attractor& a) {
            double dist = 0.0;
            for (std::size_t r = 0; r < a.state.size(); ++r) {
                dist += (a.state[r] - state.xi[r]) * (a.state[r] - state.xi[r]);
            }
            return std::sqrt(dist) <= merge_tol;
        });
        if (match == found.end()) {
            found.push_back({state.xi, 1});
        } else {
            ++match->basin_count;
        }
    }
    std::sort(found.begin(), found.end(),
              [](const Attractor& a, const Attractor& b) { return a.state < b.state; });
    return found;
}

CsvTable census_table(const std::vector<Attractor>& attractors) {
    CsvTable table;
    table.header = {"attractor_id", "basin_count", "norm"};
    for (std::size_t i = 0; i < attractors.size(); ++i) {
        double s = 0.0;
        for (double v : attractors[i].state) s += v * v;
        table.add_row({std::to_string(i), std::to_string(attractors[i].basin_count), format_number(std::sqrt(s))});
    }
    return table;
}

Tensor well_separated_patterns(std::size_t count, std::size_t dim, double radius, Rng& rng) {
    if (count == 0 || count > dim) {
        throw ParameterError("well_separated_patterns: need 1 <= count <= dim");
    }
    const auto axes = rng.permutation(dim);
    Tensor x({dim, count}, 0.0);
    auto v = x.data_mut();
    for (std::size_t j = 0; j < count; ++j) v[axes[j] * count + j] = radius * rng.spin();
    return x;
}

std::vector<QueryState> probes_near_patterns(const ContinuousStore& store, std::size_t count, double noise,
                                             Rng& rng) {
    std::vector<QueryState> probes;
    probes.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        QueryState q{store.column(rng.index(store.count()))};
        for (auto& v : q.xi) v += rng.normal(0.0, noise);
        probes.push_back(std::move(q));
    }
    return probes;
}

}  // namespace damseg::modern
