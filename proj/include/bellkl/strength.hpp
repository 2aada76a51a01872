#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "bellkl/error.hpp"
#include "bellkl/local.hpp"
#include "bellkl/quantum.hpp"

namespace bellkl {

/// Sum_i q_i log2(q_i / p_i) with 0 log 0 = 0. Returns +infinity when q puts
/// mass where p has none.
double kl_divergence(std::span<const double> q, std::span<const double> p);
double kl_divergence(const Behavior &q, const Behavior &p);

struct EmStep {
    std::size_t iteration;
    double divergence_bits;
    double certificate_gap;
    std::size_t active_vertices;
};

struct StrengthOptions {
    double tol = 1e-9;
    std::size_t max_iterations = 1'000'000;
    std::uint64_t vertex_cap = default_vertex_cap;
    // Drop weights below prune_threshold every prune_interval iterations. The
    // returned certificate is always evaluated over the full vertex set.
    bool prune = false;
    double prune_threshold = 1e-15;
    std::size_t prune_interval = 50;
    std::function<void(const EmStep &)> observer;
};

struct StrengthResult {
    double divergence_bits = 0.0;
    LocalModel local_model;
    std::vector<double> local_probs;  // best-fit local behavior, same indexing as q
    double certificate_gap = 0.0;
    std::size_t iterations = 0;
};

class NonConvergenceError : public Error {
   public:
    NonConvergenceError(const std::string &message, StrengthResult best)
        : Error(ErrorCode::non_convergence, message), best_(std::move(best)) {}
    const StrengthResult &best_iterate() const noexcept { return best_; }

   private:
    StrengthResult best_;
};

/// Minimizes D(q || p) over local behaviors sharing q's settings distribution
/// with multiplicative EM updates on the vertex weights, starting from the
/// uniform mixture. Stops once max_vertex score - 1 <= tol.
StrengthResult min_kl_local(const Behavior &q, const StrengthOptions &options = {});

/// max over vertices of sum_i q_i V_i / p_i, where V is the vertex behavior
/// under q's settings distribution. A value <= 1 + tol certifies that p is the
/// closest local behavior to q.
double kkt_certificate(const Behavior &q, std::span<const double> p, const VertexSpace &space);
double kkt_certificate(const Behavior &q, const Behavior &p, const VertexSpace &space);

}  // namespace bellkl
