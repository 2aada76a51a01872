#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bellkl/quantum.hpp"

namespace bellkl {

inline constexpr std::uint64_t default_vertex_cap = 10'000'000;

/// One vertex of the local polytope: each party answers setting i with a
/// fixed outcome.
struct DeterministicStrategy {
    int num_outcomes = 0;
    std::vector<int> alice;
    std::vector<int> bob;

    friend bool operator==(const DeterministicStrategy &, const DeterministicStrategy &) = default;
};

/// Indexing of all n^(2m) deterministic strategies. Index digits are base n,
/// Alice's outcomes first with setting 0 least significant, then Bob's.
class VertexSpace {
   public:
    VertexSpace(int m, int n, std::uint64_t cap = default_vertex_cap);

    int num_settings() const noexcept { return m_; }
    int num_outcomes() const noexcept { return n_; }
    std::uint64_t size() const noexcept { return size_; }

    DeterministicStrategy vertex(std::uint64_t index) const;
    std::uint64_t index_of(const DeterministicStrategy &strategy) const;

    /// Calls fn(index, outcome digits) for every vertex in canonical order.
    /// digits[0..m) are Alice's answers, digits[m..2m) Bob's.
    template <class Fn>
    void for_each(Fn &&fn) const {
        std::vector<int> digits(static_cast<std::size_t>(2 * m_), 0);
        for (std::uint64_t idx = 0; idx < size_; ++idx) {
            fn(idx, std::span<const int>(digits));
            for (auto &digit : digits) {
                if (++digit < n_) {
                    break;
                }
                digit = 0;
            }
        }
    }

   private:
    int m_;
    int n_;
    std::uint64_t size_;
};

std::vector<DeterministicStrategy> enumerate_vertices(int m, int n, std::uint64_t cap = default_vertex_cap);

Behavior vertex_behavior(const DeterministicStrategy &vertex, const SettingsDistribution &settings);

struct VertexWeight {
    std::uint64_t index;
    double weight;
};

/// Convex mixture of deterministic strategies, stored sparsely by vertex index.
struct LocalModel {
    int num_settings = 0;
    int num_outcomes = 0;
    std::vector<VertexWeight> support;

    /// Throws invalid-parameter unless weights are nonnegative and sum to 1.
    void validate(double tol = 1e-12) const;
};

Behavior model_behavior(const LocalModel &model, const SettingsDistribution &settings);
Behavior model_behavior(std::span<const double> weights, std::span<const DeterministicStrategy> vertices,
                        const SettingsDistribution &settings);

}  // namespace bellkl
