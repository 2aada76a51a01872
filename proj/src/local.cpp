#include "bellkl/local.hpp"

#include <cmath>
#include <limits>

#include "bellkl/error.hpp"

namespace bellkl {

VertexSpace::VertexSpace(int m, int n, std::uint64_t cap) : m_(m), n_(n), size_(1) {
    if (m < 1 || n < 1) {
        throw Error(ErrorCode::shape_error, "vertex space needs positive m and n");
    }
    for (int k = 0; k < 2 * m; ++k) {
        if (size_ > cap / static_cast<std::uint64_t>(n)) {
            throw Error(ErrorCode::resource_limit,
                        "n^(2m) local vertices exceed the cap of " + std::to_string(cap) +
                            "; use the conjectured large-d path");
        }
        size_ *= static_cast<std::uint64_t>(n);
    }
}

DeterministicStrategy VertexSpace::vertex(std::uint64_t index) const {
    if (index >= size_) {
        throw Error(ErrorCode::shape_error, "vertex index out of range");
    }
    DeterministicStrategy v{n_, std::vector<int>(static_cast<std::size_t>(m_)),
                            std::vector<int>(static_cast<std::size_t>(m_))};
    for (int i = 0; i < m_; ++i) {
        v.alice[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::uint64_t>(n_));
        index /= static_cast<std::uint64_t>(n_);
    }
    for (int i = 0; i < m_; ++i) {
        v.bob[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::uint64_t>(n_));
        index /= static_cast<std::uint64_t>(n_);
    }
    return v;
}

std::uint64_t VertexSpace::index_of(const DeterministicStrategy &strategy) const {
    if (strategy.num_outcomes != n_ || strategy.alice.size() != static_cast<std::size_t>(m_) ||
        strategy.bob.size() != static_cast<std::size_t>(m_)) {
        throw Error(ErrorCode::shape_error, "strategy does not belong to this vertex space");
    }
    std::uint64_t index = 0;
    for (int i = m_ - 1; i >= 0; --i) {
        index = index * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(strategy.bob[static_cast<std::size_t>(i)]);
    }
    for (int i = m_ - 1; i >= 0; --i) {
        index = index * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(strategy.alice[static_cast<std::size_t>(i)]);
    }
    return index;
}

std::vector<DeterministicStrategy> enumerate_vertices(int m, int n, std::uint64_t cap) {
    const VertexSpace space(m, n, cap);
    std::vector<DeterministicStrategy> out;
    out.reserve(space.size());
    space.for_each([&](std::uint64_t, std::span<const int> digits) {
        out.push_back(DeterministicStrategy{n, std::vector<int>(digits.begin(), digits.begin() + m),
                                            std::vector<int>(digits.begin() + m, digits.end())});
    });
    return out;
}

namespace {

void check_strategy(const DeterministicStrategy &v, int m) {
    if (v.alice.size() != static_cast<std::size_t>(m) || v.bob.size() != static_cast<std::size_t>(m)) {
        throw Error(ErrorCode::shape_error, "strategy and settings distribution disagree on m");
    }
    for (int j : v.alice) {
        if (j < 0 || j >= v.num_outcomes) throw Error(ErrorCode::shape_error, "outcome out of range");
    }
    for (int j : v.bob) {
        if (j < 0 || j >= v.num_outcomes) throw Error(ErrorCode::shape_error, "outcome out of range");
    }
}

void accumulate(std::vector<double> &probs, const DeterministicStrategy &v, const SettingsDistribution &settings,
                double weight) {
    const int m = settings.num_settings();
    const int n = v.num_outcomes;
    for (int ia = 0; ia < m; ++ia) {
        for (int ib = 0; ib < m; ++ib) {
            const auto idx = static_cast<std::size_t>(((ia * m + ib) * n + v.alice[static_cast<std::size_t>(ia)]) * n +
                                                      v.bob[static_cast<std::size_t>(ib)]);
            probs[idx] += weight * settings(ia, ib);
        }
    }
}

}  // namespace

Behavior vertex_behavior(const DeterministicStrategy &vertex, const SettingsDistribution &settings) {
    const int m = settings.num_settings();
    check_strategy(vertex, m);
    const int n = vertex.num_outcomes;
    std::vector<double> probs(static_cast<std::size_t>(m * m * n * n), 0.0);
    accumulate(probs, vertex, settings, 1.0);
    return Behavior::from_probs(m, n, std::move(probs), settings);
}

void LocalModel::validate(double tol) const {
    double total = 0.0;
    for (const auto &entry : support) {
        if (!(entry.weight >= 0.0)) {
            throw Error(ErrorCode::invalid_parameter, "local model weights must be nonnegative");
        }
        total += entry.weight;
    }
    if (std::abs(total - 1.0) > tol) {
        throw Error(ErrorCode::invalid_parameter, "local model weights must sum to 1");
    }
}

Behavior model_behavior(const LocalModel &model, const SettingsDistribution &settings) {
    model.validate();
    const int m = settings.num_settings();
    if (m != model.num_settings) {
        throw Error(ErrorCode::shape_error, "local model and settings distribution disagree on m");
    }
    const VertexSpace space(m, model.num_outcomes, std::numeric_limits<std::uint64_t>::max());
    const int n = model.num_outcomes;
    std::vector<double> probs(static_cast<std::size_t>(m * m * n * n), 0.0);
    for (const auto &entry : model.support) {
        accumulate(probs, space.vertex(entry.index), settings, entry.weight);
    }
    return Behavior::from_probs(m, n, std::move(probs), settings);
}

Behavior model_behavior(std::span<const double> weights, std::span<const DeterministicStrategy> vertices,
                        const SettingsDistribution &settings) {
    if (weights.size() != vertices.size() || vertices.empty()) {
        throw Error(ErrorCode::shape_error, "weights and vertex list must be aligned and nonempty");
    }
    const int m = settings.num_settings();
    const int n = vertices.front().num_outcomes;
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Error(ErrorCode::invalid_parameter, "local model weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::invalid_parameter, "local model weights must sum to 1");
    }
    std::vector<double> probs(static_cast<std::size_t>(m * m * n * n), 0.0);
    for (std::size_t k = 0; k < vertices.size(); ++k) {
        check_strategy(vertices[k], m);
        if (vertices[k].num_outcomes != n) {
            throw Error(ErrorCode::shape_error, "vertices disagree on the number of outcomes");
        }
        accumulate(probs, vertices[k], settings, weights[k]);
    }
    return Behavior::from_probs(m, n, std::move(probs), settings);
}

}  // namespace bellkl
