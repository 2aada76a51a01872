#include "bellkl/strength.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace bellkl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct Layout {
    int m;
    int n;
    std::vector<std::size_t> pair_base;
    std::vector<double> pm;

    Layout(const SettingsDistribution &settings, int outcomes) : m(settings.num_settings()), n(outcomes) {
        const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
        for (int ia = 0; ia < m; ++ia) {
            for (int ib = 0; ib < m; ++ib) {
                pair_base.push_back(static_cast<std::size_t>(ia * m + ib) * nn);
                pm.push_back(settings(ia, ib));
            }
        }
    }

    std::size_t flat(int ia, int ib, std::span<const int> digits) const {
        return pair_base[static_cast<std::size_t>(ia * m + ib)] +
               static_cast<std::size_t>(digits[static_cast<std::size_t>(ia)] * n +
                                        digits[static_cast<std::size_t>(m + ib)]);
    }

    double score(std::span<const int> digits, const std::vector<double> &ratio) const {
        double s = 0.0;
        for (int ia = 0; ia < m; ++ia) {
            for (int ib = 0; ib < m; ++ib) {
                s += ratio[flat(ia, ib, digits)];
            }
        }
        return s;
    }

    void add(std::span<const int> digits, double weight, std::vector<double> &probs) const {
        for (int ia = 0; ia < m; ++ia) {
            for (int ib = 0; ib < m; ++ib) {
                probs[flat(ia, ib, digits)] += weight * pm[static_cast<std::size_t>(ia * m + ib)];
            }
        }
    }
};

void decode(std::uint64_t index, int n, std::vector<int> &digits) {
    for (auto &digit : digits) {
        digit = static_cast<int>(index % static_cast<std::uint64_t>(n));
        index /= static_cast<std::uint64_t>(n);
    }
}

/// Visits every vertex, or only those in `active` when it is non-null.
template <class Body>
void visit(const VertexSpace &space, const std::vector<std::uint64_t> *active, Body &&body) {
    if (active == nullptr) {
        space.for_each(body);
        return;
    }
    std::vector<int> digits(static_cast<std::size_t>(2 * space.num_settings()));
    for (std::uint64_t idx : *active) {
        decode(idx, space.num_outcomes(), digits);
        body(idx, std::span<const int>(digits));
    }
}

/// p_M(i) q_i / p_i; the vertex score is the sum of this over the vertex's
/// m^2 nonzero cells.
std::vector<double> weighted_ratio(const Behavior &q, std::span<const double> p, const Layout &layout) {
    const auto nn = static_cast<std::size_t>(layout.n) * static_cast<std::size_t>(layout.n);
    std::vector<double> ratio(q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) {
            continue;
        }
        ratio[i] = p[i] > 0.0 ? layout.pm[i / nn] * q[i] / p[i] : inf;
    }
    return ratio;
}

double max_score(const VertexSpace &space, const Layout &layout, const std::vector<double> &ratio) {
    double best = -inf;
    space.for_each([&](std::uint64_t, std::span<const int> digits) { best = std::max(best, layout.score(digits, ratio)); });
    return best;
}

StrengthResult package(const Behavior &q, const std::vector<double> &weights, const std::vector<double> &probs,
                       double gap, std::size_t iterations) {
    StrengthResult out;
    out.divergence_bits = std::max(0.0, kl_divergence(q.probs(), probs));
    out.local_probs = probs;
    out.certificate_gap = gap;
    out.iterations = iterations;
    out.local_model.num_settings = q.num_settings();
    out.local_model.num_outcomes = q.num_outcomes();
    double kept = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] > 1e-15) {
            out.local_model.support.push_back({k, weights[k]});
            kept += weights[k];
        }
    }
    for (auto &entry : out.local_model.support) {
        entry.weight /= kept;
    }
    return out;
}

}  // namespace

double kl_divergence(std::span<const double> q, std::span<const double> p) {
    if (q.size() != p.size()) {
        throw Error(ErrorCode::shape_error, "KL divergence needs vectors of equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) {
            continue;
        }
        if (p[i] <= 0.0) {
            return inf;
        }
        total += q[i] * std::log2(q[i] / p[i]);
    }
    return total;
}

double kl_divergence(const Behavior &q, const Behavior &p) {
    if (q.num_settings() != p.num_settings() || q.num_outcomes() != p.num_outcomes()) {
        throw Error(ErrorCode::shape_error, "behaviors have different index sets");
    }
    return kl_divergence(q.probs(), p.probs());
}

double kkt_certificate(const Behavior &q, std::span<const double> p, const VertexSpace &space) {
    if (p.size() != q.size() || space.num_settings() != q.num_settings() ||
        space.num_outcomes() != q.num_outcomes()) {
        throw Error(ErrorCode::shape_error, "certificate inputs disagree on shape");
    }
    const Layout layout(q.settings(), q.num_outcomes());
    return max_score(space, layout, weighted_ratio(q, p, layout));
}

double kkt_certificate(const Behavior &q, const Behavior &p, const VertexSpace &space) {
    return kkt_certificate(q, p.probs(), space);
}

StrengthResult min_kl_local(const Behavior &q, const StrengthOptions &options) {
    if (!(options.tol > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "tolerance must be positive");
    }
    const VertexSpace space(q.num_settings(), q.num_outcomes(), options.vertex_cap);
    const Layout layout(q.settings(), q.num_outcomes());
    const auto count = static_cast<std::size_t>(space.size());

    std::vector<double> weights(count, 1.0 / static_cast<double>(count));
    std::vector<double> probs(q.size(), 0.0);
    space.for_each([&](std::uint64_t idx, std::span<const int> digits) { layout.add(digits, weights[idx], probs); });

    std::vector<std::uint64_t> active_list;
    const std::vector<std::uint64_t> *active = nullptr;
    if (options.prune) {
        active_list.resize(count);
        std::iota(active_list.begin(), active_list.end(), std::uint64_t{0});
        active = &active_list;
    }

    std::vector<double> next_weights(count, 0.0);
    std::vector<double> next_probs(q.size(), 0.0);
    for (std::size_t it = 0;; ++it) {
        const auto ratio = weighted_ratio(q, probs, layout);
        double best = -inf;
        std::fill(next_probs.begin(), next_probs.end(), 0.0);
        visit(space, active, [&](std::uint64_t idx, std::span<const int> digits) {
            const double s = layout.score(digits, ratio);
            best = std::max(best, s);
            next_weights[idx] = weights[idx] * s;
            layout.add(digits, next_weights[idx], next_probs);
        });
        double gap = best - 1.0;

        if (options.observer) {
            options.observer(EmStep{it, kl_divergence(q.probs(), probs), gap,
                                    active != nullptr ? active->size() : count});
        }

        if (gap <= options.tol && active != nullptr) {
            // Certificate over the pruned support only; recheck everything and
            // re-seed any vertex that still scores above 1.
            std::vector<std::uint64_t> violators;
            gap = -inf;
            space.for_each([&](std::uint64_t idx, std::span<const int> digits) {
                const double s = layout.score(digits, ratio);
                gap = std::max(gap, s - 1.0);
                if (s - 1.0 > options.tol && weights[idx] == 0.0) {
                    violators.push_back(idx);
                }
            });
            if (!violators.empty()) {
                const double eps = 1e-6;
                for (auto &w : weights) {
                    w *= 1.0 - eps;
                }
                for (std::uint64_t idx : violators) {
                    weights[idx] += eps / static_cast<double>(violators.size());
                    active_list.push_back(idx);
                }
                std::sort(active_list.begin(), active_list.end());
                std::fill(probs.begin(), probs.end(), 0.0);
                visit(space, active, [&](std::uint64_t idx, std::span<const int> digits) {
                    layout.add(digits, weights[idx], probs);
                });
                continue;
            }
        }
        if (gap <= options.tol) {
            return package(q, weights, probs, gap, it);
        }
        if (it + 1 >= options.max_iterations) {
            std::ostringstream ss;
            ss << "EM did not reach certificate gap " << options.tol << " within " << options.max_iterations
               << " iterations (gap " << gap << ")";
            throw NonConvergenceError(ss.str(), package(q, weights, probs, gap, it));
        }

        // sum_k w_k s_k = sum_i q_i = 1 up to rounding; renormalize anyway
        double total = 0.0;
        visit(space, active, [&](std::uint64_t idx, std::span<const int>) { total += next_weights[idx]; });
        visit(space, active, [&](std::uint64_t idx, std::span<const int>) { weights[idx] = next_weights[idx] / total; });
        for (std::size_t i = 0; i < probs.size(); ++i) {
            probs[i] = next_probs[i] / total;
        }

        if (active != nullptr && (it + 1) % options.prune_interval == 0) {
            std::vector<std::uint64_t> kept;
            double mass = 0.0;
            for (std::uint64_t idx : active_list) {
                if (weights[idx] >= options.prune_threshold) {
                    kept.push_back(idx);
                    mass += weights[idx];
                } else {
                    weights[idx] = 0.0;
                }
            }
            if (kept.size() != active_list.size()) {
                active_list = std::move(kept);
                for (std::uint64_t idx : active_list) {
                    weights[idx] /= mass;
                }
                std::fill(probs.begin(), probs.end(), 0.0);
                visit(space, active, [&](std::uint64_t idx, std::span<const int> digits) {
                    layout.add(digits, weights[idx], probs);
                });
            }
        }
    }
}

}  // namespace bellkl
