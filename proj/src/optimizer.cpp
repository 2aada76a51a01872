#include "bellkl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include "bellkl/error.hpp"

namespace bellkl {

const char *to_string(OptimizationMode mode) {
    return mode == OptimizationMode::exact ? "exact" : "conjectured";
}

namespace {

constexpr double golden = 0.6180339887498949;  // (sqrt(5) - 1) / 2

OptimizationReport make_report(int d, OptimizationMode mode, PureState pure, double divergence) {
    auto schmidt = schmidt_decompose(pure).coefficients;
    const double entropy = entropy_of_entanglement(schmidt);
    return OptimizationReport{.dim = d,
                              .mode = mode,
                              .best_pure = std::move(pure),
                              .best_state = std::move(schmidt),
                              .divergence_bits = divergence,
                              .entanglement_bits = entropy};
}

SchmidtState softmax_state(std::span<const double> logits) {
    const std::size_t d = logits.size() + 1;
    std::vector<double> z(d, 0.0);
    std::copy(logits.begin(), logits.end(), z.begin() + 1);
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (auto &v : z) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto &v : z) {
        v = std::sqrt(v / total);
    }
    return SchmidtState::from_coefficients(std::move(z));
}

/// Golden-section search for a maximum of fn on [lo, hi]; returns (x, f(x)).
template <class Fn>
std::pair<double, double> golden_maximize(Fn &&fn, double lo, double hi, double xtol, std::size_t max_steps) {
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (std::size_t step = 0; step < max_steps && hi - lo > xtol; ++step) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = fn(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = fn(x1);
        }
    }
    return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace

StrengthResult cglmp_strength(const SchmidtState &state, const StrengthOptions &options) {
    const int d = state.dim();
    const auto q = quantum_behavior(state, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                                    SettingsDistribution::uniform(2));
    return min_kl_local(q, options);
}

OptimizationReport optimize_state_exact(int d, const MeasurementSettings &alice, const MeasurementSettings &bob,
                                        const SettingsDistribution &settings, const ExactOptions &options) {
    if (d < 2) {
        throw Error(ErrorCode::invalid_dimension, "exact optimization needs d >= 2");
    }
    if (d > options.max_dim) {
        throw Error(ErrorCode::resource_limit, "exact optimization is limited to d <= " +
                                                   std::to_string(options.max_dim) + "; use the conjectured path");
    }
    StrengthOptions inner;
    inner.tol = options.inner_tol;

    double best_gap = 0.0;
    const auto objective = [&](std::span<const double> logits, double *gap = nullptr) {
        try {
            const auto result = min_kl_local(quantum_behavior(softmax_state(logits), alice, bob, settings), inner);
            if (gap != nullptr) {
                *gap = result.certificate_gap;
            }
            return result.divergence_bits;
        } catch (const Error &e) {
            throw Error(e.code(), "optimize_state_exact(d=" + std::to_string(d) + "): " + e.what());
        }
    };

    std::vector<double> x(static_cast<std::size_t>(d - 1), 0.0);
    double fx = objective(x, &best_gap);
    std::vector<TraceEntry> trace{{0, fx, 0.0}};
    double step = 1.0;
    bool converged = false;

    for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        const double start = fx;
        double largest_move = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double origin = x[k];
            const auto along = [&](double t) {
                auto trial = x;
                trial[k] = t;
                return objective(trial);
            };
            // bracket a maximum around the current coordinate
            double lo = origin - step;
            double hi = origin + step;
            const double f_lo = along(lo);
            const double f_hi = along(hi);
            if (f_hi > fx || f_lo > fx) {
                const double dir = f_hi >= f_lo ? 1.0 : -1.0;
                double a = origin;
                double b = origin + dir * step;
                double fb = std::max(f_hi, f_lo);
                double c = b + 2.0 * (b - a);
                for (int expand = 0; expand < 30; ++expand) {
                    const double fc = along(c);
                    if (fc < fb) {
                        break;
                    }
                    a = b;
                    b = c;
                    fb = fc;
                    c = b + 2.0 * (b - a);
                }
                lo = std::min(a, c);
                hi = std::max(a, c);
            }
            const auto [t, ft] = golden_maximize(along, lo, hi, options.coordinate_tol, 200);
            if (ft > fx) {
                largest_move = std::max(largest_move, std::abs(t - origin));
                x[k] = t;
                fx = ft;
            }
        }
        trace.push_back({sweep, fx, largest_move});
        step = std::clamp(4.0 * largest_move, 1e-3, 1.0);
        if (fx - start <= options.outer_tol) {
            converged = true;
            break;
        }
    }

    fx = objective(x, &best_gap);
    const auto state = softmax_state(x);
    auto report = make_report(d, OptimizationMode::exact, PureState::from_schmidt(state), fx);
    report.certificate_gap = best_gap;
    report.consistency_residual = best_gap;
    report.converged = converged;
    report.trace = std::move(trace);
    return report;
}

OptimizationReport seesaw(const PureState &initial, const MeasurementSettings &alice, const MeasurementSettings &bob,
                          const SettingsDistribution &settings, const SeesawOptions &options) {
    StrengthOptions inner;
    inner.tol = options.inner_tol;

    PureState state = initial;
    Behavior q = quantum_behavior(state, alice, bob, settings);
    StrengthResult fit = min_kl_local(q, inner);
    std::vector<TraceEntry> trace{{0, fit.divergence_bits, 0.0}};
    bool converged = false;

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        const Behavior p = Behavior::from_probs(q.num_settings(), q.num_outcomes(), fit.local_probs, q.settings());
        const auto op = log_ratio_operator(q, p, alice, bob);
        const auto top = top_eigenpair(op, options.eigen);
        const Behavior q_next = quantum_behavior(top.vector, alice, bob, settings);
        const StrengthResult fit_next = min_kl_local(q_next, inner);

        const double gain = fit_next.divergence_bits - fit.divergence_bits;
        if (gain < 0.0) {
            // a regression larger than the inner solver's resolution means the
            // update direction is not trustworthy; stop at the best iterate
            converged = -gain <= 10.0 * options.inner_tol;
            break;
        }
        const double overlap = std::abs(state.amplitudes().dot(top.vector.amplitudes()));
        state = top.vector;
        q = q_next;
        fit = fit_next;
        trace.push_back({it, fit.divergence_bits, 1.0 - overlap});
        if (gain < options.tol || 1.0 - overlap < options.tol) {
            converged = true;
            break;
        }
    }

    auto report = make_report(state.dim(), OptimizationMode::exact, state, fit.divergence_bits);
    report.certificate_gap = fit.certificate_gap;
    report.consistency_residual = fit.certificate_gap;
    report.converged = converged;
    report.trace = std::move(trace);
    return report;
}

TiltedEvaluation evaluate_tilted(int d, double b, const EigenOptions &options) {
    const auto ratios = tilted_cglmp_ratios(d, b);
    std::vector<double> weights(ratios.size());
    std::transform(ratios.begin(), ratios.end(), weights.begin(), [](double r) { return std::log2(r); });
    const ProjectorSum op(weights, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                          SettingsDistribution::uniform(2));
    const Eigen::Index size = static_cast<Eigen::Index>(d) * d;
    auto top = size <= options.dense_limit
                   ? top_eigenpair(op.dense(), options)
                   : power_top_eigenpair(
                         d, [&](const Eigen::VectorXcd &x, Eigen::VectorXcd &y) { op.apply(x, y); }, op.norm_bound(),
                         options);
    const double value = top.value;
    return TiltedEvaluation{b, value, std::move(top)};
}

OptimizationReport conjectured_optimum(int d, const ConjecturedOptions &options) {
    if (d < 2) {
        throw Error(ErrorCode::invalid_dimension, "conjectured optimum needs d >= 2");
    }
    if (options.grid_points < 3 || options.refine_rounds < 0 || options.golden_steps_per_round < 1) {
        throw Error(ErrorCode::invalid_parameter, "b scan needs at least 3 grid points");
    }
    const double limit = tilted_b_limit(d);
    const auto value_at = [&](double b) { return evaluate_tilted(d, b, options.eigen).value_bits; };

    const int points = options.grid_points;
    std::vector<double> grid(static_cast<std::size_t>(points));
    std::vector<double> values(grid.size());
    std::size_t best = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = limit * static_cast<double>(k + 1) / static_cast<double>(points + 1);
        values[k] = value_at(grid[k]);
        if (values[k] > values[best]) {
            best = k;
        }
    }
    std::vector<TraceEntry> trace{{0, values[best], grid[best]}};
    double lo = best == 0 ? 0.0 : grid[best - 1];
    double hi = best + 1 == grid.size() ? limit : grid[best + 1];
    // keep the open endpoints strictly inside the admissible range
    const double edge = limit * 1e-12;
    lo = std::max(lo, edge);
    hi = std::min(hi, limit - edge);

    double b_best = grid[best];
    double v_best = values[best];
    for (int round = 1; round <= options.refine_rounds; ++round) {
        const auto [b, v] = golden_maximize(value_at, lo, hi, 0.0, static_cast<std::size_t>(options.golden_steps_per_round));
        if (v > v_best) {
            b_best = b;
            v_best = v;
        }
        // re-centre a bracket of the current golden width on the best point
        const double half = std::max((hi - lo) * std::pow(golden, options.golden_steps_per_round), limit * 1e-14);
        lo = std::max(edge, b_best - half);
        hi = std::min(limit - edge, b_best + half);
        trace.push_back({static_cast<std::size_t>(round), v_best, b_best});
    }

    auto eval = evaluate_tilted(d, b_best, options.eigen);
    if (eval.eigen.degenerate) {
        const double nudged = std::clamp(b_best * (1.0 + 1e-7), edge, limit - edge);
        auto retry = evaluate_tilted(d, nudged, options.eigen);
        if (!retry.eigen.degenerate) {
            eval = std::move(retry);
            b_best = nudged;
        }
    }

    const auto alice = cglmp_measurements(d, Party::alice);
    const auto bob = cglmp_measurements(d, Party::bob);
    const auto settings = SettingsDistribution::uniform(2);
    const Behavior q = quantum_behavior(eval.eigen.vector, alice, bob, settings);
    const auto ratios = tilted_cglmp_ratios(d, b_best);
    double local_mass = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        local_mass += q[i] / ratios[i];
    }

    auto report = make_report(d, OptimizationMode::conjectured, eval.eigen.vector, eval.value_bits);
    report.parameter = b_best;
    report.consistency_residual = std::abs(local_mass - 1.0);
    report.certificate_gap = report.consistency_residual;
    if (d <= options.verify_max_dim) {
        StrengthOptions inner;
        inner.tol = options.inner_tol;
        const auto fit = min_kl_local(q, inner);
        report.consistency_residual += std::abs(fit.divergence_bits - eval.value_bits);
        report.certificate_gap = fit.certificate_gap;
    }
    report.converged = !eval.eigen.degenerate;
    report.trace = std::move(trace);
    return report;
}

UniformSettingsReport verify_uniform_settings(const PureState &state, const MeasurementSettings &alice,
                                              const MeasurementSettings &bob, double tol,
                                              const std::vector<double> &epsilons, const StrengthOptions &inner) {
    const int m = alice.num_settings();
    const auto uniform = SettingsDistribution::uniform(m);
    const auto strength_for = [&](const SettingsDistribution &pm) {
        return min_kl_local(quantum_behavior(state, alice, bob, pm), inner).divergence_bits;
    };
    UniformSettingsReport report;
    report.uniform_bits = strength_for(uniform);
    report.best_perturbed_bits = -std::numeric_limits<double>::infinity();
    const auto cells = static_cast<std::size_t>(m * m);
    for (double eps : epsilons) {
        for (std::size_t k = 0; k < cells; ++k) {
            for (std::size_t l = 0; l < cells; ++l) {
                if (k == l) {
                    continue;
                }
                std::vector<double> probs(uniform.probs().begin(), uniform.probs().end());
                probs[k] += eps;
                probs[l] -= eps;
                if (probs[l] <= 0.0) {
                    continue;
                }
                const double bits = strength_for(SettingsDistribution::from_probs(m, probs));
                if (bits > report.best_perturbed_bits) {
                    report.best_perturbed_bits = bits;
                    report.worst_direction = probs;
                }
                report.samples.push_back({std::move(probs), bits});
            }
        }
    }
    report.uniform_is_local_max = report.best_perturbed_bits <= report.uniform_bits + tol;
    return report;
}

AdditivityReport additivity_comparison(int d_base, int copies, const AdditivityOptions &options) {
    if (copies < 1) {
        throw Error(ErrorCode::invalid_parameter, "copies must be at least 1");
    }
    const auto alice = cglmp_measurements(d_base, Party::alice);
    const auto bob = cglmp_measurements(d_base, Party::bob);
    const auto settings = SettingsDistribution::uniform(2);

    ExactOptions exact;
    exact.inner_tol = options.inner_tol;
    const auto single = optimize_state_exact(d_base, alice, bob, settings, exact);
    // the exact optimizer keeps the state diagonal in the computational basis
    std::vector<double> diagonal(static_cast<std::size_t>(d_base));
    for (int i = 0; i < d_base; ++i) {
        diagonal[static_cast<std::size_t>(i)] = std::abs(single.best_pure.amplitude(i, i));
    }
    const auto basis_state = SchmidtState::from_coefficients(std::move(diagonal));

    AdditivityReport report{.d_base = d_base,
                            .copies = copies,
                            .single_bits = single.divergence_bits,
                            .product_bits = copies * single.divergence_bits,
                            .single_state = single.best_state};

    long long dim = 1;
    for (int c = 0; c < copies; ++c) {
        dim *= d_base;
    }
    report.compare_dim = static_cast<int>(dim);

    // vertex count of the product test: n^(2m) with n = d^k, m = 2^k
    const long long m = 1LL << copies;
    bool feasible = dim <= default_tensor_dim_cap;
    double vertices = std::pow(static_cast<double>(dim), 2.0 * static_cast<double>(m));
    feasible = feasible && vertices <= static_cast<double>(options.verify_vertex_cap);
    if (feasible) {
        const auto product = tensor_copies(basis_state, alice, bob, copies);
        const auto q = quantum_behavior(product.state, product.alice, product.bob,
                                        SettingsDistribution::uniform(product.alice.num_settings()));
        StrengthOptions inner;
        inner.tol = options.inner_tol;
        inner.vertex_cap = options.verify_vertex_cap;
        inner.prune = true;
        const auto fit = min_kl_local(q, inner);
        report.verified_product_bits = fit.divergence_bits;
        report.verified_certificate_gap = fit.certificate_gap;

        const auto q1 = quantum_behavior(basis_state, alice, bob, settings);
        StrengthOptions single_opts;
        single_opts.tol = options.inner_tol;
        const auto fit1 = min_kl_local(q1, single_opts);
        const auto p1 = Behavior::from_probs(q1.num_settings(), q1.num_outcomes(), fit1.local_probs, settings);
        report.product_form_bits = kl_divergence(q, product_behavior(p1, copies));
    }

    if (options.compare_conjectured) {
        ConjecturedOptions conj;
        conj.verify_max_dim = 0;
        const auto big = conjectured_optimum(report.compare_dim, conj);
        report.compare_bits = big.divergence_bits;
        report.compare_entanglement_bits = big.entanglement_bits;
        report.compare_residual = big.consistency_residual;
        report.product_wins = report.product_bits > *report.compare_bits;
    }
    return report;
}

std::vector<SweepRow> figure1_sweep(int d_min, int d_max, SweepMode mode, const SweepOptions &options) {
    if (d_min < 2 || d_max < d_min) {
        throw Error(ErrorCode::invalid_parameter, "sweep needs 2 <= d_min <= d_max");
    }
    const auto run_one = [&](int d) {
        SweepRow row;
        row.d = d;
        const bool use_exact =
            mode == SweepMode::exact || (mode == SweepMode::automatic && d <= options.exact_max_dim);
        row.mode = use_exact ? OptimizationMode::exact : OptimizationMode::conjectured;
        try {
            OptimizationReport report = [&] {
                if (use_exact) {
                    ExactOptions exact;
                    exact.inner_tol = options.inner_tol;
                    exact.max_dim = options.exact_max_dim;
                    return optimize_state_exact(d, cglmp_measurements(d, Party::alice),
                                                cglmp_measurements(d, Party::bob), SettingsDistribution::uniform(2),
                                                exact);
                }
                ConjecturedOptions conj;
                conj.inner_tol = options.inner_tol;
                conj.verify_max_dim = options.exact_max_dim;
                return conjectured_optimum(d, conj);
            }();
            row.divergence_bits = report.divergence_bits;
            row.entanglement_bits = report.entanglement_bits;
            row.certificate_gap = use_exact ? report.certificate_gap : report.consistency_residual;
            row.schmidt.assign(report.best_state.coefficients().begin(), report.best_state.coefficients().end());
            row.ok = report.converged;
            if (!row.ok) {
                row.error = "optimizer did not converge";
            }
        } catch (const std::exception &e) {
            row.ok = false;
            row.error = e.what();
        }
        return row;
    };

    std::vector<SweepRow> rows;
    if (options.parallel) {
        std::vector<std::future<SweepRow>> jobs;
        for (int d = d_min; d <= d_max; ++d) {
            jobs.push_back(std::async(std::launch::async, run_one, d));
        }
        for (auto &job : jobs) {
            rows.push_back(job.get());
        }
    } else {
        for (int d = d_min; d <= d_max; ++d) {
            rows.push_back(run_one(d));
        }
    }
    return rows;
}

}  // namespace bellkl
