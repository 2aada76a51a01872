#include "bellkl/bell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bellkl/error.hpp"

namespace bellkl {

BellFunctional cglmp_functional(int d) {
    if (d < 2) {
        throw Error(ErrorCode::invalid_dimension, "CGLMP functional needs d >= 2");
    }
    BellFunctional f;
    f.num_settings = 2;
    f.num_outcomes = d;
    f.coeffs.assign(static_cast<std::size_t>(4 * d * d), 0.0);
    f.bound = d - 1;
    f.direction = BoundDirection::lower;
    const auto mod = [d](int x) { return ((x % d) + d) % d; };
    const auto set = [&](int ia, int ib, int ja, int jb, int value) {
        f.coeffs[static_cast<std::size_t>(((ia * 2 + ib) * d + ja) * d + jb)] = value;
    };
    constexpr int a1 = 1, a2 = 0, b1 = 1, b2 = 0;
    for (int ja = 0; ja < d; ++ja) {
        for (int jb = 0; jb < d; ++jb) {
            set(a1, b1, ja, jb, mod(ja - jb));
            set(a2, b1, ja, jb, mod(jb - ja));
            set(a2, b2, ja, jb, mod(ja - jb));
            set(a1, b2, ja, jb, mod(jb - ja - 1));
        }
    }
    return f;
}

double local_bound(const BellFunctional &f, std::uint64_t cap) {
    const VertexSpace space(f.num_settings, f.num_outcomes, cap);
    const int m = f.num_settings;
    const bool minimize = f.direction == BoundDirection::lower;
    double best = minimize ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    space.for_each([&](std::uint64_t, std::span<const int> digits) {
        double value = 0.0;
        for (int ia = 0; ia < m; ++ia) {
            for (int ib = 0; ib < m; ++ib) {
                value += f.coefficient(ia, ib, digits[static_cast<std::size_t>(ia)],
                                       digits[static_cast<std::size_t>(m + ib)]);
            }
        }
        best = minimize ? std::min(best, value) : std::max(best, value);
    });
    return best;
}

double functional_value(const BellFunctional &f, const Behavior &behavior) {
    if (behavior.num_settings() != f.num_settings || behavior.num_outcomes() != f.num_outcomes) {
        throw Error(ErrorCode::shape_error, "functional and behavior disagree on shape");
    }
    const int m = f.num_settings;
    const int n = f.num_outcomes;
    double value = 0.0;
    for (int ia = 0; ia < m; ++ia) {
        for (int ib = 0; ib < m; ++ib) {
            for (int ja = 0; ja < n; ++ja) {
                for (int jb = 0; jb < n; ++jb) {
                    value += f.coefficient(ia, ib, ja, jb) * behavior.conditional(ia, ib, ja, jb);
                }
            }
        }
    }
    return value;
}

double quantum_value(const BellFunctional &f, const PureState &state, const MeasurementSettings &alice,
                     const MeasurementSettings &bob) {
    if (alice.num_settings() != f.num_settings || bob.num_settings() != f.num_settings ||
        state.dim() != f.num_outcomes) {
        throw Error(ErrorCode::shape_error, "functional, state and measurements disagree on shape");
    }
    const auto settings = SettingsDistribution::uniform(f.num_settings);
    return functional_value(f, quantum_behavior(state, alice, bob, settings));
}

double BellOperator::hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

double BellOperator::expectation(const PureState &state) const {
    if (state.dim() != local_dim) {
        throw Error(ErrorCode::shape_error, "state dimension does not match operator");
    }
    return state.amplitudes().dot(matrix * state.amplitudes()).real();
}

ProjectorSum::ProjectorSum(std::span<const double> weights, const MeasurementSettings &alice,
                           const MeasurementSettings &bob, const SettingsDistribution &settings)
    : d_(alice.dim()), m_(alice.num_settings()) {
    if (bob.dim() != d_ || bob.num_settings() != m_ || settings.num_settings() != m_) {
        throw Error(ErrorCode::shape_error, "measurements and settings disagree on shape");
    }
    if (weights.size() != static_cast<std::size_t>(m_ * m_ * d_ * d_)) {
        throw Error(ErrorCode::shape_error, "operator weights must be indexed like a behavior");
    }
    for (int a = 0; a < m_; ++a) {
        alice_rows_.push_back(alice.basis(a).adjoint());
        bob_rows_.push_back(bob.basis(a).adjoint());
    }
    for (int ia = 0; ia < m_; ++ia) {
        for (int ib = 0; ib < m_; ++ib) {
            Eigen::MatrixXd w(d_, d_);
            for (int ja = 0; ja < d_; ++ja) {
                for (int jb = 0; jb < d_; ++jb) {
                    w(ja, jb) = weights[static_cast<std::size_t>(((ia * m_ + ib) * d_ + ja) * d_ + jb)] * settings(ia, ib);
                }
            }
            pair_weights_.push_back(std::move(w));
        }
    }
}

void ProjectorSum::apply(const Eigen::VectorXcd &x, Eigen::VectorXcd &y) const {
    // (U (x) V) vec(X) = vec(U X V^T) for row-major vec
    using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMajor> xm(x.data(), d_, d_);
    RowMajor acc = RowMajor::Zero(d_, d_);
    for (int ia = 0; ia < m_; ++ia) {
        const Eigen::MatrixXcd left = alice_rows_[static_cast<std::size_t>(ia)] * xm;
        for (int ib = 0; ib < m_; ++ib) {
            const auto &u = alice_rows_[static_cast<std::size_t>(ia)];
            const auto &v = bob_rows_[static_cast<std::size_t>(ib)];
            Eigen::MatrixXcd amp = left * v.transpose();
            amp.array() *= pair_weights_[static_cast<std::size_t>(ia * m_ + ib)].array().cast<Complex>();
            acc += u.adjoint() * amp * v.conjugate();
        }
    }
    y.resize(x.size());
    Eigen::Map<RowMajor>(y.data(), d_, d_) = acc;
}

double ProjectorSum::norm_bound() const {
    double bound = 0.0;
    for (const auto &w : pair_weights_) {
        bound += w.cwiseAbs().maxCoeff();
    }
    return bound;
}

BellOperator ProjectorSum::dense() const {
    const Eigen::Index dd = static_cast<Eigen::Index>(d_) * d_;
    BellOperator op{d_, Eigen::MatrixXcd::Zero(dd, dd)};
    const auto kron = [](const Eigen::MatrixXcd &x, const Eigen::MatrixXcd &y) {
        Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
            }
        }
        return out;
    };
    for (int ia = 0; ia < m_; ++ia) {
        for (int ib = 0; ib < m_; ++ib) {
            const Eigen::MatrixXcd k = kron(alice_rows_[static_cast<std::size_t>(ia)], bob_rows_[static_cast<std::size_t>(ib)]);
            const auto &w = pair_weights_[static_cast<std::size_t>(ia * m_ + ib)];
            Eigen::VectorXd diag(dd);
            for (int ja = 0; ja < d_; ++ja) {
                for (int jb = 0; jb < d_; ++jb) {
                    diag(ja * d_ + jb) = w(ja, jb);
                }
            }
            op.matrix.noalias() += k.adjoint() * (diag.asDiagonal() * k);
        }
    }
    // symmetrize away rounding
    op.matrix = (0.5 * (op.matrix + op.matrix.adjoint())).eval();
    return op;
}

BellOperator weighted_projector_operator(std::span<const double> weights, const MeasurementSettings &alice,
                                         const MeasurementSettings &bob, const SettingsDistribution &settings) {
    return ProjectorSum(weights, alice, bob, settings).dense();
}

BellOperator log_ratio_operator(const Behavior &q, const Behavior &p, const MeasurementSettings &alice,
                                const MeasurementSettings &bob) {
    if (q.size() != p.size() || q.num_outcomes() != alice.dim()) {
        throw Error(ErrorCode::shape_error, "behaviors and measurements disagree on shape");
    }
    std::vector<double> weights(q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q.settings().probs()[i / (q.size() / q.settings().probs().size())] <= 0.0) {
            continue;
        }
        if (!(p[i] > 0.0) || !(q[i] > 0.0)) {
            std::ostringstream ss;
            ss << "log ratio undefined at index " << i << " (q=" << q[i] << ", p=" << p[i] << ")";
            throw Error(ErrorCode::singular_ratio, ss.str());
        }
        weights[i] = std::log2(q[i] / p[i]);
    }
    return weighted_projector_operator(weights, alice, bob, q.settings());
}

TopEigenpair top_eigenpair(const BellOperator &op, const EigenOptions &options) {
    const Eigen::Index n = op.matrix.rows();
    if (n != op.matrix.cols() || n != static_cast<Eigen::Index>(op.local_dim) * op.local_dim) {
        throw Error(ErrorCode::shape_error, "operator must be square of size d^2");
    }
    if (op.hermiticity_error() > 1e-10) {
        throw Error(ErrorCode::invalid_parameter, "operator is not Hermitian");
    }
    if (n > options.dense_limit) {
        double shift = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
            shift = std::max(shift, op.matrix.row(r).cwiseAbs().sum());
        }
        return power_top_eigenpair(
            op.local_dim, [&](const Eigen::VectorXcd &x, Eigen::VectorXcd &y) { y.noalias() = op.matrix * x; }, shift,
            options);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.matrix);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::non_convergence, "Hermitian eigensolver failed");
    }
    const double top = solver.eigenvalues()(n - 1);
    Eigen::VectorXcd v = solver.eigenvectors().col(n - 1);
    v.normalize();
    const double residual = (op.matrix * v - top * v).norm();
    const bool degenerate = n > 1 && top - solver.eigenvalues()(n - 2) < options.degeneracy_gap;
    return TopEigenpair{PureState::from_amplitudes(op.local_dim, std::move(v)), top, residual, degenerate, 1};
}

TopEigenpair power_top_eigenpair(int local_dim,
                                 const std::function<void(const Eigen::VectorXcd &, Eigen::VectorXcd &)> &apply,
                                 double shift, const EigenOptions &options) {
    const Eigen::Index n = static_cast<Eigen::Index>(local_dim) * local_dim;
    std::mt19937_64 gen(0x5eed);
    std::normal_distribution<double> normal;
    Eigen::VectorXcd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = Complex(normal(gen), normal(gen));
    }
    x.normalize();
    Eigen::VectorXcd mx(n);
    double value = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        apply(x, mx);
        value = x.dot(mx).real();
        residual = (mx - value * x).norm();
        if (residual <= options.residual_tol) {
            return TopEigenpair{PureState::from_amplitudes(local_dim, x), value, residual, false, it + 1};
        }
        x = mx + shift * x;
        x.normalize();
    }
    std::ostringstream ss;
    ss << "power iteration stopped after " << options.max_iterations << " iterations with residual " << residual;
    throw Error(ErrorCode::non_convergence, ss.str());
}

double tilted_b_limit(int d) {
    if (d < 2) {
        throw Error(ErrorCode::invalid_dimension, "tilted ratios need d >= 2");
    }
    // smallest ratio is 1 + b (d - 1) - 4 b (d - 1)
    return 1.0 / (3.0 * (d - 1));
}

std::vector<double> tilted_cglmp_ratios(int d, double b) {
    const double limit = tilted_b_limit(d);
    if (!(b > 0.0) || !(b < limit)) {
        std::ostringstream ss;
        ss << "b must lie in (0, " << limit << ") to keep all ratios positive, got " << b;
        throw Error(ErrorCode::invalid_parameter, ss.str());
    }
    const auto f = cglmp_functional(d);
    const double pm = 0.25;
    const double a = 1.0 + b * (d - 1);
    std::vector<double> ratios(f.coeffs.size());
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        ratios[i] = a - b * f.coeffs[i] / pm;
        if (!(ratios[i] > 0.0)) {
            throw Error(ErrorCode::invalid_parameter, "tilted ratio is not positive");
        }
    }
    return ratios;
}

}  // namespace bellkl
