#include "bellkl/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bellkl/error.hpp"

namespace bellkl {

namespace {

void require_dim(int d) {
    if (d < 2) {
        throw Error(ErrorCode::invalid_dimension, "dimension must be at least 2, got " + std::to_string(d));
    }
}

Eigen::MatrixXcd fourier_matrix(int d) {
    Eigen::MatrixXcd f(d, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            // reduce j*k mod d before scaling to keep the phase exact for large d
            const double angle = 2.0 * std::numbers::pi * static_cast<double>((j * k) % d) / d;
            f(j, k) = std::polar(scale, angle);
        }
    }
    return f;
}

}  // namespace

SchmidtState SchmidtState::from_coefficients(std::vector<double> coeffs) {
    require_dim(static_cast<int>(coeffs.size()));
    double norm2 = 0.0;
    for (double c : coeffs) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw Error(ErrorCode::invalid_coefficient, "Schmidt coefficients must be finite and nonnegative");
        }
        norm2 += c * c;
    }
    if (std::abs(norm2 - 1.0) > schmidt_norm_tol) {
        std::ostringstream ss;
        ss << "squared Schmidt coefficients sum to " << norm2 << ", expected 1";
        throw Error(ErrorCode::invalid_coefficient, ss.str());
    }
    return SchmidtState(std::move(coeffs));
}

std::vector<double> SchmidtState::squared() const {
    std::vector<double> out(coeffs_.size());
    std::transform(coeffs_.begin(), coeffs_.end(), out.begin(), [](double c) { return c * c; });
    return out;
}

SchmidtState SchmidtState::sorted_descending() const {
    auto sorted = coeffs_;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return SchmidtState(std::move(sorted));
}

PureState PureState::from_amplitudes(int dim, Eigen::VectorXcd amplitudes) {
    require_dim(dim);
    if (amplitudes.size() != static_cast<Eigen::Index>(dim) * dim) {
        throw Error(ErrorCode::shape_error, "amplitude vector must have length d^2");
    }
    const double norm = amplitudes.norm();
    if (std::abs(norm - 1.0) > schmidt_norm_tol) {
        std::ostringstream ss;
        ss << "state norm is " << norm << ", expected 1";
        throw Error(ErrorCode::invalid_state, ss.str());
    }
    return PureState(dim, std::move(amplitudes));
}

PureState PureState::from_schmidt(const SchmidtState &state) {
    const int d = state.dim();
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) {
        amps(i * d + i) = state.coefficient(i);
    }
    return PureState(d, std::move(amps));
}

Eigen::MatrixXcd PureState::amplitude_matrix() const {
    Eigen::MatrixXcd m(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            m(i, j) = amps_(i * dim_ + j);
        }
    }
    return m;
}

PureState PureState::with_global_phase(double phase) const {
    return PureState(dim_, amps_ * std::polar(1.0, phase));
}

MeasurementSettings MeasurementSettings::from_bases(int dim, std::vector<Eigen::MatrixXcd> bases) {
    require_dim(dim);
    if (bases.empty()) {
        throw Error(ErrorCode::shape_error, "at least one measurement setting is required");
    }
    for (std::size_t a = 0; a < bases.size(); ++a) {
        const auto &u = bases[a];
        if (u.rows() != dim || u.cols() != dim) {
            throw Error(ErrorCode::shape_error, "measurement basis " + std::to_string(a) + " is not d x d");
        }
        const double err = (u.adjoint() * u - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
        if (err > unitarity_tol) {
            std::ostringstream ss;
            ss << "measurement basis " << a << " is not unitary (error " << err << ")";
            throw Error(ErrorCode::shape_error, ss.str());
        }
    }
    return MeasurementSettings(dim, std::move(bases));
}

SettingsDistribution SettingsDistribution::uniform(int m) {
    if (m < 1) {
        throw Error(ErrorCode::shape_error, "number of settings must be positive");
    }
    const auto cells = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    return SettingsDistribution(m, std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
}

SettingsDistribution SettingsDistribution::from_probs(int m, std::vector<double> probs) {
    if (m < 1 || probs.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m)) {
        throw Error(ErrorCode::shape_error, "settings distribution must have m^2 entries");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::invalid_parameter, "settings probabilities must be nonnegative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::invalid_parameter, "settings probabilities must sum to 1");
    }
    return SettingsDistribution(m, std::move(probs));
}

Behavior Behavior::from_probs(int m, int n, std::vector<double> probs, SettingsDistribution settings, double tol) {
    if (m < 1 || n < 1) {
        throw Error(ErrorCode::shape_error, "behavior needs positive m and n");
    }
    const auto mm = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (probs.size() != mm * nn) {
        throw Error(ErrorCode::shape_error, "behavior must have m^2 n^2 entries");
    }
    if (settings.num_settings() != m) {
        throw Error(ErrorCode::shape_error, "settings distribution does not match m");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw Error(ErrorCode::invalid_parameter, "behavior entries must be finite and nonnegative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > tol) {
        std::ostringstream ss;
        ss << "behavior sums to " << total << ", expected 1";
        throw Error(ErrorCode::invalid_parameter, ss.str());
    }
    for (std::size_t s = 0; s < mm; ++s) {
        double block = 0.0;
        for (std::size_t o = 0; o < nn; ++o) {
            block += probs[s * nn + o];
        }
        if (std::abs(block - settings.probs()[s]) > tol) {
            throw Error(ErrorCode::invalid_parameter, "behavior block does not match settings marginal");
        }
    }
    return Behavior(m, n, std::move(probs), std::move(settings));
}

double Behavior::conditional(int ia, int ib, int ja, int jb) const {
    const double pm = settings_(ia, ib);
    return pm > 0.0 ? at(ia, ib, ja, jb) / pm : 0.0;
}

double no_signaling_violation(const Behavior &behavior) {
    const int m = behavior.num_settings();
    const int n = behavior.num_outcomes();
    double worst = 0.0;
    // Alice's marginal for setting ia must not depend on ib, and vice versa.
    for (int fixed = 0; fixed < m; ++fixed) {
        for (int party = 0; party < 2; ++party) {
            std::vector<double> reference;
            for (int other = 0; other < m; ++other) {
                const int ia = party == 0 ? fixed : other;
                const int ib = party == 0 ? other : fixed;
                if (behavior.settings()(ia, ib) <= 0.0) {
                    continue;
                }
                std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
                for (int ja = 0; ja < n; ++ja) {
                    for (int jb = 0; jb < n; ++jb) {
                        marginal[static_cast<std::size_t>(party == 0 ? ja : jb)] +=
                            behavior.conditional(ia, ib, ja, jb);
                    }
                }
                if (reference.empty()) {
                    reference = std::move(marginal);
                    continue;
                }
                for (int j = 0; j < n; ++j) {
                    worst = std::max(worst, std::abs(marginal[static_cast<std::size_t>(j)] -
                                                     reference[static_cast<std::size_t>(j)]));
                }
            }
        }
    }
    return worst;
}

bool is_no_signaling(const Behavior &behavior, double tol) { return no_signaling_violation(behavior) <= tol; }

SchmidtState maximally_entangled(int d) {
    require_dim(d);
    return SchmidtState::from_coefficients(std::vector<double>(static_cast<std::size_t>(d), 1.0 / std::sqrt(d)));
}

SchmidtState three_level_state(double gamma) {
    if (!(gamma >= 0.0) || gamma > std::numbers::sqrt2 / 2.0 + 1e-15) {
        throw Error(ErrorCode::invalid_coefficient, "gamma must lie in [0, 1/sqrt(2)]");
    }
    const double rest = std::sqrt(std::max(0.0, 1.0 - 2.0 * gamma * gamma));
    std::vector<double> coeffs{gamma, rest, gamma};
    // absorb rounding so the squared norm is exactly representable as 1
    const double norm = std::sqrt(coeffs[0] * coeffs[0] + coeffs[1] * coeffs[1] + coeffs[2] * coeffs[2]);
    for (auto &c : coeffs) {
        c /= norm;
    }
    return SchmidtState::from_coefficients(std::move(coeffs));
}

double three_level_parameter(const SchmidtState &state) {
    if (state.dim() != 3) {
        throw Error(ErrorCode::invalid_dimension, "three-level parameter needs a qutrit state");
    }
    const auto sorted = state.sorted_descending();
    const auto c = sorted.coefficients();
    return c[0] - c[1] <= c[1] - c[2] ? 0.5 * (c[0] + c[1]) : 0.5 * (c[1] + c[2]);
}

MeasurementSettings cglmp_measurements(int d, Party party) {
    require_dim(d);
    Eigen::MatrixXcd transform = fourier_matrix(d);
    if (party == Party::bob) {
        transform = transform.conjugate().eval();
    }
    std::vector<Eigen::MatrixXcd> bases;
    for (int setting = 0; setting < 2; ++setting) {
        Eigen::VectorXcd phases(d);
        for (int j = 0; j < d; ++j) {
            double phi = 0.0;
            if (party == Party::alice) {
                phi = setting == 0 ? 0.0 : std::numbers::pi * j / d;
            } else {
                phi = (setting == 0 ? 1.0 : -1.0) * std::numbers::pi * j / (2.0 * d);
            }
            phases(j) = std::polar(1.0, phi);
        }
        // The party applies transform * diag(phases) and reads the
        // computational basis; outcome k projects onto row k of that unitary.
        Eigen::MatrixXcd unitary = transform * phases.asDiagonal();
        bases.push_back(unitary.adjoint());
    }
    return MeasurementSettings::from_bases(d, std::move(bases));
}

Behavior quantum_behavior(const PureState &state, const MeasurementSettings &alice, const MeasurementSettings &bob,
                          const SettingsDistribution &settings) {
    const int d = state.dim();
    const int m = alice.num_settings();
    if (alice.dim() != d || bob.dim() != d) {
        throw Error(ErrorCode::shape_error, "measurement dimension does not match the state");
    }
    if (bob.num_settings() != m || settings.num_settings() != m) {
        throw Error(ErrorCode::shape_error, "both parties and the settings distribution need the same m");
    }
    const Eigen::MatrixXcd psi = state.amplitude_matrix();
    const int n = d;
    std::vector<double> probs(static_cast<std::size_t>(m * m * n * n));
    for (int ia = 0; ia < m; ++ia) {
        const Eigen::MatrixXcd left = alice.basis(ia).adjoint() * psi;
        for (int ib = 0; ib < m; ++ib) {
            // amp(j, k) = sum_{i,l} conj(a_j[i]) psi(i, l) conj(b_k[l])
            const Eigen::MatrixXcd amp = left * bob.basis(ib).conjugate();
            const double pm = settings(ia, ib);
            for (int ja = 0; ja < n; ++ja) {
                for (int jb = 0; jb < n; ++jb) {
                    probs[static_cast<std::size_t>(((ia * m + ib) * n + ja) * n + jb)] = std::norm(amp(ja, jb)) * pm;
                }
            }
        }
    }
    return Behavior::from_probs(m, n, std::move(probs), settings);
}

Behavior quantum_behavior(const SchmidtState &state, const MeasurementSettings &alice, const MeasurementSettings &bob,
                          const SettingsDistribution &settings) {
    return quantum_behavior(PureState::from_schmidt(state), alice, bob, settings);
}

SchmidtDecomposition schmidt_decompose(const PureState &state) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(state.amplitude_matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    std::vector<double> coeffs(svd.singularValues().data(), svd.singularValues().data() + state.dim());
    // absorb the O(eps) drift of the decomposition so the state validates
    double norm2 = 0.0;
    for (double c : coeffs) {
        norm2 += c * c;
    }
    for (auto &c : coeffs) {
        c /= std::sqrt(norm2);
    }
    // psi = U S V^H, so |psi> = sum_k s_k |u_k> |conj(v_k)>
    return SchmidtDecomposition{SchmidtState::from_coefficients(std::move(coeffs)), svd.matrixU(),
                                svd.matrixV().conjugate()};
}

double entropy_of_entanglement(const SchmidtState &state) {
    double entropy = 0.0;
    for (double lambda : state.squared()) {
        if (lambda > 0.0) {
            entropy -= lambda * std::log2(lambda);
        }
    }
    return entropy;
}

TensorCopies tensor_copies(const SchmidtState &state, const MeasurementSettings &alice, const MeasurementSettings &bob,
                           int k, int dim_cap) {
    if (k < 1) {
        throw Error(ErrorCode::invalid_parameter, "number of copies must be at least 1");
    }
    if (alice.dim() != state.dim() || bob.dim() != state.dim()) {
        throw Error(ErrorCode::shape_error, "measurement dimension does not match the state");
    }
    long long dim = 1;
    for (int c = 0; c < k; ++c) {
        dim *= state.dim();
        if (dim > dim_cap) {
            throw Error(ErrorCode::resource_limit,
                        "tensor dimension exceeds cap of " + std::to_string(dim_cap));
        }
    }

    std::vector<double> coeffs(state.coefficients().begin(), state.coefficients().end());
    std::vector<Eigen::MatrixXcd> a_bases;
    std::vector<Eigen::MatrixXcd> b_bases;
    for (int s = 0; s < alice.num_settings(); ++s) {
        a_bases.push_back(alice.basis(s));
    }
    for (int s = 0; s < bob.num_settings(); ++s) {
        b_bases.push_back(bob.basis(s));
    }

    const auto kron = [](const Eigen::MatrixXcd &x, const Eigen::MatrixXcd &y) {
        Eigen::MatrixXcd out(x.rows() * y.rows(), x.cols() * y.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
            }
        }
        return out;
    };
    const auto product_family = [&](const std::vector<Eigen::MatrixXcd> &acc,
                                     const MeasurementSettings &single) {
        std::vector<Eigen::MatrixXcd> out;
        for (const auto &u : acc) {
            for (int s = 0; s < single.num_settings(); ++s) {
                out.push_back(kron(u, single.basis(s)));
            }
        }
        return out;
    };

    for (int c = 1; c < k; ++c) {
        std::vector<double> next;
        next.reserve(coeffs.size() * static_cast<std::size_t>(state.dim()));
        for (double x : coeffs) {
            for (double y : state.coefficients()) {
                next.push_back(x * y);
            }
        }
        coeffs = std::move(next);
        a_bases = product_family(a_bases, alice);
        b_bases = product_family(b_bases, bob);
    }

    double norm2 = 0.0;
    for (double c : coeffs) {
        norm2 += c * c;
    }
    for (auto &c : coeffs) {
        c /= std::sqrt(norm2);
    }
    const int new_dim = static_cast<int>(dim);
    return TensorCopies{SchmidtState::from_coefficients(std::move(coeffs)),
                        MeasurementSettings::from_bases(new_dim, std::move(a_bases)),
                        MeasurementSettings::from_bases(new_dim, std::move(b_bases))};
}

namespace {

Behavior pair_behavior(const Behavior &x, const Behavior &y) {
    const int mx = x.num_settings();
    const int nx = x.num_outcomes();
    const int my = y.num_settings();
    const int ny = y.num_outcomes();
    const int m = mx * my;
    const int n = nx * ny;
    std::vector<double> settings(static_cast<std::size_t>(m * m));
    std::vector<double> probs(static_cast<std::size_t>(m) * m * n * n);
    const auto at = [&](int ia, int ib, int ja, int jb) -> double & {
        return probs[static_cast<std::size_t>(((ia * m + ib) * n + ja) * n + jb)];
    };
    for (int xa = 0; xa < mx; ++xa) {
        for (int xb = 0; xb < mx; ++xb) {
            for (int ya = 0; ya < my; ++ya) {
                for (int yb = 0; yb < my; ++yb) {
                    const int ia = xa * my + ya;
                    const int ib = xb * my + yb;
                    settings[static_cast<std::size_t>(ia * m + ib)] = x.settings()(xa, xb) * y.settings()(ya, yb);
                    for (int ja = 0; ja < n; ++ja) {
                        for (int jb = 0; jb < n; ++jb) {
                            at(ia, ib, ja, jb) =
                                x.at(xa, xb, ja / ny, jb / ny) * y.at(ya, yb, ja % ny, jb % ny);
                        }
                    }
                }
            }
        }
    }
    return Behavior::from_probs(m, n, std::move(probs), SettingsDistribution::from_probs(m, std::move(settings)));
}

}  // namespace

Behavior product_behavior(const Behavior &behavior, int copies) {
    if (copies < 1) {
        throw Error(ErrorCode::invalid_parameter, "copies must be at least 1");
    }
    Behavior out = behavior;
    for (int c = 1; c < copies; ++c) {
        out = pair_behavior(out, behavior);
    }
    return out;
}

}  // namespace bellkl
