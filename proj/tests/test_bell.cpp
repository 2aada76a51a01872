#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bellkl/bell.hpp"
#include "bellkl/error.hpp"
#include "bellkl/local.hpp"
#include "bellkl/strength.hpp"

using namespace bellkl;

namespace {

Eigen::MatrixXcd qubit_basis(double theta, double phi, double chi) {
    Eigen::MatrixXcd u(2, 2);
    u(0, 0) = std::cos(theta);
    u(1, 0) = std::polar(1.0, phi) * std::sin(theta);
    u(0, 1) = -std::polar(1.0, chi - phi) * std::sin(theta);
    u(1, 1) = std::polar(1.0, chi) * std::cos(theta);
    return u;
}

double qubit_value(const BellFunctional &f, const PureState &state, const std::array<double, 12> &x) {
    const auto alice = MeasurementSettings::from_bases(2, {qubit_basis(x[0], x[1], x[2]), qubit_basis(x[3], x[4], x[5])});
    const auto bob = MeasurementSettings::from_bases(2, {qubit_basis(x[6], x[7], x[8]), qubit_basis(x[9], x[10], x[11])});
    return quantum_value(f, state, alice, bob);
}

Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a(i, j) = Complex(g(rng), g(rng));
        }
    }
    return 0.5 * (a + a.adjoint());
}

Behavior cglmp_behavior(const SchmidtState &state) {
    const int d = state.dim();
    return quantum_behavior(state, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                            SettingsDistribution::uniform(2));
}

}  // namespace

TEST_SUITE("bell") {
    TEST_CASE("cglmp local bound by enumeration") {
        for (int d = 2; d <= 5; ++d) {
            const auto f = cglmp_functional(d);
            CHECK(f.bound == d - 1);
            CHECK(local_bound(f) == d - 1);
        }
        CHECK_THROWS_AS(cglmp_functional(1), Error);
    }

    TEST_CASE("modular identity on every vertex") {
        for (int d = 2; d <= 5; ++d) {
            const auto f = cglmp_functional(d);
            const auto u = SettingsDistribution::uniform(2);
            const VertexSpace space(2, d);
            bool all = true;
            space.for_each([&](std::uint64_t idx, std::span<const int>) {
                const double value = functional_value(f, vertex_behavior(space.vertex(idx), u));
                const long rounded = std::lround(value);
                all = all && std::abs(value - static_cast<double>(rounded)) < 1e-12 && rounded % d == d - 1 &&
                      rounded >= d - 1;
            });
            CHECK(all);
        }
    }

    TEST_CASE("local bound of other functionals") {
        BellFunctional zero{2, 3, std::vector<double>(36, 0.0), 0.0, BoundDirection::lower};
        CHECK(local_bound(zero) == 0.0);
        auto f = cglmp_functional(3);
        for (auto &c : f.coeffs) {
            c = -c;
        }
        f.direction = BoundDirection::upper;
        CHECK(local_bound(f) == -2.0);
        CHECK_THROWS_AS(local_bound(cglmp_functional(60)), Error);
    }

    TEST_CASE("qubit quantum value matches the numerical minimum") {
        const auto f = cglmp_functional(2);
        const auto phi = PureState::from_schmidt(maximally_entangled(2));
        const double value = quantum_value(f, phi, cglmp_measurements(2, Party::alice), cglmp_measurements(2, Party::bob));
        CHECK(value == doctest::Approx(2.0 - std::numbers::sqrt2).epsilon(1e-12));

        // random-restart pattern search over all pairs of qubit bases
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        double best = 10.0;
        for (int restart = 0; restart < 12; ++restart) {
            std::array<double, 12> x{};
            for (auto &v : x) {
                v = angle(rng);
            }
            double fx = qubit_value(f, phi, x);
            for (double step = 0.5; step > 1e-7; step *= 0.5) {
                bool moved = true;
                while (moved) {
                    moved = false;
                    for (std::size_t k = 0; k < x.size(); ++k) {
                        for (double sign : {1.0, -1.0}) {
                            auto y = x;
                            y[k] += sign * step;
                            const double fy = qubit_value(f, phi, y);
                            if (fy < fx - 1e-15) {
                                x = y;
                                fx = fy;
                                moved = true;
                            }
                        }
                    }
                }
            }
            best = std::min(best, fx);
            CHECK(fx >= 2.0 - std::numbers::sqrt2 - 1e-9);
        }
        CHECK(best == doctest::Approx(2.0 - std::numbers::sqrt2).epsilon(1e-6));
    }

    TEST_CASE("three-level state minimizing the qutrit functional") {
        const auto f = cglmp_functional(3);
        const auto alice = cglmp_measurements(3, Party::alice);
        const auto bob = cglmp_measurements(3, Party::bob);
        double best_gamma = 0.0;
        double best = 10.0;
        for (double g = 0.55; g <= 0.68; g += 1e-4) {
            const double v = quantum_value(f, PureState::from_schmidt(three_level_state(g)), alice, bob);
            if (v < best) {
                best = v;
                best_gamma = g;
            }
        }
        CHECK(std::abs(best_gamma - 0.617) < 1e-3);
        CHECK(best < quantum_value(f, PureState::from_schmidt(maximally_entangled(3)), alice, bob));
    }

    TEST_CASE("product states respect the local bound") {
        for (int d = 2; d <= 4; ++d) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d * d);
            v(0) = 1.0;
            const double value = quantum_value(cglmp_functional(d), PureState::from_amplitudes(d, v),
                                               cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob));
            CHECK(value >= d - 1 - 1e-12);
        }
    }

    TEST_CASE("log-ratio operator") {
        for (int d = 2; d <= 4; ++d) {
            const auto state = maximally_entangled(d);
            const auto alice = cglmp_measurements(d, Party::alice);
            const auto bob = cglmp_measurements(d, Party::bob);
            const auto q = cglmp_behavior(state);
            const auto fit = min_kl_local(q);
            const auto p = Behavior::from_probs(2, d, fit.local_probs, q.settings());
            const auto op = log_ratio_operator(q, p, alice, bob);
            CHECK(op.hermiticity_error() < 1e-10);
            CHECK(std::abs(op.expectation(PureState::from_schmidt(state)) - fit.divergence_bits) < 1e-9);
            const auto top = top_eigenpair(op);
            CHECK(top.value >= fit.divergence_bits - 1e-12);

            const auto zero = log_ratio_operator(q, q, alice, bob);
            CHECK(zero.matrix.cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    TEST_CASE("log-ratio operator rejects vanishing probabilities") {
        const auto q = cglmp_behavior(maximally_entangled(2));
        const auto p = vertex_behavior(VertexSpace(2, 2).vertex(0), SettingsDistribution::uniform(2));
        try {
            log_ratio_operator(q, p, cglmp_measurements(2, Party::alice), cglmp_measurements(2, Party::bob));
            FAIL("expected singular ratio");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::singular_ratio);
        }
    }

    TEST_CASE("projector sum matches its dense form") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int d : {2, 3, 5}) {
            std::vector<double> w(static_cast<std::size_t>(4 * d * d));
            for (auto &x : w) {
                x = unif(rng);
            }
            const ProjectorSum sum(w, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                                   SettingsDistribution::from_probs(2, {0.1, 0.2, 0.3, 0.4}));
            const auto dense = sum.dense();
            CHECK(dense.hermiticity_error() < 1e-12);
            std::normal_distribution<double> g;
            Eigen::VectorXcd x(d * d);
            for (auto &v : x) {
                v = Complex(g(rng), g(rng));
            }
            Eigen::VectorXcd y;
            sum.apply(x, y);
            CHECK((y - dense.matrix * x).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense.matrix);
            CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= sum.norm_bound() + 1e-12);
        }
    }

    TEST_CASE("top eigenpair") {
        BellOperator id{2, Eigen::MatrixXcd::Identity(4, 4)};
        const auto one = top_eigenpair(id);
        CHECK(one.value == doctest::Approx(1.0));
        CHECK(one.degenerate);

        BellOperator diag{2, Eigen::MatrixXcd::Identity(4, 4)};
        diag.matrix(0, 0) = 3.0;
        const auto three = top_eigenpair(diag);
        CHECK(three.value == doctest::Approx(3.0));
        CHECK(std::abs(three.vector.amplitudes()(0)) == doctest::Approx(1.0));
        CHECK_FALSE(three.degenerate);

        std::mt19937_64 rng(12);
        for (int d : {2, 3, 4}) {
            BellOperator op{d, random_hermitian(d * d, rng)};
            const auto dense = top_eigenpair(op);
            EigenOptions power;
            power.dense_limit = 0;
            const auto iterative = top_eigenpair(op, power);
            CHECK(iterative.value == doctest::Approx(dense.value).epsilon(1e-8));
            CHECK(iterative.residual < 1e-8);
            const Complex overlap = dense.vector.amplitudes().dot(iterative.vector.amplitudes());
            CHECK(std::abs(overlap) == doctest::Approx(1.0).epsilon(1e-6));
        }
        BellOperator skew{2, Eigen::MatrixXcd::Zero(4, 4)};
        skew.matrix(0, 1) = 1.0;
        CHECK_THROWS_AS(top_eigenpair(skew), Error);
    }

    TEST_CASE("tilted ratios") {
        for (int d = 2; d <= 5; ++d) {
            const auto tiny = tilted_cglmp_ratios(d, 1e-12);
            for (auto r : tiny) {
                CHECK(r == doctest::Approx(1.0).epsilon(1e-9));
            }
            const VertexSpace space(2, d);
            const auto u = SettingsDistribution::uniform(2);
            for (double frac : {0.1, 0.5, 0.9, 0.999}) {
                const double b = frac * tilted_b_limit(d);
                const auto r = tilted_cglmp_ratios(d, b);
                for (auto x : r) {
                    CHECK(x > 0.0);
                }
                double best = -1.0;
                space.for_each([&](std::uint64_t idx, std::span<const int>) {
                    const auto v = vertex_behavior(space.vertex(idx), u);
                    double s = 0.0;
                    for (std::size_t i = 0; i < r.size(); ++i) {
                        s += r[i] * v[i];
                    }
                    best = std::max(best, s);
                });
                CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
            }
            CHECK_THROWS_AS(tilted_cglmp_ratios(d, 0.0), Error);
            CHECK_THROWS_AS(tilted_cglmp_ratios(d, tilted_b_limit(d)), Error);
        }
    }
}
