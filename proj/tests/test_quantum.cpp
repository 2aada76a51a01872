#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bellkl/error.hpp"
#include "bellkl/quantum.hpp"

using namespace bellkl;

namespace {

Eigen::MatrixXcd random_unitary(int d, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd z(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            z(i, j) = Complex(g(rng), g(rng));
        }
    }
    return Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ();
}

PureState random_pure(int d, std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Eigen::VectorXcd v(d * d);
    for (auto &x : v) {
        x = Complex(g(rng), g(rng));
    }
    return PureState::from_amplitudes(d, v.normalized());
}

void check_error(ErrorCode expected, auto &&fn) {
    try {
        fn();
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == expected);
    }
}

}  // namespace

TEST_SUITE("quantum") {
    TEST_CASE("maximally entangled coefficients") {
        const auto phi2 = maximally_entangled(2);
        CHECK(phi2.coefficient(0) == doctest::Approx(0.70710678).epsilon(1e-8));
        CHECK(phi2.coefficient(1) == doctest::Approx(0.70710678).epsilon(1e-8));
        const auto phi3 = maximally_entangled(3);
        for (auto c : phi3.coefficients()) {
            CHECK(c == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
        }
        for (auto c2 : maximally_entangled(4).squared()) {
            CHECK(c2 == doctest::Approx(0.25).epsilon(1e-14));
        }
        check_error(ErrorCode::invalid_dimension, [] { maximally_entangled(1); });
    }

    TEST_CASE("schmidt state validation") {
        check_error(ErrorCode::invalid_coefficient, [] { SchmidtState::from_coefficients({0.8, 0.8}); });
        check_error(ErrorCode::invalid_coefficient, [] { SchmidtState::from_coefficients({-0.6, 0.8}); });
        check_error(ErrorCode::invalid_dimension, [] { SchmidtState::from_coefficients({1.0}); });
        const auto s = SchmidtState::from_coefficients({0.6, 0.8});
        double norm = 0.0;
        for (auto c2 : s.squared()) {
            norm += c2;
        }
        CHECK(std::abs(norm - 1.0) < 1e-12);
        CHECK(s.sorted_descending().coefficient(0) == 0.8);
    }

    TEST_CASE("pure state validation") {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
        v(0) = 1.1;
        check_error(ErrorCode::invalid_state, [&] { PureState::from_amplitudes(2, v); });
        check_error(ErrorCode::shape_error, [&] { PureState::from_amplitudes(3, Eigen::VectorXcd::Zero(4)); });
    }

    TEST_CASE("three level state") {
        const auto sym = three_level_state(1.0 / std::sqrt(3.0));
        for (auto c : sym.coefficients()) {
            CHECK(c == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
        }
        const auto mv = three_level_state(0.617).sorted_descending();
        CHECK(mv.coefficient(0) == doctest::Approx(0.617).epsilon(1e-12));
        CHECK(mv.coefficient(1) == doctest::Approx(0.617).epsilon(1e-12));
        CHECK(mv.coefficient(2) == doctest::Approx(std::sqrt(1.0 - 2.0 * 0.617 * 0.617)).epsilon(1e-12));
        CHECK(std::abs(mv.coefficient(2) - 0.4885) < 1e-4);
        CHECK(three_level_parameter(three_level_state(0.642)) == doctest::Approx(0.642).epsilon(1e-12));
        check_error(ErrorCode::invalid_coefficient, [] { three_level_state(0.75); });
        check_error(ErrorCode::invalid_coefficient, [] { three_level_state(-0.1); });
    }

    TEST_CASE("cglmp measurements are unitary") {
        for (int d = 2; d <= 7; ++d) {
            for (auto party : {Party::alice, Party::bob}) {
                const auto m = cglmp_measurements(d, party);
                CHECK(m.num_settings() == 2);
                for (int a = 0; a < 2; ++a) {
                    const auto &b = m.basis(a);
                    const double err = (b.adjoint() * b - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff();
                    CHECK(err < 1e-12);
                }
            }
        }
        check_error(ErrorCode::invalid_dimension, [] { cglmp_measurements(1, Party::alice); });
    }

    TEST_CASE("measurement settings reject non-unitary bases") {
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(2, 2);
        b(0, 0) = 1.01;
        check_error(ErrorCode::shape_error, [&] { MeasurementSettings::from_bases(2, {b}); });
    }

    TEST_CASE("settings distribution") {
        const auto u = SettingsDistribution::uniform(2);
        for (auto p : u.probs()) {
            CHECK(p == 0.25);
        }
        check_error(ErrorCode::invalid_parameter,
                    [] { SettingsDistribution::from_probs(2, {0.5, 0.5, 0.5, -0.5 + 1e-6}); });
        check_error(ErrorCode::shape_error, [] { SettingsDistribution::from_probs(2, {0.5, 0.5}); });
    }

    TEST_CASE("product state behavior factorizes") {
        std::mt19937_64 rng(3);
        for (int d : {2, 3}) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d * d);
            v(0) = 1.0;
            const auto state = PureState::from_amplitudes(d, v);
            const auto alice = MeasurementSettings::from_bases(d, {random_unitary(d, rng), random_unitary(d, rng)});
            const auto bob = MeasurementSettings::from_bases(d, {random_unitary(d, rng), random_unitary(d, rng)});
            const auto settings = SettingsDistribution::from_probs(2, {0.1, 0.2, 0.3, 0.4});
            const auto q = quantum_behavior(state, alice, bob, settings);
            for (int ia = 0; ia < 2; ++ia) {
                for (int ib = 0; ib < 2; ++ib) {
                    for (int ja = 0; ja < d; ++ja) {
                        for (int jb = 0; jb < d; ++jb) {
                            const double pa = std::norm(alice.basis(ia)(0, ja));
                            const double pb = std::norm(bob.basis(ib)(0, jb));
                            CHECK(q.at(ia, ib, ja, jb) ==
                                  doctest::Approx(pa * pb * settings(ia, ib)).epsilon(1e-12));
                        }
                    }
                }
            }
        }
    }

    TEST_CASE("quantum behaviors are no-signaling and normalized") {
        std::mt19937_64 rng(11);
        for (int d = 2; d <= 5; ++d) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto state = random_pure(d, rng);
                const auto alice = MeasurementSettings::from_bases(d, {random_unitary(d, rng), random_unitary(d, rng)});
                const auto bob = MeasurementSettings::from_bases(d, {random_unitary(d, rng), random_unitary(d, rng)});
                const auto q = quantum_behavior(state, alice, bob, SettingsDistribution::from_probs(2, {0.4, 0.1, 0.2, 0.3}));
                CHECK(no_signaling_violation(q) < 1e-10);
                for (int ia = 0; ia < 2; ++ia) {
                    for (int ib = 0; ib < 2; ++ib) {
                        double block = 0.0;
                        for (int ja = 0; ja < d; ++ja) {
                            for (int jb = 0; jb < d; ++jb) {
                                block += q.at(ia, ib, ja, jb);
                            }
                        }
                        CHECK(std::abs(block - q.settings()(ia, ib)) < 1e-10);
                    }
                }
            }
            const auto q = quantum_behavior(maximally_entangled(d), cglmp_measurements(d, Party::alice),
                                            cglmp_measurements(d, Party::bob), SettingsDistribution::uniform(2));
            CHECK(is_no_signaling(q));
        }
    }

    TEST_CASE("behavior validation") {
        check_error(ErrorCode::invalid_parameter, [] {
            Behavior::from_probs(1, 2, {0.5, 0.5, 0.1, -0.1}, SettingsDistribution::uniform(1));
        });
        check_error(ErrorCode::shape_error,
                    [] { Behavior::from_probs(1, 2, {0.5, 0.5}, SettingsDistribution::uniform(1)); });
        // block sums must match the settings marginals
        check_error(ErrorCode::invalid_parameter, [] {
            Behavior::from_probs(2, 1, {0.4, 0.1, 0.25, 0.25}, SettingsDistribution::uniform(2));
        });
    }

    TEST_CASE("global phase does not change probabilities") {
        std::mt19937_64 rng(5);
        const auto state = random_pure(3, rng);
        const auto alice = cglmp_measurements(3, Party::alice);
        const auto bob = cglmp_measurements(3, Party::bob);
        const auto settings = SettingsDistribution::uniform(2);
        const auto q0 = quantum_behavior(state, alice, bob, settings);
        const auto q1 = quantum_behavior(state.with_global_phase(1.234), alice, bob, settings);
        for (std::size_t i = 0; i < q0.size(); ++i) {
            CHECK(std::abs(q0[i] - q1[i]) < 1e-12);
        }
    }

    TEST_CASE("schmidt decomposition") {
        const auto phi = schmidt_decompose(PureState::from_schmidt(maximally_entangled(4)));
        for (auto c : phi.coefficients.coefficients()) {
            CHECK(c == doctest::Approx(0.5).epsilon(1e-12));
        }
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(9);
        v(0) = 1.0;
        const auto prod = schmidt_decompose(PureState::from_amplitudes(3, v));
        CHECK(prod.coefficients.coefficient(0) == doctest::Approx(1.0));
        CHECK(std::abs(prod.coefficients.coefficient(1)) < 1e-12);

        std::mt19937_64 rng(7);
        for (int d = 2; d <= 6; ++d) {
            const auto state = random_pure(d, rng);
            const auto dec = schmidt_decompose(state);
            Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(d, d);
            for (int k = 0; k < d; ++k) {
                rebuilt += dec.coefficients.coefficient(k) * dec.basis_a.col(k) * dec.basis_b.col(k).transpose();
            }
            CHECK((rebuilt - state.amplitude_matrix()).cwiseAbs().maxCoeff() < 1e-10);
            for (int k = 1; k < d; ++k) {
                CHECK(dec.coefficients.coefficient(k - 1) >= dec.coefficients.coefficient(k));
            }
        }

        const auto s = SchmidtState::from_coefficients({0.2, 0.9, std::sqrt(1.0 - 0.04 - 0.81)});
        const auto back = schmidt_decompose(PureState::from_schmidt(s)).coefficients;
        const auto sorted = s.sorted_descending();
        for (int k = 0; k < 3; ++k) {
            CHECK(back.coefficient(k) == doctest::Approx(sorted.coefficient(k)).epsilon(1e-12));
        }
    }

    TEST_CASE("entropy of entanglement") {
        CHECK(entropy_of_entanglement(maximally_entangled(3)) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
        CHECK(std::abs(entropy_of_entanglement(maximally_entangled(3)) - 1.585) < 1e-3);
        CHECK(std::abs(entropy_of_entanglement(three_level_state(0.617)) - 1.554) < 1e-3);
        CHECK(std::abs(entropy_of_entanglement(three_level_state(0.642)) - 1.495) < 1e-3);
        CHECK(entropy_of_entanglement(SchmidtState::from_coefficients({1.0, 0.0})) == 0.0);
    }

    TEST_CASE("maximally entangled state maximizes entropy") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g(0.0, 0.05);
        for (int d = 2; d <= 6; ++d) {
            const double top = entropy_of_entanglement(maximally_entangled(d));
            for (int trial = 0; trial < 50; ++trial) {
                std::vector<double> c(static_cast<std::size_t>(d));
                double norm = 0.0;
                for (auto &x : c) {
                    x = std::abs(1.0 / std::sqrt(d) + g(rng));
                    norm += x * x;
                }
                for (auto &x : c) {
                    x /= std::sqrt(norm);
                }
                CHECK(entropy_of_entanglement(SchmidtState::from_coefficients(c)) <= top + 1e-12);
            }
        }
    }

    TEST_CASE("tensor copies") {
        const auto s = SchmidtState::from_coefficients({0.6, 0.8});
        const auto alice = cglmp_measurements(2, Party::alice);
        const auto bob = cglmp_measurements(2, Party::bob);
        const auto one = tensor_copies(s, alice, bob, 1);
        CHECK(one.state.dim() == 2);
        CHECK(one.state.coefficient(1) == 0.8);
        CHECK((one.alice.basis(1) - alice.basis(1)).norm() < 1e-15);

        const auto two = tensor_copies(s, alice, bob, 2);
        REQUIRE(two.state.dim() == 4);
        CHECK(two.state.coefficient(0) == doctest::Approx(0.36));
        CHECK(two.state.coefficient(1) == doctest::Approx(0.48));
        CHECK(two.state.coefficient(2) == doctest::Approx(0.48));
        CHECK(two.state.coefficient(3) == doctest::Approx(0.64));
        CHECK(two.alice.num_settings() == 4);

        // regrouped behavior equals the independent product
        const auto settings = SettingsDistribution::uniform(2);
        const auto q = quantum_behavior(s, alice, bob, settings);
        const auto q2 = quantum_behavior(two.state, two.alice, two.bob, SettingsDistribution::uniform(4));
        const auto expected = product_behavior(q, 2);
        REQUIRE(q2.size() == expected.size());
        for (std::size_t i = 0; i < q2.size(); ++i) {
            CHECK(std::abs(q2[i] - expected[i]) < 1e-12);
        }
        check_error(ErrorCode::resource_limit, [&] { tensor_copies(s, alice, bob, 13); });
        check_error(ErrorCode::invalid_parameter, [&] { tensor_copies(s, alice, bob, 0); });
    }
}
