#include <doctest.h>

#include <cmath>
#include <random>

#include "bellkl/error.hpp"
#include "bellkl/local.hpp"

using namespace bellkl;

TEST_SUITE("local") {
    TEST_CASE("vertex counts") {
        CHECK(enumerate_vertices(2, 2).size() == 16);
        CHECK(enumerate_vertices(2, 3).size() == 81);
        CHECK(enumerate_vertices(2, 4).size() == 256);
        CHECK(VertexSpace(2, 8).size() == 4096);
        try {
            VertexSpace(2, 57);
            FAIL("expected resource limit");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::resource_limit);
        }
        CHECK_THROWS_AS(VertexSpace(2, 5, 100), Error);
    }

    TEST_CASE("canonical ordering and index round trip") {
        const VertexSpace space(2, 3);
        const auto first = space.vertex(0);
        CHECK(first.alice == std::vector<int>{0, 0});
        CHECK(first.bob == std::vector<int>{0, 0});
        CHECK(space.vertex(1).alice == std::vector<int>{1, 0});
        CHECK(space.vertex(3).alice == std::vector<int>{0, 1});
        CHECK(space.vertex(9).bob == std::vector<int>{1, 0});
        std::uint64_t seen = 0;
        space.for_each([&](std::uint64_t idx, std::span<const int> digits) {
            const auto v = space.vertex(idx);
            CHECK(space.index_of(v) == idx);
            CHECK(digits[0] == v.alice[0]);
            CHECK(digits[1] == v.alice[1]);
            CHECK(digits[2] == v.bob[0]);
            CHECK(digits[3] == v.bob[1]);
            ++seen;
        });
        CHECK(seen == space.size());
    }

    TEST_CASE("constant strategy behavior") {
        const DeterministicStrategy zero{2, {0, 0}, {0, 0}};
        const auto b = vertex_behavior(zero, SettingsDistribution::uniform(2));
        for (int ia = 0; ia < 2; ++ia) {
            for (int ib = 0; ib < 2; ++ib) {
                CHECK(b.at(ia, ib, 0, 0) == 0.25);
                CHECK(b.at(ia, ib, 1, 1) == 0.0);
            }
        }
    }

    TEST_CASE("vertex behaviors are normalized and no-signaling") {
        const auto settings = SettingsDistribution::from_probs(2, {0.1, 0.2, 0.3, 0.4});
        for (const auto &v : enumerate_vertices(2, 3)) {
            const auto b = vertex_behavior(v, settings);
            double total = 0.0;
            for (auto p : b.probs()) {
                total += p;
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
            CHECK(is_no_signaling(b));
        }
    }

    TEST_CASE("model behavior") {
        const auto settings = SettingsDistribution::uniform(2);
        const auto vertices = enumerate_vertices(2, 2);

        std::vector<double> point(vertices.size(), 0.0);
        point[5] = 1.0;
        const auto single = model_behavior(point, vertices, settings);
        const auto direct = vertex_behavior(vertices[5], settings);
        for (std::size_t i = 0; i < single.size(); ++i) {
            CHECK(single[i] == direct[i]);
        }

        const std::vector<double> uniform(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
        const auto mixed = model_behavior(uniform, vertices, settings);
        for (std::size_t i = 0; i < mixed.size(); ++i) {
            CHECK(mixed[i] == doctest::Approx(0.25 * 0.25));
        }

        std::vector<double> half(vertices.size(), 0.0);
        half[3] = 0.5;
        half[12] = 0.5;
        const auto mean = model_behavior(half, vertices, settings);
        const auto b3 = vertex_behavior(vertices[3], settings);
        const auto b12 = vertex_behavior(vertices[12], settings);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            CHECK(mean[i] == doctest::Approx(0.5 * (b3[i] + b12[i])));
        }

        const std::vector<double> short_weights(3, 1.0 / 3.0);
        try {
            model_behavior(short_weights, vertices, settings);
            FAIL("expected shape error");
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::shape_error);
        }
    }

    TEST_CASE("model behavior is linear and local models are no-signaling") {
        std::mt19937_64 rng(21);
        std::gamma_distribution<double> gamma(0.3);
        const auto settings = SettingsDistribution::from_probs(2, {0.4, 0.3, 0.2, 0.1});
        const auto vertices = enumerate_vertices(2, 3);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> w1(vertices.size());
            std::vector<double> w2(vertices.size());
            double s1 = 0.0;
            double s2 = 0.0;
            for (std::size_t k = 0; k < vertices.size(); ++k) {
                w1[k] = gamma(rng);
                w2[k] = gamma(rng);
                s1 += w1[k];
                s2 += w2[k];
            }
            std::vector<double> mix(vertices.size());
            for (std::size_t k = 0; k < vertices.size(); ++k) {
                w1[k] /= s1;
                w2[k] /= s2;
                mix[k] = 0.3 * w1[k] + 0.7 * w2[k];
            }
            const auto b1 = model_behavior(w1, vertices, settings);
            const auto b2 = model_behavior(w2, vertices, settings);
            const auto bm = model_behavior(mix, vertices, settings);
            for (std::size_t i = 0; i < bm.size(); ++i) {
                CHECK(std::abs(bm[i] - (0.3 * b1[i] + 0.7 * b2[i])) < 1e-14);
            }
            CHECK(is_no_signaling(bm));
        }
    }

    TEST_CASE("sparse local model") {
        const VertexSpace space(2, 2);
        LocalModel model{2, 2, {{0, 0.25}, {15, 0.75}}};
        model.validate();
        const auto b = model_behavior(model, SettingsDistribution::uniform(2));
        CHECK(b.at(0, 0, 0, 0) == doctest::Approx(0.0625));
        CHECK(b.at(1, 1, 1, 1) == doctest::Approx(0.1875));
        LocalModel bad{2, 2, {{0, 0.5}, {1, 0.25}}};
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}
