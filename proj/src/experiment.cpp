#include "bellkl/experiment.hpp"

#include <algorithm>
#include <future>
#include <random>

#include "bellkl/error.hpp"

namespace bellkl {

namespace {

constexpr std::uint32_t philox_m0 = 0xD2511F53;
constexpr std::uint32_t philox_m1 = 0xCD9E8D57;
constexpr std::uint32_t philox_w0 = 0x9E3779B9;
constexpr std::uint32_t philox_w1 = 0xBB67AE85;

Philox4x32::Counter philox_round(const Philox4x32::Counter &c, const Philox4x32::Key &k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(philox_m0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(philox_m1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

std::vector<std::uint64_t> sample_block(std::span<const double> probs, std::uint64_t trials, std::uint64_t seed,
                                        std::uint64_t stream) {
    Philox4x32 gen(seed, stream);
    std::vector<std::uint64_t> counts(probs.size(), 0);
    std::size_t last = probs.size();
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] > 0.0) {
            last = k;
        }
    }
    // sequential conditional binomials give an exact multinomial draw
    double remaining_mass = 1.0;
    std::uint64_t remaining = trials;
    for (std::size_t k = 0; k < probs.size() && remaining > 0; ++k) {
        if (probs[k] <= 0.0) {
            continue;
        }
        if (k == last) {
            counts[k] = remaining;
            break;
        }
        const double ratio = std::clamp(probs[k] / remaining_mass, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> binomial(remaining, ratio);
        counts[k] = binomial(gen);
        remaining -= counts[k];
        remaining_mass -= probs[k];
    }
    return counts;
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::Counter Philox4x32::block(Counter counter, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += philox_w0;
            key[1] += philox_w1;
        }
        counter = philox_round(counter, key);
    }
    return counter;
}

Philox4x32::result_type Philox4x32::operator()() {
    if (used_ == 4) {
        buffer_ = block(counter_, key_);
        if (++counter_[0] == 0) {
            ++counter_[1];
        }
        used_ = 0;
    }
    return buffer_[static_cast<std::size_t>(used_++)];
}

TrialCounts sample_trials(const Behavior &q, std::uint64_t trials, std::uint64_t seed, unsigned blocks) {
    if (trials < 1) {
        throw Error(ErrorCode::invalid_parameter, "number of trials must be at least 1");
    }
    if (blocks < 1) {
        throw Error(ErrorCode::invalid_parameter, "block count must be at least 1");
    }
    std::vector<std::future<std::vector<std::uint64_t>>> jobs;
    for (unsigned b = 0; b < blocks; ++b) {
        const std::uint64_t share = trials / blocks + (b < trials % blocks ? 1 : 0);
        jobs.push_back(std::async(blocks > 1 ? std::launch::async : std::launch::deferred, sample_block, q.probs(),
                                  share, seed, std::uint64_t{b}));
    }
    TrialCounts out{q.num_settings(), q.num_outcomes(), std::vector<std::uint64_t>(q.size(), 0), trials};
    for (auto &job : jobs) {
        const auto part = job.get();
        for (std::size_t k = 0; k < part.size(); ++k) {
            out.counts[k] += part[k];
        }
    }
    return out;
}

Behavior empirical_behavior(const TrialCounts &counts) {
    const int m = counts.num_settings;
    const int n = counts.num_outcomes;
    const auto nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (counts.total < 1 || counts.counts.size() != static_cast<std::size_t>(m * m) * nn) {
        throw Error(ErrorCode::shape_error, "trial counts are empty or mis-shaped");
    }
    std::uint64_t total = 0;
    for (auto c : counts.counts) {
        total += c;
    }
    if (total != counts.total) {
        throw Error(ErrorCode::invalid_parameter, "counts do not sum to the trial total");
    }
    const double scale = 1.0 / static_cast<double>(counts.total);
    std::vector<double> probs(counts.counts.size());
    std::vector<double> marginals(static_cast<std::size_t>(m * m), 0.0);
    for (std::size_t k = 0; k < probs.size(); ++k) {
        probs[k] = static_cast<double>(counts.counts[k]) * scale;
    }
    for (std::size_t s = 0; s < marginals.size(); ++s) {
        std::uint64_t block = 0;
        for (std::size_t o = 0; o < nn; ++o) {
            block += counts.counts[s * nn + o];
        }
        marginals[s] = static_cast<double>(block) * scale;
    }
    return Behavior::from_probs(m, n, std::move(probs), SettingsDistribution::from_probs(m, std::move(marginals)));
}

StrengthResult empirical_strength(const TrialCounts &counts, const StrengthOptions &options) {
    return min_kl_local(empirical_behavior(counts), options);
}

}  // namespace bellkl
