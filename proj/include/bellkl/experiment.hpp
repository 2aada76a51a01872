#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "bellkl/quantum.hpp"
#include "bellkl/strength.hpp"

namespace bellkl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The key is
/// the seed, the upper counter words select an independent stream.
class Philox4x32 {
   public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    static Counter block(Counter counter, Key key);

   private:
    Key key_;
    Counter counter_;
    Counter buffer_{};
    int used_ = 4;
};

struct TrialCounts {
    int num_settings = 0;
    int num_outcomes = 0;
    std::vector<std::uint64_t> counts;  // indexed like Behavior
    std::uint64_t total = 0;
};

/// N joint draws of (settings, outcomes) from q. Trials are split into
/// `blocks` nearly equal chunks, chunk b drawn from stream b of the seed.
TrialCounts sample_trials(const Behavior &q, std::uint64_t trials, std::uint64_t seed, unsigned blocks = 1);

/// Frequencies counts / N with the observed settings marginals.
Behavior empirical_behavior(const TrialCounts &counts);

StrengthResult empirical_strength(const TrialCounts &counts, const StrengthOptions &options = {});

}  // namespace bellkl
