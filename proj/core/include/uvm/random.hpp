#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace uvm {

/// Domain tags for deriving independent substreams from one user seed.
enum class StreamDomain : std::uint64_t {
    init = 1,
    collect = 2,
    final_critic = 3,
    pricing = 4,
    property = 5,
    sampling = 6,
};

/// SplitMix64 finalizer chained over `parts`; used to derive substream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts);

std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain,
                          std::uint64_t a = 0, std::uint64_t b = 0);

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace uvm
