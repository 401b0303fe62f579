#pragma once

// Seeded randomness with results that do not depend on the standard library implementation.
// std::mt19937_64 output is fixed by the standard; the std distributions are not, so the bounded
// draws and shuffles here are implemented directly.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hopwise {

std::uint64_t splitmix64(std::uint64_t x);

/// Independent seed for sub-stream `stream` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n); n must be positive.
    std::size_t index(std::size_t n);
    /// Uniform in [0, 1).
    double unit();
    bool bernoulli(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            using std::swap;
            swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace hopwise
