#pragma once

// Counter-based random streams. A stream is identified by a 64-bit key
// derived from (seed, purpose, index...) so that any row, entry or iteration
// can regenerate its randomness without replaying earlier draws.

#include <cstdint>
#include <limits>

namespace rime::rng {

// Purposes used to split one user seed into independent substreams.
enum class Purpose : std::uint64_t {
    presence = 1,
    sample = 2,
    adversary = 3,
    fill = 4,
    hash = 5,
    filter = 6,
    probe = 7,
    experiment = 8,
};

std::uint64_t mix64(std::uint64_t x) noexcept;

std::uint64_t derive(std::uint64_t seed, Purpose purpose) noexcept;
std::uint64_t derive(std::uint64_t key, std::uint64_t index) noexcept;
std::uint64_t derive(std::uint64_t key, std::uint64_t i, std::uint64_t j) noexcept;

class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    // Uniform on the open interval (0, 1).
    double uniform() noexcept;
    double normal() noexcept;
    // Uniform on {0, ..., n - 1}; n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;
    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Standard normal draw that depends only on the key.
double normal_at(std::uint64_t key) noexcept;

}  // namespace rime::rng
