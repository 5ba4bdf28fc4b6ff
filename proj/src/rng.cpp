#include "rime/rng.hpp"

#include <cmath>
#include <numbers>

namespace rime::rng {
namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

double to_open_unit(std::uint64_t bits) noexcept {
    // 53 random bits, shifted by half an ulp so 0 is never produced.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double box_muller(double u1, double u2) noexcept {
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, Purpose purpose) noexcept {
    return mix64(mix64(seed) ^ (static_cast<std::uint64_t>(purpose) * kGolden));
}

std::uint64_t derive(std::uint64_t key, std::uint64_t index) noexcept {
    return mix64(key ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

std::uint64_t derive(std::uint64_t key, std::uint64_t i, std::uint64_t j) noexcept {
    return derive(derive(key, i), j);
}

Stream::result_type Stream::operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Stream::uniform() noexcept { return to_open_unit((*this)()); }

double Stream::normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return box_muller(u1, u2);
}

std::uint64_t Stream::below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = (*this)();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = (*this)();
            m = static_cast<unsigned __int128>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double normal_at(std::uint64_t key) noexcept {
    const double u1 = to_open_unit(mix64(key));
    const double u2 = to_open_unit(mix64(key ^ 0xD1B54A32D192ED03ULL));
    return box_muller(u1, u2);
}

}  // namespace rime::rng
