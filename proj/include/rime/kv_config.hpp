#pragma once

// Flat `key = value` text files used for scenarios and experiment specs.
// Blank lines and lines starting with '#' are ignored. Keys are unique.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rime {

class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(std::string_view text);
    static KvConfig load(const std::filesystem::path& path);

    bool has(std::string_view key) const;
    void set(std::string key, std::string value) { entries_[std::move(key)] = std::move(value); }

    std::string get_string(std::string_view key) const;
    std::string get_string(std::string_view key, std::string_view fallback) const;
    double get_double(std::string_view key) const;
    double get_double(std::string_view key, double fallback) const;
    std::uint64_t get_u64(std::string_view key) const;
    std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;

    // Comma-separated list; empty when the key is absent.
    std::vector<std::string> get_list(std::string_view key) const;
    std::vector<double> get_double_list(std::string_view key) const;
    std::vector<std::uint64_t> get_u64_list(std::string_view key) const;

    const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

double parse_double(std::string_view token, std::string_view what);
std::uint64_t parse_u64(std::string_view token, std::string_view what);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view s);

}  // namespace rime
