#include "rime/kv_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rime/errors.hpp"

namespace rime {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view token, std::string_view what) {
    token = trim(token);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw FormatError("invalid number for " + std::string(what) + ": '" + std::string(token) +
                          "'");
    }
    return value;
}

std::uint64_t parse_u64(std::string_view token, std::string_view what) {
    token = trim(token);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw FormatError("invalid integer for " + std::string(what) + ": '" + std::string(token) +
                          "'");
    }
    return value;
}

KvConfig KvConfig::parse(std::string_view text) {
    KvConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError("line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw FormatError("line " + std::to_string(line_no) + ": empty key");
        if (cfg.entries_.count(key)) {
            throw FormatError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        cfg.entries_.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
        if (end == text.size()) break;
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool KvConfig::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::string KvConfig::get_string(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw FormatError("missing key '" + std::string(key) + "'");
    return it->second;
}

std::string KvConfig::get_string(std::string_view key, std::string_view fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? std::string(fallback) : it->second;
}

double KvConfig::get_double(std::string_view key) const { return parse_double(get_string(key), key); }

double KvConfig::get_double(std::string_view key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KvConfig::get_u64(std::string_view key) const { return parse_u64(get_string(key), key); }

std::uint64_t KvConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

std::vector<std::string> KvConfig::get_list(std::string_view key) const {
    if (!has(key)) return {};
    return split(get_string(key), ',');
}

std::vector<double> KvConfig::get_double_list(std::string_view key) const {
    std::vector<double> out;
    for (const auto& t : get_list(key)) out.push_back(parse_double(t, key));
    return out;
}

std::vector<std::uint64_t> KvConfig::get_u64_list(std::string_view key) const {
    std::vector<std::uint64_t> out;
    for (const auto& t : get_list(key)) out.push_back(parse_u64(t, key));
    return out;
}

}  // namespace rime
