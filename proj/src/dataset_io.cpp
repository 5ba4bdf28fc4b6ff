#include "rime/dataset_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rime/errors.hpp"
#include "rime/kv_config.hpp"

namespace rime {
namespace {

constexpr std::array<char, 5> kMagic{'R', 'I', 'M', 'M', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("truncated binary header");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
    return v;
}

bool parse_missing(std::string_view tok) { return tok == "*" || tok == "NA"; }

}  // namespace

std::string format_vector(std::span<const double> v) {
    std::string out;
    std::array<char, 40> buf{};
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) out.push_back(',');
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v[j],
                                       std::chars_format::general, 17);
        out.append(buf.data(), res.ptr);
    }
    return out;
}

IncompleteMatrix read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t d = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        constexpr std::string_view prefix = "# dims=";
        if (t.substr(0, prefix.size()) != prefix) {
            throw FormatError("line " + std::to_string(line_no) + ": expected '# dims=<d>' header");
        }
        d = parse_u64(t.substr(prefix.size()), "dims");
        if (d == 0) throw FormatError("dims must be positive");
        break;
    }
    if (d == 0) throw FormatError("empty file");

    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            const auto pos = t.find(',', start);
            const auto tok = trim(t.substr(start, pos == std::string_view::npos ? pos : pos - start));
            ++count;
            if (count > d) break;
            if (parse_missing(tok)) {
                values.push_back(missing_sentinel());
                mask.push_back(0);
            } else {
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
                    throw FormatError("line " + std::to_string(line_no) + ": non-numeric token '" +
                                      std::string(tok) + "'");
                }
                values.push_back(v);
                mask.push_back(1);
            }
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (count != d) {
            throw FormatError("line " + std::to_string(line_no) + ": ragged row (" +
                              std::to_string(count) + " tokens, expected " + std::to_string(d) + ")");
        }
        ++n;
    }
    if (n == 0) throw FormatError("empty file: no data rows");

    IncompleteMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (mask[i * d + j]) m.set(i, j, values[i * d + j]);
        }
    }
    return m;
}

void write_csv(std::ostream& out, const IncompleteMatrix& m) {
    out << "# dims=" << m.n_dims() << '\n';
    std::array<char, 40> buf{};
    std::string line;
    for (std::size_t i = 0; i < m.n_examples(); ++i) {
        line.clear();
        for (std::size_t j = 0; j < m.n_dims(); ++j) {
            if (j) line.push_back(',');
            if (!m.present(i, j)) {
                line.push_back('*');
                continue;
            }
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m.value(i, j),
                                           std::chars_format::general, 17);
            line.append(buf.data(), res.ptr);
        }
        line.push_back('\n');
        out << line;
    }
}

void write_binary(std::ostream& out, const IncompleteMatrix& m) {
    const std::size_t n = m.n_examples();
    const std::size_t d = m.n_dims();
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, n);
    put_u64(out, d);
    const std::size_t stride = (n + 7) / 8;
    std::vector<char> bits(stride * d, 0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (m.present(i, j)) bits[j * stride + i / 8] |= static_cast<char>(1u << (i % 8));
        }
    }
    out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (m.present(i, j)) put_u64(out, std::bit_cast<std::uint64_t>(m.value(i, j)));
        }
    }
}

IncompleteMatrix read_binary(std::istream& in) {
    std::array<char, 5> magic{};
    if (!in.read(magic.data(), magic.size())) throw FormatError("empty file");
    if (magic != kMagic) throw FormatError("bad magic: not an RIMM1 file");
    const std::uint64_t n = get_u64(in);
    const std::uint64_t d = get_u64(in);
    if (n == 0 || d == 0) throw FormatError("binary matrix needs N >= 1 and d >= 1");
    const std::size_t stride = (n + 7) / 8;
    std::vector<unsigned char> bits(stride * d);
    if (!in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()))) {
        throw FormatError("truncated mask");
    }
    IncompleteMatrix m(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            if (bits[j * stride + i / 8] & (1u << (i % 8))) {
                m.set(i, j, std::bit_cast<double>(get_u64(in)));
            }
        }
    }
    return m;
}

IncompleteMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    std::ifstream in(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::in);
    if (!in) throw FormatError("cannot open " + path.string());
    return format == MatrixFormat::binary ? read_binary(in) : read_csv(in);
}

void store_matrix(const IncompleteMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
    std::ofstream out(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::out);
    if (!out) throw FormatError("cannot write " + path.string());
    if (format == MatrixFormat::binary) {
        write_binary(out, m);
    } else {
        write_csv(out, m);
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

MatrixFormat detect_format(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::array<char, 5> magic{};
    in.read(magic.data(), magic.size());
    return (in.gcount() == 5 && magic == kMagic) ? MatrixFormat::binary : MatrixFormat::csv;
}

IncompleteMatrix load_matrix(const std::filesystem::path& path) {
    return load_matrix(path, detect_format(path));
}

}  // namespace rime
