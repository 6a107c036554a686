#include "graspsynth/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "graspsynth/error.hpp"

namespace graspsynth {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(fmt::format("short write to {}", path.string()));
}

std::string format_double(double v) {
    if (v == 0.0) return "0";  // no "-0"
    return fmt::format("{}", v);
}

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(std::string_view text, const std::string& source, std::size_t line,
                    std::string_view field) {
    const auto t = trim(text);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ParseError(source, line, fmt::format("field '{}': expected a finite number, got '{}'", field, t));
    }
    return v;
}

std::int64_t parse_int(std::string_view text, const std::string& source, std::size_t line,
                       std::string_view field) {
    const auto t = trim(text);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ParseError(source, line, fmt::format("field '{}': expected an integer, got '{}'", field, t));
    }
    return v;
}

std::uint64_t parse_uint64(std::string_view text, const std::string& source, std::size_t line,
                           std::string_view field) {
    const auto t = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ParseError(source, line,
                         fmt::format("field '{}': expected an unsigned integer, got '{}'", field, t));
    }
    return v;
}

KeyValues KeyValues::parse(std::string_view text, std::string source) {
    KeyValues kv;
    kv.source_ = std::move(source);
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(kv.source_, lineno, "expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError(kv.source_, lineno, "empty key");
        if (kv.entries_.contains(key)) {
            throw ParseError(kv.source_, lineno, fmt::format("duplicate key '{}'", key));
        }
        kv.entries_[key] = Entry{std::string(trim(line.substr(eq + 1))), lineno};
    }
    return kv;
}

const KeyValues::Entry& KeyValues::entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError(source_, 0, fmt::format("missing key '{}'", key));
    return it->second;
}

const std::string& KeyValues::str(const std::string& key) const { return entry(key).value; }

double KeyValues::number(const std::string& key) const {
    const auto& e = entry(key);
    return parse_double(e.value, source_, e.line, key);
}

std::int64_t KeyValues::integer(const std::string& key) const {
    const auto& e = entry(key);
    return parse_int(e.value, source_, e.line, key);
}

std::uint64_t KeyValues::uint64(const std::string& key) const {
    const auto& e = entry(key);
    return parse_uint64(e.value, source_, e.line, key);
}

void write_pgm(const std::filesystem::path& path, const Grid<std::uint16_t>& img, std::uint16_t maxval) {
    std::string buf = fmt::format("P5\n{} {}\n{}\n", img.cols(), img.rows(), maxval);
    const bool wide = maxval > 255;
    buf.reserve(buf.size() + img.size() * (wide ? 2 : 1));
    for (std::uint16_t v : img.data()) {
        if (wide) buf.push_back(static_cast<char>(v >> 8));
        buf.push_back(static_cast<char>(v & 0xff));
    }
    write_text_file(path, buf);
}

PgmImage read_pgm(const std::filesystem::path& path) {
    const std::string data = read_text_file(path);
    const std::string src = path.string();
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return std::string_view(data).substr(start, pos - start);
    };
    if (token() != "P5") throw ParseError(src, 0, "not a binary PGM (P5) file");
    const auto cols = parse_int(token(), src, 0, "width");
    const auto rows = parse_int(token(), src, 0, "height");
    const auto maxval = parse_int(token(), src, 0, "maxval");
    if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) {
        throw ParseError(src, 0, "bad PGM header");
    }
    ++pos;  // single whitespace before raster
    const bool wide = maxval > 255;
    const std::size_t need = static_cast<std::size_t>(rows * cols) * (wide ? 2 : 1);
    if (data.size() < pos + need) throw ParseError(src, 0, "truncated PGM raster");
    PgmImage img{Grid<std::uint16_t>(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)),
                 static_cast<std::uint16_t>(maxval)};
    auto& px = img.pixels.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (wide) {
            px[i] = static_cast<std::uint16_t>((static_cast<unsigned char>(data[pos]) << 8) |
                                               static_cast<unsigned char>(data[pos + 1]));
            pos += 2;
        } else {
            px[i] = static_cast<unsigned char>(data[pos++]);
        }
        if (px[i] > maxval) throw ParseError(src, 0, "sample exceeds maxval");
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const Grid<Rgb>& img) {
    std::string buf = fmt::format("P6\n{} {}\n255\n", img.cols(), img.rows());
    buf.reserve(buf.size() + img.size() * 3);
    for (const Rgb& p : img.data()) {
        for (auto ch : p) buf.push_back(static_cast<char>(ch));
    }
    write_text_file(path, buf);
}

}  // namespace graspsynth
