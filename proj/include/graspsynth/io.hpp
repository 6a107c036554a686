#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "graspsynth/grid.hpp"

namespace graspsynth {

std::string read_text_file(const std::filesystem::path& path);
/// Writes the whole file, replacing any existing content. Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Strict number parsing: the whole field must be consumed.
double parse_double(std::string_view text, const std::string& source, std::size_t line,
                    std::string_view field);
std::int64_t parse_int(std::string_view text, const std::string& source, std::size_t line,
                       std::string_view field);
std::uint64_t parse_uint64(std::string_view text, const std::string& source, std::size_t line,
                           std::string_view field);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// `key = value` document. Blank lines and lines starting with '#' are ignored.
class KeyValues {
public:
    static KeyValues parse(std::string_view text, std::string source);

    bool contains(const std::string& key) const { return entries_.contains(key); }
    const std::string& str(const std::string& key) const;
    double number(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::uint64_t uint64(const std::string& key) const;

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };
    const Entry& entry(const std::string& key) const;

    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// Binary PGM (P5). Samples are two bytes big-endian when maxval > 255.
void write_pgm(const std::filesystem::path& path, const Grid<std::uint16_t>& img, std::uint16_t maxval);
struct PgmImage {
    Grid<std::uint16_t> pixels;
    std::uint16_t maxval = 0;
};
PgmImage read_pgm(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;
/// Binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const Grid<Rgb>& img);

}  // namespace graspsynth
