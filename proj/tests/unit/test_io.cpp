#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "graspsynth/error.hpp"
#include "graspsynth/io.hpp"
#include "support.hpp"

using namespace graspsynth;

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(-0.0), "0");
    EXPECT_EQ(format_double(1.5), "1.5");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(100.0), "100");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        EXPECT_EQ(parse_double(format_double(v), "t", 1, "v"), v);
    }
}

TEST(ParseNumbers, Strict) {
    EXPECT_DOUBLE_EQ(parse_double("2.5", "f", 1, "x"), 2.5);
    EXPECT_DOUBLE_EQ(parse_double(" 2.5 ", "f", 1, "x"), 2.5);
    EXPECT_THROW(parse_double("2.5abc", "f", 3, "x"), ParseError);
    EXPECT_THROW(parse_double("", "f", 3, "x"), ParseError);
    EXPECT_THROW(parse_double("nan", "f", 3, "x"), ParseError);
    EXPECT_THROW(parse_int("1.5", "f", 3, "x"), ParseError);
    EXPECT_EQ(parse_int("-42", "f", 1, "x"), -42);
    EXPECT_EQ(parse_uint64("18446744073709551615", "f", 1, "x"), 18446744073709551615ULL);
    try {
        parse_double("zz", "file.txt", 7, "theta");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 7u);
        EXPECT_NE(std::string(e.what()).find("file.txt:7"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("theta"), std::string::npos);
    }
}

TEST(Split, KeepsEmptyFields) {
    const auto f = split("a;;b;", ';');
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[0], "a");
    EXPECT_EQ(f[1], "");
    EXPECT_EQ(f[2], "b");
    EXPECT_EQ(f[3], "");
}

TEST(KeyValues, ParseAndLookup) {
    const auto kv = KeyValues::parse("# comment\nid = box\n\nresolution = 0.002\nrows=3\n", "m.meta");
    EXPECT_EQ(kv.str("id"), "box");
    EXPECT_DOUBLE_EQ(kv.number("resolution"), 0.002);
    EXPECT_EQ(kv.integer("rows"), 3);
    EXPECT_FALSE(kv.contains("cols"));
    EXPECT_THROW(kv.str("cols"), ParseError);
    EXPECT_THROW(KeyValues::parse("no separator here\n", "m.meta"), ParseError);
    EXPECT_THROW(KeyValues::parse("a = 1\na = 2\n", "m.meta"), ParseError);
}

TEST(Pgm, SixteenBitRoundTrip) {
    test::TempDir dir("pgm");
    Grid<std::uint16_t> img(3, 4);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) img(r, c) = static_cast<std::uint16_t>(r * 20000 + c * 7);
    write_pgm(dir / "a.pgm", img, 65535);
    const auto back = read_pgm(dir / "a.pgm");
    EXPECT_EQ(back.maxval, 65535);
    EXPECT_EQ(back.pixels, img);
    const std::string raw = read_text_file(dir / "a.pgm");
    EXPECT_EQ(raw.substr(0, 2), "P5");
    // big-endian samples: first pixel 0, second pixel 7
    EXPECT_EQ(static_cast<unsigned char>(raw[raw.size() - 24 + 3]), 7);
}

TEST(Pgm, EightBitRoundTrip) {
    test::TempDir dir("pgm8");
    Grid<std::uint16_t> img(2, 2);
    img(0, 1) = 1;
    img(1, 0) = 1;
    write_pgm(dir / "m.pgm", img, 1);
    const auto back = read_pgm(dir / "m.pgm");
    EXPECT_EQ(back.maxval, 1);
    EXPECT_EQ(back.pixels, img);
    EXPECT_THROW(read_pgm(dir / "missing.pgm"), NotFoundError);
    write_text_file(dir / "bad.pgm", "P2\n1 1\n255\n0\n");
    EXPECT_THROW(read_pgm(dir / "bad.pgm"), ParseError);
}

TEST(TextFile, MissingAndUnwritable) {
    EXPECT_THROW(read_text_file("/nonexistent/graspsynth/x.txt"), NotFoundError);
    EXPECT_THROW(write_text_file("/proc/graspsynth-not-writable/x.txt", "x"), IoError);
}
