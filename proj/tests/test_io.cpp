#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tvdn/io.hpp"

using namespace tvdn;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "tvdn_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_raw(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    out << data;
}

std::string read_raw(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Csv, SignalRoundTripIsExact) {
    const auto f = Signal::line({0.1, -2.5e-300, 1.0 / 3.0, 12345678.9, -0.0});
    const auto p = temp_path("signal.csv");
    write_signal_csv(p, f);
    const auto g = read_signal_csv(p);
    EXPECT_EQ(g.values, f.values);
    EXPECT_EQ(read_raw(p).substr(0, 6), "value\n");
}

TEST(Csv, RejectsMalformedInput) {
    const auto p = temp_path("bad.csv");
    write_raw(p, "value\n1.0\nabc\n");
    EXPECT_THROW(read_signal_csv(p), InputError);
    write_raw(p, "x\n1.0\n");
    EXPECT_THROW(read_signal_csv(p), InputError);
    write_raw(p, "value\n");
    EXPECT_THROW(read_signal_csv(p), InputError);
    write_raw(p, "value\nnan\n");
    EXPECT_THROW(read_signal_csv(p), InputError);
    EXPECT_THROW(read_signal_csv(temp_path("missing.csv")), InputError);
}

TEST(Csv, ToleratesCrlfAndBlankLines) {
    const auto p = temp_path("crlf.csv");
    write_raw(p, "value\r\n1.5\r\n\r\n+2\r\n");
    EXPECT_EQ(read_signal_csv(p).values, (std::vector<double>{1.5, 2.0}));
}

TEST(Csv, LambdaSamples) {
    const auto p = temp_path("lambda.csv");
    const std::vector<double> s = {1.25, 0.5, 3.0};
    write_lambda_csv(p, s);
    EXPECT_EQ(read_raw(p), "lambda\n1.25\n0.5\n3\n");
    EXPECT_EQ(read_lambda_csv(p), s);
    EXPECT_EQ(two_column_csv("lambda", "value", std::vector<double>{1, 2}, std::vector<double>{0.5, 0.25}),
              "lambda,value\n1,0.5\n2,0.25\n");
}

TEST(Pgm, P5RoundTripIsByteIdentical) {
    std::string data = "P5\n3 2\n255\n";
    for (unsigned char c : {0, 10, 255, 7, 128, 32}) data.push_back(static_cast<char>(c));
    const auto img = parse_pgm(data);
    EXPECT_EQ(img.width, 3u);
    EXPECT_EQ(img.height, 2u);
    EXPECT_EQ(img.pixels, (std::vector<unsigned>{0, 10, 255, 7, 128, 32}));
    EXPECT_EQ(format_pgm(img), data);
}

TEST(Pgm, SixteenBitBigEndian) {
    std::string data = "P5\n2 1\n65535\n";
    for (unsigned char c : {0x01, 0x02, 0xff, 0xfe}) data.push_back(static_cast<char>(c));
    const auto img = parse_pgm(data);
    EXPECT_EQ(img.pixels, (std::vector<unsigned>{0x0102, 0xfffe}));
    EXPECT_EQ(format_pgm(img), data);
}

TEST(Pgm, CommentsAndP2Canonicalization) {
    const std::string messy = "P2 # comment\n# another\n3   2\n  9\n1 2\n3\n4 5 6\n";
    const auto img = parse_pgm(messy);
    EXPECT_FALSE(img.binary);
    EXPECT_EQ(img.maxval, 9u);
    EXPECT_EQ(img.pixels, (std::vector<unsigned>{1, 2, 3, 4, 5, 6}));
    const auto canonical = format_pgm(img);
    EXPECT_EQ(canonical, "P2\n3 2\n9\n1 2 3\n4 5 6\n");
    EXPECT_EQ(format_pgm(parse_pgm(canonical)), canonical);
}

TEST(Pgm, RejectsMalformed) {
    EXPECT_THROW(parse_pgm("P6\n1 1\n255\n\x01"), InputError);
    EXPECT_THROW(parse_pgm("P5\n2 2\n255\n\x01"), InputError);
    EXPECT_THROW(parse_pgm("P2\n1 1\n9\n10\n"), InputError);
    EXPECT_THROW(parse_pgm("P2\n0 1\n9\n"), InputError);
    EXPECT_THROW(parse_pgm("P2\n1 1\n70000\n1\n"), InputError);
    EXPECT_THROW(parse_pgm("P2\n2 1\n9\n1\n"), InputError);
}

TEST(Pgm, SignalConversion) {
    PgmImage img;
    img.width = 3;
    img.height = 2;
    img.pixels = {0, 1, 2, 3, 4, 5};
    const auto s = pgm_to_signal(img);
    EXPECT_EQ(s.shape.size(0), 3u);
    EXPECT_EQ(s.shape.size(1), 2u);
    EXPECT_EQ(s.values, (std::vector<double>{0, 1, 2, 3, 4, 5}));
    const Signal g(s.shape, {-4.0, 0.49, 0.5, 254.6, 300.0, 17.2});
    EXPECT_EQ(signal_to_pgm(g).pixels, (std::vector<unsigned>{0, 0, 1, 255, 255, 17}));
    EXPECT_THROW(signal_to_pgm(Signal::line({1, 2})), InputError);
}

TEST(Pgm, FileRoundTrip) {
    const auto p = temp_path("img.pgm");
    PgmImage img;
    img.width = 4;
    img.height = 3;
    img.maxval = 65535;
    for (unsigned i = 0; i < 12; ++i) img.pixels.push_back(i * 5000u);
    write_pgm(p, img);
    const auto bytes = read_raw(p);
    EXPECT_EQ(format_pgm(read_pgm(p)), bytes);
    EXPECT_TRUE(has_pgm_extension("a/b.PGM"));
    EXPECT_FALSE(has_pgm_extension("a.csv"));
}

TEST(Json, FitFileCarriesSchemaAndCoefficients) {
    LambdaFitFile f;
    f.dim = 2;
    f.n_values = {8, 16};
    f.mu = {0.9, 1.0};
    f.beta = {0.1, 0.09};
    f.coefficients = {-0.4, 0.55, -1.5, -0.25, 2};
    f.reps = 200;
    f.seed = 3;
    const auto j = to_json(f);
    EXPECT_EQ(j["schema_version"], schema_version);
    const auto p = temp_path("fit.json");
    write_json(p, j);
    const auto c = read_coefficients(p);
    EXPECT_EQ(c.dim, 2);
    EXPECT_EQ(c.a_mu, -0.4);
    EXPECT_EQ(c.b_beta, -0.25);
    std::vector<std::string> keys;
    const auto back = read_json(p);
    for (const auto& [k, v] : back.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "dim", "n_values", "mu", "beta", "a_mu", "b_mu",
                                               "a_beta", "b_beta", "reps", "seed"}));
}

TEST(Json, CoefficientErrors) {
    const auto p = temp_path("bad.json");
    write_raw(p, "{\"dim\": 2}");
    EXPECT_THROW(read_coefficients(p), InputError);
    write_raw(p, "{not json");
    EXPECT_THROW(read_coefficients(p), InputError);
}
