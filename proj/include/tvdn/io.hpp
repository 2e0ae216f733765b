#pragma once

// File formats: one-column CSV for 1D signals and Lambda samples, PGM (P2 and
// P5) for images, and JSON reports.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvdn/error.hpp"
#include "tvdn/extreme_value.hpp"
#include "tvdn/grid.hpp"

namespace tvdn {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << data;
    if (!out) throw InputError("failed writing " + path);
}

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

inline double parse_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw InputError("not a finite number at " + where + ": '" + text + "'");
    return v;
}

// Shortest representation that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

// One value per row under a single header line naming the column.
inline std::vector<double> read_column_csv(const std::string& path, const std::string& header) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    std::vector<double> values;
    bool seen_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;
        if (!seen_header) {
            seen_header = true;
            if (line == header) continue;
            throw InputError(path + ": expected header '" + header + "', got '" + line + "'");
        }
        values.push_back(detail::parse_double(line, path + ":" + std::to_string(line_no)));
    }
    if (!seen_header) throw InputError(path + ": empty file");
    return values;
}

inline std::string column_csv(const std::string& header, std::span<const double> values) {
    std::string out = header + "\n";
    for (double v : values) out += detail::format_double(v) + "\n";
    return out;
}

inline Signal read_signal_csv(const std::string& path) {
    auto v = read_column_csv(path, "value");
    require(!v.empty(), path + ": no values");
    return Signal::line(std::move(v));
}

inline void write_signal_csv(const std::string& path, const Signal& f) {
    detail::write_file(path, column_csv("value", f.values));
}

inline std::vector<double> read_lambda_csv(const std::string& path) { return read_column_csv(path, "lambda"); }

inline void write_lambda_csv(const std::string& path, std::span<const double> samples) {
    detail::write_file(path, column_csv("lambda", samples));
}

// Two columns with a header row.
inline std::string two_column_csv(const std::string& a, const std::string& b, std::span<const double> x,
                                  std::span<const double> y) {
    require(x.size() == y.size(), "CSV columns differ in length");
    std::string out = a + "," + b + "\n";
    for (std::size_t i = 0; i < x.size(); ++i)
        out += detail::format_double(x[i]) + "," + detail::format_double(y[i]) + "\n";
    return out;
}

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    unsigned maxval = 255;
    bool binary = true;           // P5 when true, P2 otherwise
    std::vector<unsigned> pixels; // row-major, width fastest
};

namespace detail {

// Header tokens, skipping whitespace and '#' comments. Leaves `pos` on the
// character after the last token.
inline std::string pgm_token(const std::string& data, std::size_t& pos) {
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
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#') ++pos;
    if (start == pos) throw InputError("PGM: unexpected end of header");
    return data.substr(start, pos - start);
}

inline std::size_t pgm_number(const std::string& data, std::size_t& pos, const char* what) {
    const auto tok = pgm_token(data, pos);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw InputError(std::string("PGM: bad ") + what);
    return v;
}

}  // namespace detail

inline PgmImage parse_pgm(const std::string& data) {
    std::size_t pos = 0;
    const auto magic = detail::pgm_token(data, pos);
    if (magic != "P2" && magic != "P5") throw InputError("PGM: magic must be P2 or P5");
    PgmImage img;
    img.binary = magic == "P5";
    img.width = detail::pgm_number(data, pos, "width");
    img.height = detail::pgm_number(data, pos, "height");
    const std::size_t maxval = detail::pgm_number(data, pos, "maxval");
    require(img.width > 0 && img.height > 0, "PGM: empty image");
    require(maxval >= 1 && maxval <= 65535, "PGM: maxval must be in [1, 65535]");
    img.maxval = static_cast<unsigned>(maxval);
    const std::size_t n = img.width * img.height;
    img.pixels.resize(n);
    if (img.binary) {
        // Exactly one whitespace byte separates the header from the raster.
        if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
            throw InputError("PGM: missing raster separator");
        ++pos;
        const std::size_t bytes = img.maxval > 255 ? 2 : 1;
        if (data.size() - pos < n * bytes) throw InputError("PGM: truncated raster");
        for (std::size_t i = 0; i < n; ++i) {
            const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos + i * bytes);
            img.pixels[i] = bytes == 2 ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<unsigned>(detail::pgm_number(data, pos, "pixel"));
    }
    for (unsigned v : img.pixels) require(v <= img.maxval, "PGM: pixel exceeds maxval");
    return img;
}

// Canonical header "P5\n<w> <h>\n<maxval>\n"; P2 rows hold one image row.
inline std::string format_pgm(const PgmImage& img) {
    require(img.pixels.size() == img.width * img.height, "PGM: pixel count does not match size");
    std::string out = (img.binary ? "P5\n" : "P2\n") + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n" + std::to_string(img.maxval) + "\n";
    if (img.binary) {
        const bool wide = img.maxval > 255;
        out.reserve(out.size() + img.pixels.size() * (wide ? 2 : 1));
        for (unsigned v : img.pixels) {
            if (wide) out.push_back(static_cast<char>((v >> 8) & 0xff));
            out.push_back(static_cast<char>(v & 0xff));
        }
    } else {
        for (std::size_t r = 0; r < img.height; ++r) {
            for (std::size_t c = 0; c < img.width; ++c) {
                if (c) out += ' ';
                out += std::to_string(img.pixels[r * img.width + c]);
            }
            out += '\n';
        }
    }
    return out;
}

inline PgmImage read_pgm(const std::string& path) { return parse_pgm(detail::read_file(path)); }

inline void write_pgm(const std::string& path, const PgmImage& img) { detail::write_file(path, format_pgm(img)); }

// Lattice {width, height}; intensities are taken as reals in [0, maxval].
inline Signal pgm_to_signal(const PgmImage& img) {
    std::vector<double> v(img.pixels.begin(), img.pixels.end());
    return Signal(LatticeShape({img.width, img.height}), std::move(v));
}

// Rounds and clamps to [0, maxval].
inline PgmImage signal_to_pgm(const Signal& f, unsigned maxval = 255, bool binary = true) {
    require(f.shape.dims() == 2, "PGM output needs a two-dimensional signal");
    PgmImage img;
    img.width = f.shape.size(0);
    img.height = f.shape.size(1);
    img.maxval = maxval;
    img.binary = binary;
    img.pixels.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        img.pixels[i] = static_cast<unsigned>(std::clamp(std::round(f[i]), 0.0, static_cast<double>(maxval)));
    return img;
}

inline bool has_pgm_extension(const std::string& path) {
    if (path.size() < 4) return false;
    std::string ext = path.substr(path.size() - 4);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm";
}

inline json read_json(const std::string& path) {
    try {
        return json::parse(detail::read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline void write_json(const std::string& path, const json& j) { detail::write_file(path, j.dump(2) + "\n"); }

// Fit file: per-size Gumbel parameters and the log-log coefficients.
struct LambdaFitFile {
    int dim = 2;
    std::vector<double> n_values;
    std::vector<double> mu;
    std::vector<double> beta;
    GumbelFitCoefficients coefficients;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

inline json to_json(const LambdaFitFile& f) {
    json j;
    j["schema_version"] = schema_version;
    j["dim"] = f.dim;
    j["n_values"] = f.n_values;
    j["mu"] = f.mu;
    j["beta"] = f.beta;
    j["a_mu"] = f.coefficients.a_mu;
    j["b_mu"] = f.coefficients.b_mu;
    j["a_beta"] = f.coefficients.a_beta;
    j["b_beta"] = f.coefficients.b_beta;
    j["reps"] = f.reps;
    j["seed"] = f.seed;
    return j;
}

// Reads the coefficients of a fit file; the per-size arrays are optional.
inline GumbelFitCoefficients read_coefficients(const std::string& path) {
    const auto j = read_json(path);
    GumbelFitCoefficients c;
    try {
        c.dim = j.at("dim").get<int>();
        c.a_mu = j.at("a_mu").get<double>();
        c.b_mu = j.at("b_mu").get<double>();
        c.a_beta = j.at("a_beta").get<double>();
        c.b_beta = j.at("b_beta").get<double>();
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    for (double v : {c.a_mu, c.b_mu, c.a_beta, c.b_beta}) require(std::isfinite(v), path + ": non-finite coefficient");
    return c;
}

}  // namespace tvdn
