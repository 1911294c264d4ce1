#include "batfill/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "batfill/error.hpp"

namespace batfill {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
    out << text;
    require(static_cast<bool>(out), "failed writing " + path.string());
}

namespace {

void write_binary(const fs::path& path, const std::string& header, const std::vector<std::uint8_t>& body) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
    out << header;
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    require(static_cast<bool>(out), "failed writing " + path.string());
}

// Parses a netpbm header ("P6 <w> <h> <maxval>" with comments) and returns
// the offset of the first raster byte.
struct NetpbmHeader {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm(const std::vector<std::uint8_t>& bytes, const char* magic, const fs::path& path) {
    std::size_t pos = 0;
    auto skip_space = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto token = [&]() {
        skip_space();
        std::string s;
        while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
            s.push_back(static_cast<char>(bytes[pos++]));
        }
        return s;
    };
    auto number = [&](const char* what) {
        const std::string s = token();
        require(!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(c); }),
                path.string() + ": bad " + what + " in header");
        return static_cast<std::size_t>(std::stoul(s));
    };
    require(token() == magic, path.string() + ": expected " + magic + " header");
    NetpbmHeader h;
    h.width = number("width");
    h.height = number("height");
    const std::size_t maxval = number("maxval");
    require(maxval == 255, path.string() + ": only maxval 255 is supported");
    require(pos < bytes.size() && std::isspace(bytes[pos]), path.string() + ": malformed header");
    h.data_offset = pos + 1;
    require(h.width > 0 && h.height > 0, path.string() + ": empty image");
    return h;
}

}  // namespace

void write_ppm(const fs::path& path, const RgbGrid& image) {
    require(image.pixels.size() == image.height * image.width, "write_ppm: pixel count does not match dimensions");
    std::vector<std::uint8_t> body;
    body.reserve(image.pixels.size() * 3);
    for (const Rgb& p : image.pixels) {
        body.insert(body.end(), p.begin(), p.end());
    }
    write_binary(path, "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n", body);
}

RgbGrid read_ppm(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const NetpbmHeader h = parse_netpbm(bytes, "P6", path);
    const std::size_t n = h.width * h.height;
    require(bytes.size() - h.data_offset >= n * 3, path.string() + ": truncated raster");
    RgbGrid image(h.height, h.width);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            image.pixels[i][c] = bytes[h.data_offset + i * 3 + c];
        }
    }
    return image;
}

void write_pgm(const fs::path& path, const MaskGrid& mask) {
    std::vector<std::uint8_t> body(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        body[i] = mask.is_missing(i) ? 255 : 0;
    }
    write_binary(path, "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n", body);
}

MaskGrid read_pgm(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const NetpbmHeader h = parse_netpbm(bytes, "P5", path);
    const std::size_t n = h.width * h.height;
    require(bytes.size() - h.data_offset >= n, path.string() + ": truncated raster");
    MaskGrid mask(h.height, h.width);
    for (std::size_t i = 0; i < n; ++i) {
        mask.set(i, bytes[h.data_offset + i] != 0);
    }
    return mask;
}

std::string format_palette(const Palette& palette) {
    std::ostringstream out;
    out << "BATPAL 1\n" << palette.k() << "\n";
    for (const Color& c : palette.centroids) {
        const Rgb rgb = to_rgb(c);
        out << int(rgb[0]) << ' ' << int(rgb[1]) << ' ' << int(rgb[2]) << "\n";
    }
    return out.str();
}

Palette parse_palette(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    std::size_t k = 0;
    in >> magic >> version >> k;
    require(in && magic == "BATPAL" && version == 1, "palette: expected header 'BATPAL 1'");
    require(k >= 1, "palette: k must be at least 1");
    Palette palette;
    for (std::size_t i = 0; i < k; ++i) {
        int r = -1, g = -1, b = -1;
        in >> r >> g >> b;
        require(static_cast<bool>(in), "palette: expected " + std::to_string(k) + " colors, got " + std::to_string(i));
        for (int v : {r, g, b}) {
            require(v >= 0 && v <= 255, "palette: channel value " + std::to_string(v) + " outside [0, 255]");
        }
        palette.centroids.push_back({double(r), double(g), double(b)});
    }
    std::string rest;
    require(!(in >> rest), "palette: trailing content");
    return palette;
}

void write_palette(const fs::path& path, const Palette& palette) { write_text(path, format_palette(palette)); }

Palette read_palette(const fs::path& path) {
    try {
        return parse_palette(read_text(path));
    } catch (const Error& e) {
        fail(path.string() + ": " + e.what());
    }
}

std::string format_tokens(const TokenGrid& tokens, std::size_t k) {
    std::ostringstream out;
    out << "BATTOK 1 " << tokens.height << ' ' << tokens.width << ' ' << k << "\n";
    for (std::size_t r = 0; r < tokens.height; ++r) {
        for (std::size_t c = 0; c < tokens.width; ++c) {
            out << (c ? " " : "") << tokens.at(r, c);
        }
        out << "\n";
    }
    return out.str();
}

TokenGrid parse_tokens(const std::string& text, std::size_t* k_out) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    std::size_t h = 0, w = 0, k = 0;
    in >> magic >> version >> h >> w >> k;
    require(in && magic == "BATTOK" && version == 1, "token grid: expected header 'BATTOK 1 <h> <w> <k>'");
    require(h > 0 && w > 0 && k > 0, "token grid: dimensions and k must be positive");
    TokenGrid grid(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        long long v = -1;
        in >> v;
        require(static_cast<bool>(in), "token grid: expected " + std::to_string(h * w) + " ids");
        require(v >= 0 && std::size_t(v) < k, "token grid: id " + std::to_string(v) + " not below k=" + std::to_string(k));
        grid.tokens[i] = static_cast<int>(v);
    }
    std::string rest;
    require(!(in >> rest), "token grid: trailing content");
    if (k_out != nullptr) {
        *k_out = k;
    }
    return grid;
}

void write_tokens(const fs::path& path, const TokenGrid& tokens, std::size_t k) {
    write_text(path, format_tokens(tokens, k));
}

TokenGrid read_tokens(const fs::path& path, std::size_t* k) {
    try {
        return parse_tokens(read_text(path), k);
    } catch (const Error& e) {
        fail(path.string() + ": " + e.what());
    }
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    require(fs::is_directory(dir), "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string file_hash(const fs::path& path) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : read_bytes(path)) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace batfill
