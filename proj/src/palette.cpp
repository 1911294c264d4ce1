#include "batfill/palette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "batfill/error.hpp"
#include "batfill/rng.hpp"

namespace batfill {

double squared_distance(const Color& a, const Color& b) {
    const double dr = a[0] - b[0];
    const double dg = a[1] - b[1];
    const double db = a[2] - b[2];
    return dr * dr + dg * dg + db * db;
}

Color to_color(const Rgb& rgb) { return {double(rgb[0]), double(rgb[1]), double(rgb[2])}; }

Rgb to_rgb(const Color& color) {
    Rgb out{};
    for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(std::round(color[c]), 0.0, 255.0);
        out[c] = static_cast<std::uint8_t>(v);
    }
    return out;
}

int nearest_centroid(const Palette& palette, const Color& color) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < palette.centroids.size(); ++i) {
        const double d = squared_distance(palette.centroids[i], color);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

namespace {

struct WeightedColor {
    Color color;
    double weight;
};

std::vector<WeightedColor> distinct_colors(std::span<const Rgb> pixels) {
    std::map<Rgb, std::size_t> counts;
    for (const Rgb& p : pixels) {
        ++counts[p];
    }
    std::vector<WeightedColor> out;
    out.reserve(counts.size());
    for (const auto& [rgb, n] : counts) {
        out.push_back({to_color(rgb), double(n)});
    }
    return out;
}

std::vector<Color> seed_plus_plus(const std::vector<WeightedColor>& points, std::size_t k, Rng& rng) {
    std::vector<Color> centers;
    centers.reserve(k);

    double total_weight = 0.0;
    for (const auto& p : points) {
        total_weight += p.weight;
    }
    auto pick = [&](const std::vector<double>& mass, double total) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (mass[i] <= 0.0) {
                continue;
            }
            last_positive = i;
            acc += mass[i];
            if (u < acc) {
                return i;
            }
        }
        return last_positive;
    };

    std::vector<double> mass(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        mass[i] = points[i].weight;
    }
    centers.push_back(points[pick(mass, total_weight)].color);

    std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i].color, centers.back()));
            mass[i] = points[i].weight * nearest[i];
            total += mass[i];
        }
        // Distinct colors >= k guarantees a positive total here.
        centers.push_back(points[pick(mass, total)].color);
    }
    return centers;
}

}  // namespace

Palette fit_palette(std::span<const Rgb> pixels, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
    require(!pixels.empty(), "fit_palette: empty pixel set");
    require(k >= 1, "fit_palette: k must be at least 1");
    const std::vector<WeightedColor> points = distinct_colors(pixels);
    if (k > points.size()) {
        fail("insufficient colors: k=" + std::to_string(k) + " but only " + std::to_string(points.size()) +
             " distinct colors");
    }

    Rng rng(seed);
    Palette palette{seed_plus_plus(points, k, rng)};

    const std::size_t n = points.size();
    std::vector<int> assignment(n, -1);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = nearest_centroid(palette, points[i].color);
            if (c != assignment[i]) {
                assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }

        std::vector<Color> sums(k, Color{0.0, 0.0, 0.0});
        std::vector<double> weights(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assignment[i]);
            for (std::size_t ch = 0; ch < 3; ++ch) {
                sums[c][ch] += points[i].weight * points[i].color[ch];
            }
            weights[c] += points[i].weight;
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (weights[c] > 0.0) {
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    palette.centroids[c][ch] = sums[c][ch] / weights[c];
                }
            }
        }

        // Empty clusters and coincident centroids get the point farthest
        // from its current centroid; that point is taken out of the candidate
        // pool so two reseeds never land on the same color.
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            bool degenerate = weights[c] == 0.0;
            for (std::size_t j = 0; j < c && !degenerate; ++j) {
                degenerate = palette.centroids[j] == palette.centroids[c];
            }
            if (!degenerate) {
                continue;
            }
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) {
                    continue;
                }
                const double d =
                    squared_distance(points[i].color, palette.centroids[static_cast<std::size_t>(assignment[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < n) {
                taken[far] = true;
                palette.centroids[c] = points[far].color;
            }
        }
    }
    return palette;
}

TokenGrid encode(const RgbGrid& image, const Palette& palette) {
    require(palette.k() >= 1, "encode: empty palette");
    TokenGrid out(image.height, image.width);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        out.tokens[i] = nearest_centroid(palette, to_color(image.pixels[i]));
    }
    return out;
}

RgbGrid decode(const TokenGrid& tokens, const Palette& palette) {
    RgbGrid out(tokens.height, tokens.width);
    for (std::size_t i = 0; i < tokens.tokens.size(); ++i) {
        const int t = tokens.tokens[i];
        if (t < 0 || static_cast<std::size_t>(t) >= palette.k()) {
            fail("decode: token id " + std::to_string(t) + " out of range for palette of size " +
                 std::to_string(palette.k()));
        }
        out.pixels[i] = to_rgb(palette.centroids[static_cast<std::size_t>(t)]);
    }
    return out;
}

}  // namespace batfill
