#include "mtcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtcn/prng.hpp"

namespace mtcn {

namespace {

constexpr double kPi = 3.14159265358979323846;

class Canvas {
public:
    explicit Canvas(std::size_t n) : n_(n), px_(n * n, 0.0) {}

    // Additive splat with a soft square footprint of the given radius.
    void splat(double y, double x, double radius, double intensity) {
        const int r0 = static_cast<int>(std::floor(y - radius));
        const int r1 = static_cast<int>(std::ceil(y + radius));
        const int c0 = static_cast<int>(std::floor(x - radius));
        const int c1 = static_cast<int>(std::ceil(x + radius));
        for (int r = r0; r <= r1; ++r) {
            if (r < 0 || r >= static_cast<int>(n_)) continue;
            for (int c = c0; c <= c1; ++c) {
                if (c < 0 || c >= static_cast<int>(n_)) continue;
                const double dy = y - r, dx = x - c;
                const double d2 = dy * dy + dx * dx;
                const double w = std::exp(-d2 / (2.0 * radius * radius * 0.36 + 1e-9));
                px_[static_cast<std::size_t>(r) * n_ + c] += intensity * w;
            }
        }
    }

    void blur3() {
        // Separable binomial [1 2 1]/4, one pass.
        std::vector<double> tmp(px_.size());
        for (std::size_t r = 0; r < n_; ++r) {
            for (std::size_t c = 0; c < n_; ++c) {
                const double l = c > 0 ? px_[r * n_ + c - 1] : px_[r * n_ + c];
                const double m = px_[r * n_ + c];
                const double rr = c + 1 < n_ ? px_[r * n_ + c + 1] : px_[r * n_ + c];
                tmp[r * n_ + c] = 0.25 * l + 0.5 * m + 0.25 * rr;
            }
        }
        for (std::size_t c = 0; c < n_; ++c) {
            for (std::size_t r = 0; r < n_; ++r) {
                const double u = r > 0 ? tmp[(r - 1) * n_ + c] : tmp[r * n_ + c];
                const double m = tmp[r * n_ + c];
                const double d = r + 1 < n_ ? tmp[(r + 1) * n_ + c] : tmp[r * n_ + c];
                px_[r * n_ + c] = 0.25 * u + 0.5 * m + 0.25 * d;
            }
        }
    }

    GrayImage finish(Prng& rng, double noise_amp) {
        GrayImage img;
        img.width = img.height = n_;
        img.maxval = 255;
        img.pixels.resize(px_.size());
        for (std::size_t i = 0; i < px_.size(); ++i) {
            double v = px_[i] + rng.uniform(-noise_amp, noise_amp);
            img.pixels[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 255.0));
        }
        return img;
    }

private:
    std::size_t n_;
    std::vector<double> px_;
};

// A filament is traced as a polyline with per-step curvature.
void draw_filament(Canvas& canvas, double y, double x, double angle, double length,
                   double curvature, double width, double intensity) {
    const double step = 0.5;
    const int n_steps = static_cast<int>(length / step);
    for (int i = 0; i < n_steps; ++i) {
        canvas.splat(y, x, width, intensity);
        y += step * std::sin(angle);
        x += step * std::cos(angle);
        angle += curvature * step;
    }
}

} // namespace

Sample synth_generate(Label label, std::uint64_t seed, std::size_t size) {
    if (size < 64) throw ConfigError("synth_generate: size must be >= 64");
    // Fold the class into the stream so each (class, seed) pair is distinct.
    Prng rng(seed ^ (0x51ed2701u * (static_cast<std::uint64_t>(label) + 1)), Stream::Synth);
    Canvas canvas(size);
    const double n = static_cast<double>(size);
    const double cy = n * rng.uniform(0.40, 0.60);
    const double cx = n * rng.uniform(0.40, 0.60);
    const double radius = n * rng.uniform(0.30, 0.42);

    switch (label) {
    case Label::C0: {
        // Radial network: many thin, nearly straight filaments from the center.
        const int n_lines = 40 + static_cast<int>(rng.next_below(21));
        for (int i = 0; i < n_lines; ++i) {
            const double angle = rng.uniform(0.0, 2.0 * kPi);
            const double len = radius * rng.uniform(0.7, 1.0);
            const double curv = rng.uniform(-0.002, 0.002);
            draw_filament(canvas, cy, cx, angle, len, curv, 0.7, rng.uniform(35.0, 55.0));
        }
        break;
    }
    case Label::C01: {
        // Mild disruption: fewer, thicker, visibly curved filaments, some
        // starting away from the center.
        const int n_lines = 18 + static_cast<int>(rng.next_below(8));
        for (int i = 0; i < n_lines; ++i) {
            const double a0 = rng.uniform(0.0, 2.0 * kPi);
            const double off = radius * rng.uniform(0.0, 0.35);
            const double y = cy + off * std::sin(a0);
            const double x = cx + off * std::cos(a0);
            const double len = radius * rng.uniform(0.8, 1.3);
            const double curv = rng.uniform(0.015, 0.035) * (rng.next_below(2) ? 1.0 : -1.0);
            draw_filament(canvas, y, x, a0, len, curv, 1.3, rng.uniform(40.0, 60.0));
        }
        break;
    }
    case Label::C1: {
        // Heavy bundling: a few thick, strongly curved strands, each a
        // bundle of offset parallel filaments, tangled around the center.
        const int n_bundles = 6 + static_cast<int>(rng.next_below(4));
        for (int b = 0; b < n_bundles; ++b) {
            const double a0 = rng.uniform(0.0, 2.0 * kPi);
            const double off = radius * rng.uniform(0.2, 0.6);
            const double y = cy + off * std::sin(a0);
            const double x = cx + off * std::cos(a0);
            const double heading = rng.uniform(0.0, 2.0 * kPi);
            const double len = radius * rng.uniform(1.2, 1.8);
            const double curv = rng.uniform(0.05, 0.10) * (rng.next_below(2) ? 1.0 : -1.0);
            const int strands = 4 + static_cast<int>(rng.next_below(3));
            for (int s = 0; s < strands; ++s) {
                const double dy = rng.uniform(-2.5, 2.5);
                const double dx = rng.uniform(-2.5, 2.5);
                draw_filament(canvas, y + dy, x + dx, heading, len, curv, 2.0,
                              rng.uniform(45.0, 65.0));
            }
        }
        break;
    }
    }

    canvas.blur3();
    Sample s;
    s.label = label;
    s.image = canvas.finish(rng, 8.0);
    s.rotation = 0;
    return s;
}

std::vector<Sample> synth_dataset(std::size_t per_class, std::uint64_t seed, std::size_t size) {
    std::vector<Sample> out;
    out.reserve(per_class * 3);
    for (Label label : {Label::C0, Label::C01, Label::C1}) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::uint64_t sample_seed = seed * 0x100000001b3ULL + i;
            Sample s = synth_generate(label, sample_seed, size);
            s.group_id = "synth-" + label_name(s.label) + "-" + std::to_string(i);
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace mtcn
