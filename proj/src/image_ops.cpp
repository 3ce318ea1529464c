#include "mtcn/image_ops.hpp"

#include <algorithm>
#include <cmath>

namespace mtcn {

namespace {

std::uint16_t round_half_up_clamp255(double v) {
    const double r = std::floor(v + 0.5);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint16_t>(r);
}

} // namespace

GrayImage to_8bit(const GrayImage& raw) {
    if (raw.pixels.empty()) throw DataError("to_8bit: empty image");
    const auto [mn_it, mx_it] = std::minmax_element(raw.pixels.begin(), raw.pixels.end());
    const std::uint16_t mn = *mn_it, mx = *mx_it;

    GrayImage out;
    out.width = raw.width;
    out.height = raw.height;
    out.maxval = 255;
    out.pixels.resize(raw.pixels.size());
    if (mn == mx) {
        std::fill(out.pixels.begin(), out.pixels.end(), std::uint16_t(0));
        return out;
    }
    const double scale = 255.0 / static_cast<double>(mx - mn);
    for (std::size_t i = 0; i < raw.pixels.size(); ++i)
        out.pixels[i] = round_half_up_clamp255(static_cast<double>(raw.pixels[i] - mn) * scale);
    return out;
}

GrayImage resize_square(const GrayImage& img, std::size_t target) {
    if (img.pixels.empty()) throw DataError("resize_square: empty image");
    if (img.width == target && img.height == target) return img;

    // Centered zero-pad to square.
    const std::size_t side = std::max(img.width, img.height);
    GrayImage padded;
    if (side == img.width && side == img.height) {
        padded = img;
    } else {
        padded.width = padded.height = side;
        padded.maxval = img.maxval;
        padded.pixels.assign(side * side, 0);
        const std::size_t off_r = (side - img.height) / 2;
        const std::size_t off_c = (side - img.width) / 2;
        for (std::size_t r = 0; r < img.height; ++r)
            for (std::size_t c = 0; c < img.width; ++c)
                padded.at(off_r + r, off_c + c) = img.at(r, c);
    }
    if (side == target) return padded;

    // Bilinear resample with pixel-center alignment.
    GrayImage out;
    out.width = out.height = target;
    out.maxval = padded.maxval;
    out.pixels.resize(target * target);
    const double ratio = static_cast<double>(side) / static_cast<double>(target);
    for (std::size_t r = 0; r < target; ++r) {
        const double sy = (static_cast<double>(r) + 0.5) * ratio - 0.5;
        const double fy = std::clamp(sy, 0.0, static_cast<double>(side - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, side - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t c = 0; c < target; ++c) {
            const double sx = (static_cast<double>(c) + 0.5) * ratio - 0.5;
            const double fx = std::clamp(sx, 0.0, static_cast<double>(side - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, side - 1);
            const double wx = fx - static_cast<double>(x0);
            const double v = (1.0 - wy) * ((1.0 - wx) * padded.at(y0, x0) + wx * padded.at(y0, x1)) +
                             wy * ((1.0 - wx) * padded.at(y1, x0) + wx * padded.at(y1, x1));
            out.at(r, c) = static_cast<std::uint16_t>(
                std::clamp(std::floor(v + 0.5), 0.0, static_cast<double>(padded.maxval)));
        }
    }
    return out;
}

GrayImage sharpen(const GrayImage& img) {
    if (img.height < 3 || img.width < 3)
        throw DataError("sharpen: image must be at least 3x3");
    GrayImage out = img;
    for (std::size_t r = 1; r + 1 < img.height; ++r) {
        for (std::size_t c = 1; c + 1 < img.width; ++c) {
            double acc = 32.0 * img.at(r, c);
            acc -= 2.0 * (img.at(r - 1, c - 1) + img.at(r - 1, c) + img.at(r - 1, c + 1) +
                          img.at(r, c - 1) + img.at(r, c + 1) +
                          img.at(r + 1, c - 1) + img.at(r + 1, c) + img.at(r + 1, c + 1));
            out.at(r, c) = round_half_up_clamp255(acc / 16.0);
        }
    }
    return out;
}

GrayImage rotate90(const GrayImage& img, int quarter_turns) {
    if (img.width != img.height)
        throw ShapeError("rotate90: image must be square");
    quarter_turns = ((quarter_turns % 4) + 4) % 4;
    GrayImage cur = img;
    const std::size_t n = img.width;
    for (int t = 0; t < quarter_turns; ++t) {
        GrayImage next = cur;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                next.at(r, c) = cur.at(n - 1 - c, r);
        cur = std::move(next);
    }
    return cur;
}

} // namespace mtcn
