#include "mtcn/pgm.hpp"

#include <fstream>

namespace mtcn {

namespace {

// Whitespace/comment-aware header token reader for the PNM family.
class HeaderScanner {
public:
    HeaderScanner(const std::uint8_t* data, std::size_t len, const std::string& origin)
        : data_(data), len_(len), origin_(origin) {}

    unsigned long next_uint() {
        skip_space_and_comments();
        if (pos_ >= len_ || data_[pos_] < '0' || data_[pos_] > '9')
            throw ParseError(origin_ + ": corrupt graymap header");
        unsigned long v = 0;
        while (pos_ < len_ && data_[pos_] >= '0' && data_[pos_] <= '9') {
            v = v * 10 + (data_[pos_] - '0');
            if (v > 0xFFFFFFFFul) throw ParseError(origin_ + ": header value out of range");
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_offset() {
        if (pos_ >= len_ || !is_space(data_[pos_]))
            throw ParseError(origin_ + ": corrupt graymap header");
        return pos_ + 1;
    }

private:
    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }
    void skip_space_and_comments() {
        while (pos_ < len_) {
            if (is_space(data_[pos_])) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < len_ && data_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }
    const std::uint8_t* data_;
    std::size_t len_;
    std::string origin_;
    std::size_t pos_ = 2; // past the magic
};

} // namespace

GrayImage parse_pgm(const std::uint8_t* data, std::size_t len, const std::string& origin) {
    if (len < 2 || data[0] != 'P' || data[1] != '5')
        throw ParseError(origin + ": not a binary graymap (bad magic)");

    HeaderScanner scan(data, len, origin);
    const unsigned long width = scan.next_uint();
    const unsigned long height = scan.next_uint();
    const unsigned long maxval = scan.next_uint();
    if (width == 0 || height == 0)
        throw ParseError(origin + ": zero image dimension");
    if (maxval == 0 || maxval > 65535)
        throw ParseError(origin + ": unsupported maxval " + std::to_string(maxval));

    const std::size_t offset = scan.raster_offset();
    const std::size_t bytes_per_px = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(width) * height * bytes_per_px;
    if (len - offset < need)
        throw ParseError(origin + ": truncated graymap payload");

    GrayImage img;
    img.width = width;
    img.height = height;
    img.maxval = static_cast<std::uint16_t>(maxval);
    img.pixels.resize(static_cast<std::size_t>(width) * height);
    const std::uint8_t* p = data + offset;
    if (bytes_per_px == 1) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = p[i];
    } else {
        // 16-bit samples are big-endian in the PNM format.
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            img.pixels[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    }
    return img;
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open image: " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
    return parse_pgm(buf.data(), buf.size(), path);
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
    if (img.is_16bit()) {
        for (std::uint16_t v : img.pixels) {
            f.put(static_cast<char>(v >> 8));
            f.put(static_cast<char>(v & 0xFF));
        }
    } else {
        for (std::uint16_t v : img.pixels) f.put(static_cast<char>(v & 0xFF));
    }
    if (!f) throw IoError("write failed: " + path);
}

Tensor to_tensor(const GrayImage& img) {
    Tensor t({img.height, img.width, 1});
    const float scale = 1.0f / static_cast<float>(img.maxval);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        t[i] = static_cast<float>(img.pixels[i]) * scale;
    return t;
}

} // namespace mtcn
