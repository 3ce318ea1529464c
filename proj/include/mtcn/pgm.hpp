#ifndef MTCN_PGM_HPP
#define MTCN_PGM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mtcn/error.hpp"
#include "mtcn/tensor.hpp"

namespace mtcn {

// Grayscale raster. Pixel values run 0..maxval; maxval > 255 marks a
// 16-bit image that still needs to_8bit before entering the pipeline.
struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::uint16_t maxval = 255;
    std::vector<std::uint16_t> pixels; // row-major

    bool is_16bit() const { return maxval > 255; }
    std::uint16_t& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    std::uint16_t at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

// Binary portable graymap (P5), 8- or 16-bit.
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);

// Parse from an in-memory buffer (shared by load_pgm and tests).
GrayImage parse_pgm(const std::uint8_t* data, std::size_t len, const std::string& origin);

// Normalized float tensor [H, W, 1] with values in [0, 1].
Tensor to_tensor(const GrayImage& img);

} // namespace mtcn

#endif
