#ifndef MTCN_IMAGE_OPS_HPP
#define MTCN_IMAGE_OPS_HPP

#include "mtcn/pgm.hpp"

namespace mtcn {

// Linear min-max rescale to [0, 255] with round-half-up; a constant
// image maps to all zeros.
GrayImage to_8bit(const GrayImage& raw);

// Centered zero-pad to square, then bilinear resample to target x target.
// Identity when the image is already target x target.
GrayImage resize_square(const GrayImage& img, std::size_t target);

// 3x3 sharpening mask: center 32, neighbors -2, divisor 16. Border
// pixels are copied unfiltered. Flat regions are left unchanged.
GrayImage sharpen(const GrayImage& img);

// Exact lossless clockwise rotation of a square image:
// out[r][c] = in[N-1-c][r] per quarter turn.
GrayImage rotate90(const GrayImage& img, int quarter_turns);

} // namespace mtcn

#endif
