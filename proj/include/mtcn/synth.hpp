#ifndef MTCN_SYNTH_HPP
#define MTCN_SYNTH_HPP

#include "mtcn/dataset.hpp"

namespace mtcn {

// Deterministic synthetic microtubule-like texture, one cell per image.
// C0: thin straight filaments radiating from a center. C01: partially
// curved, mildly bundled filaments. C1: heavily bundled curved strands.
// A light blur and pixel noise are layered on top.
Sample synth_generate(Label label, std::uint64_t seed, std::size_t size);

// Convenience: per_class samples of every class, group ids
// "synth-<label>-<index>", seeds derived from the master seed.
std::vector<Sample> synth_dataset(std::size_t per_class, std::uint64_t seed, std::size_t size);

} // namespace mtcn

#endif
