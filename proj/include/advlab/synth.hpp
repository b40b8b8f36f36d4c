#pragma once

#include <cstdint>
#include <string>

#include "advlab/data_io.hpp"

namespace advlab {

// Deterministic 10-class image generator in CIFAR-10 geometry (3x32x32).
// Class k is an oriented color sinusoid: orientation pi*k/10, spatial
// frequency 2+(k mod 3) cycles, per-channel weight 0.5+0.5*cos(2pi(k/10+c/3)).
// Per image: amplitude, phase, per-channel offset, and per-pixel noise drawn
// from the stream keyed by (seed, image index, 0, "synth"). Labels cycle
// 0..9. Pixels are quantized to u8 and stored as byte/255 so serialization
// to CIFAR-10 binary round-trips bit-exactly.
Dataset make_synthetic_dataset(int count, std::uint64_t seed);

// Same content already serialized as CIFAR-10 binary records.
std::string make_synthetic_cifar_bytes(int count, std::uint64_t seed);

} // namespace advlab
