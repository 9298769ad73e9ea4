#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pbr::fft {

enum class Direction { forward, inverse };

// Unnormalised 1-D complex DFT of in into out (sizes must match, n >= 1).
// inverse is the unscaled adjoint; divide by n to invert forward.
// Plans are cached per (n, direction) and execution is thread-safe, so this
// can be called concurrently from worker threads.
void transform(std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out, Direction dir);

std::vector<std::complex<double>> transform(
    const std::vector<std::complex<double>>& in, Direction dir);

// Smallest 5-smooth size >= n. Used to pick zero-padded correlation lengths.
std::size_t good_size(std::size_t n);

}  // namespace pbr::fft
