#pragma once

#include "mlac/types.hpp"

#include <vector>

namespace mlac::detail {

enum class FftDirection { Forward, Backward };

// In-place unnormalized d-dimensional DFT of a row-major grid with `side`
// points per axis. Forward uses exp(-2 pi i k l / side), Backward exp(+...).
// Plans are created once per (side, dim, direction) and shared.
void fft_grid(std::vector<Complex>& grid, int side, int dim, FftDirection dir);

// Forward transform of a real grid into the half spectrum (last axis 0..side/2).
void fft_r2c(const std::vector<double>& in, std::vector<Complex>& out, int side, int dim);

// Backward unnormalized transform of a Hermitian half spectrum into a real grid.
// Destroys `in`.
void fft_c2r(std::vector<Complex>& in, std::vector<double>& out, int side, int dim);

}  // namespace mlac::detail
