#pragma once

#include "qsr/image.hpp"

#include <cstdint>

namespace qsr {

// k-space degradation: forward DFT (orthonormal scaling), complex Gaussian
// noise, centered binary mask, inverse DFT.

struct DegradeSpec {
    double keep_x = 0.5;  // fraction of k-space extent retained per axis, (0, 1]
    double keep_y = 0.5;
    double sigma = 0.1;   // total complex noise std per k-space sample
    std::uint64_t seed = 0;

    void validate() const;
};

/// Centered rectangle of ceil(keep_x*width) x ceil(keep_y*height) samples
/// around the DC bin (DC at index floor(n/2) after centering).
BinaryMask make_center_mask(const ImageGrid& grid, const DegradeSpec& spec);

/// Full degradation operator: FFT, add noise (independent per sample and
/// per real/imaginary component, each with variance sigma^2/2), mask,
/// inverse FFT, magnitude. Deterministic per seed.
Image phi(const Image& image, const DegradeSpec& spec);

/// Noiseless linear variant used inside the SR objective: an orthogonal
/// projection in image space (idempotent, self-adjoint). The retained set
/// is symmetrized (a frequency is kept only when its mirror is kept too) so
/// the operator maps real images to real images exactly; phi keeps the
/// literal mask.
Image lowpass(const Image& image, const DegradeSpec& spec);

}  // namespace qsr
