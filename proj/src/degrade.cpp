#include "qsr/degrade.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

namespace qsr {

namespace {

// Centered index c of unshifted DFT bin k (DC lands at floor(n/2)).
inline int to_centered(int k, int n) { return (k + n / 2) % n; }

// Centered index of the mirrored frequency -f, or -1 when the Nyquist
// frequency has no mirror bin (even n, c = 0).
inline int mirror_centered(int c, int n) {
    const int m = 2 * (n / 2) - c;
    return (m >= 0 && m < n) ? m : -1;
}

Eigen::ArrayXXcd fft2(const Eigen::ArrayXXcd& in, bool forward) {
    // Orthonormal scaling: 1/sqrt(N) in both directions.
    thread_local Eigen::FFT<double> fft;
    const Eigen::Index h = in.rows();
    const Eigen::Index w = in.cols();
    Eigen::MatrixXcd work = in.matrix();

    Eigen::VectorXcd line, out;
    for (Eigen::Index y = 0; y < h; ++y) {
        line = work.row(y).transpose();
        if (forward) {
            fft.fwd(out, line);
        } else {
            fft.inv(out, line);
        }
        work.row(y) = out.transpose();
    }
    for (Eigen::Index x = 0; x < w; ++x) {
        line = work.col(x);
        if (forward) {
            fft.fwd(out, line);
        } else {
            fft.inv(out, line);
        }
        work.col(x) = out;
    }
    const double n = static_cast<double>(h) * static_cast<double>(w);
    // fwd is unscaled and inv carries 1/N; both move to 1/sqrt(N).
    const double scale = forward ? 1.0 / std::sqrt(n) : std::sqrt(n);
    return work.array() * scale;
}

struct GaussianPairSource {
    std::mt19937_64 rng;
    explicit GaussianPairSource(std::uint64_t seed) : rng(seed) {}

    // Box-Muller on hand-rolled uniforms; std::normal_distribution is
    // implementation-defined and would tie outputs to the library version.
    std::pair<double, double> next() {
        const double u1 =
            (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phase = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phase), r * std::sin(phase)};
    }
};

}  // namespace

void DegradeSpec::validate() const {
    if (!(keep_x > 0) || keep_x > 1 || !(keep_y > 0) || keep_y > 1) {
        throw std::invalid_argument("DegradeSpec: keep fractions must be in (0, 1]");
    }
    if (!(sigma >= 0)) {
        throw std::invalid_argument("DegradeSpec: sigma must be nonnegative");
    }
}

BinaryMask make_center_mask(const ImageGrid& grid, const DegradeSpec& spec) {
    grid.validate();
    spec.validate();
    const int mx = static_cast<int>(std::ceil(spec.keep_x * grid.width));
    const int my = static_cast<int>(std::ceil(spec.keep_y * grid.height));
    const int x0 = grid.width / 2 - mx / 2;
    const int y0 = grid.height / 2 - my / 2;
    BinaryMask mask(grid);
    for (int y = y0; y < y0 + my; ++y)
        for (int x = x0; x < x0 + mx; ++x)
            mask.set(y, x, true);
    return mask;
}

Image phi(const Image& image, const DegradeSpec& spec) {
    image.grid.validate();
    spec.validate();
    if (!image.values.isFinite().all()) {
        throw std::invalid_argument("phi: non-finite input image");
    }
    const int w = image.grid.width;
    const int h = image.grid.height;

    Eigen::ArrayXXcd spectrum = fft2(image.values.cast<std::complex<double>>(), true);

    if (spec.sigma > 0) {
        // epsilon ~ CN(0, sigma^2): each component has variance sigma^2/2.
        const double comp_std = spec.sigma / std::numbers::sqrt2;
        GaussianPairSource noise(spec.seed);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto [re, im] = noise.next();
                spectrum(y, x) += std::complex<double>(comp_std * re, comp_std * im);
            }
        }
    }

    const BinaryMask mask = make_center_mask(image.grid, spec);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!mask.at(to_centered(y, h), to_centered(x, w))) spectrum(y, x) = 0.0;

    const Eigen::ArrayXXcd back = fft2(spectrum, false);
    Image out(image.grid, 0.0, image.label, image.units);
    out.values = back.abs();
    return out;
}

Image lowpass(const Image& image, const DegradeSpec& spec) {
    image.grid.validate();
    spec.validate();
    if (!image.values.isFinite().all()) {
        throw std::invalid_argument("lowpass: non-finite input image");
    }
    const int w = image.grid.width;
    const int h = image.grid.height;
    const BinaryMask mask = make_center_mask(image.grid, spec);

    Eigen::ArrayXXcd spectrum = fft2(image.values.cast<std::complex<double>>(), true);
    for (int y = 0; y < h; ++y) {
        const int cy = to_centered(y, h);
        const int my = mirror_centered(cy, h);
        for (int x = 0; x < w; ++x) {
            const int cx = to_centered(x, w);
            const int mx = mirror_centered(cx, w);
            const bool keep = mask.at(cy, cx) && my >= 0 && mx >= 0 && mask.at(my, mx);
            if (!keep) spectrum(y, x) = 0.0;
        }
    }

    const Eigen::ArrayXXcd back = fft2(spectrum, false);
    Image out(image.grid, 0.0, image.label, image.units);
    out.values = back.real();
    return out;
}

}  // namespace qsr
