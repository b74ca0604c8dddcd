#pragma once

#include "qsr/image.hpp"

#include <array>
#include <string>
#include <vector>

namespace qsr {

/// Mean local SSIM over mask-centered 11x11 windows (Gaussian weights,
/// sigma 1.5; C1=(0.01*L)^2, C2=(0.03*L)^2 with L = dynamic_range).
double ssim(const Image& candidate, const Image& reference, const BinaryMask& mask,
            double dynamic_range);

/// ||LoG(candidate) - LoG(reference)||_2 / ||LoG(reference)||_2 over mask
/// voxels; 15x15 Laplacian-of-Gaussian, sigma 1.5, reflective boundaries.
double hfen(const Image& candidate, const Image& reference, const BinaryMask& mask);

struct MapPairMetrics {
    double ssim = 0;
    double hfen = 0;
};

/// Candidate and baseline scores against one reference, per map channel
/// in the fixed order pd, t1, t2.
struct MetricReport {
    std::array<MapPairMetrics, 3> candidate;
    std::array<MapPairMetrics, 3> baseline;
};

inline constexpr std::array<double, 3> kDefaultDynamicRanges{160.0, 4300.0, 2000.0};
inline constexpr std::array<const char*, 3> kMapNames{"pd", "t1", "t2"};

MetricReport compute_report(const ParametricMaps& candidate,
                            const ParametricMaps& baseline,
                            const ParametricMaps& reference, const BinaryMask& mask,
                            const std::array<double, 3>& dynamic_ranges = kDefaultDynamicRanges);

/// Mean metric values per map for one model, in pd/t1/t2 order.
struct ModelScores {
    std::string name;
    std::array<double, 3> ssim{};
    std::array<double, 3> hfen{};
};

struct RankedModel {
    std::string name;
    // Ranks for the 6 cells: ssim pd/t1/t2 then hfen pd/t1/t2; 1 is best
    // (highest SSIM, lowest HFEN), ties share the minimum rank.
    std::array<int, 6> ranks{};
    int total = 0;
};

/// Sorted ascending by total rank (ties broken by name for determinism).
std::vector<RankedModel> rank_models(const std::vector<ModelScores>& models);

}  // namespace qsr
