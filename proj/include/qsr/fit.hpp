#pragma once

#include "qsr/image.hpp"
#include "qsr/signal_models.hpp"

#include <span>
#include <vector>

namespace qsr {

// Least-squares estimation of (PD, T1, T2) from a contrast series:
// coarse search over log-spaced (T1, T2) grids with PD solved in closed
// form per cell, then Gauss-Newton refinement with clamping.

struct FitSettings {
    int t1_points = 64;
    double t1_min = 50.0;
    double t1_max = 4300.0;
    int t2_points = 64;
    double t2_min = 10.0;
    double t2_max = 2000.0;
    int refine_iters = 20;
    double tol = 1e-6;  // relative step tolerance
    MapBounds bounds{};

    void validate() const;
};

struct VoxelFit {
    double pd = 0;
    double t1 = 0;
    double t2 = 0;
    double residual = 0;  // final sum of squared residuals
    // False when the series carries no information on the parameter; the
    // value is then the grid midpoint (geometric mean of the bounds).
    bool t1_identifiable = false;
    bool t2_identifiable = false;
};

VoxelFit fit_voxel(std::span<const double> signals,
                   std::span<const AcquisitionSpec> specs,
                   const FitSettings& settings = {});

/// Voxelwise fit inside the mask; background voxels are 0.
ParametricMaps fit_map(const std::vector<Image>& contrasts,
                       const std::vector<AcquisitionSpec>& specs,
                       const BinaryMask& mask, const FitSettings& settings = {});

}  // namespace qsr
