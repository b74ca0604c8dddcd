#pragma once

#include "qsr/degrade.hpp"
#include "qsr/image.hpp"
#include "qsr/signal_models.hpp"

#include <array>
#include <string>
#include <vector>

namespace qsr {

// Super-resolution as direct per-image minimization of
//   L_total(q) = L_data(q) + alpha * L_guide(q)
// over the parametric maps q, by projected gradient descent with
// backtracking line search in per-channel scaled variables.

struct LrObservation {
    Image image;           // observed low-resolution contrast
    AcquisitionSpec spec;  // its forward model
    DegradeSpec degrade;   // its k-space truncation geometry
};

struct GuideObservation {
    Image image;           // high-resolution weighted guide
    AcquisitionSpec spec;  // forward model synthesizing it
};

struct ChannelBox {
    double lo = 0;
    double hi = 0;
};

struct SrProblem {
    ParametricMaps q_init;  // low-resolution maps; start point and data anchor
    std::vector<LrObservation> lr_contrasts;
    std::vector<GuideObservation> guides;
    BinaryMask mask;
    double alpha = 1000.0;  // guide-loss weight
    double sigma = 0.1;     // acquisition noise std scaling the data loss
    ChannelBox pd_box{0.0, 160.0};
    ChannelBox t1_box{1.0, 4300.0};
    ChannelBox t2_box{1.0, 2000.0};

    void validate() const;
};

struct SolverSettings {
    int max_iters = 2000;
    double step = 1e-2;  // initial step in scaled variables
    double tol = 1e-7;   // relative objective decrease stop
    // Per-channel scale divisors (pd, t1, t2); zero entries are derived as
    // the mean of the q_init channel over the mask.
    std::array<double, 3> param_scales{0, 0, 0};
    int max_backtracks = 40;
};

/// sum_i MSE(C_l^i, lowpass(M_i(q))) / sigma^2, MSE over mask voxels.
double data_loss(const ParametricMaps& q, const SrProblem& problem);

/// sum_j Var(W'^j - What'^j) / Var(W'^j) over mask voxels, both guide and
/// synthesized guide z-scored over the mask. The normalized guide is
/// quantized to single precision, which makes the loss exactly invariant
/// to affine rescaling a*W+b (a > 0) of the stored guide.
double guide_loss(const ParametricMaps& q, const SrProblem& problem);

double total_objective(const ParametricMaps& q, const SrProblem& problem);

struct ObjectiveGradient {
    Image d_pd;
    Image d_t1;
    Image d_t2;
};
/// Analytic gradient of total_objective w.r.t. every mask voxel of each
/// channel; exactly zero outside the mask.
ObjectiveGradient objective_gradient(const ParametricMaps& q, const SrProblem& problem);

struct IterRecord {
    int iter = 0;
    double data = 0;
    double guide = 0;
    double total = 0;
};

struct SolveResult {
    ParametricMaps maps;
    std::vector<IterRecord> log;  // entry 0 is the initial objective
    bool converged = false;
    std::string warning;  // nonempty when the line search stalled
};

SolveResult solve_sr(const SrProblem& problem, const SolverSettings& settings = {});

}  // namespace qsr
