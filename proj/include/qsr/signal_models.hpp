#pragma once

#include "qsr/image.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qsr {

// Closed-form MR forward signal models mapping (PD, T1, T2) to weighted
// image intensity, with analytic partials for the fitter and the SR solver.
// Times in ms, flip angles in degrees at the interface.

struct SatRecovery {
    double tr = 0;
};

struct SpinEchoDecay {
    double te = 0;
};

struct IrSpgr {
    double tr = 0;
    double te = 0;
    double tp = 0;  // inversion to acquisition
    double td = 0;  // delay before inversion
    double flip_deg = 0;
};

struct SpinEchoT2w {
    double tr = 0;
    double te = 0;
    double flip_deg = 0;
};

// PD-free as the convention here prescribes; scale_by_pd is an extension
// that multiplies the signal by PD when enabled.
struct T2Flair {
    double tr = 0;
    double te = 0;
    double ti = 0;
    bool scale_by_pd = false;
};

using AcquisitionSpec =
    std::variant<SatRecovery, SpinEchoDecay, IrSpgr, SpinEchoT2w, T2Flair>;

/// Throws std::invalid_argument on invalid parameters (negative times,
/// flip angle outside (0, 180), echo after repetition).
void validate(const AcquisitionSpec& spec);

std::string model_name(const AcquisitionSpec& spec);
/// One-line tagged record, e.g. "model=sat_recovery tr=360".
std::string format_spec(const AcquisitionSpec& spec);
/// Inverse of format_spec; input is the tokenized key=value list with the
/// leading "model" pair included. Throws std::invalid_argument.
AcquisitionSpec parse_spec(const std::vector<std::pair<std::string, std::string>>& pairs);

bool depends_on_t1(const AcquisitionSpec& spec);
bool depends_on_t2(const AcquisitionSpec& spec);
bool linear_in_pd(const AcquisitionSpec& spec);

/// Relaxation times at or below this floor are rejected rather than
/// clamped; projection onto valid boxes is the solver's job.
inline constexpr double kRelaxationFloorMs = 1e-3;

double signal(const AcquisitionSpec& spec, double pd, double t1, double t2);

struct SignalGrad {
    double d_pd = 0;
    double d_t1 = 0;
    double d_t2 = 0;
};
SignalGrad signal_grad(const AcquisitionSpec& spec, double pd, double t1, double t2);

/// Per-voxel signal inside the mask, 0 outside. Relaxation times are only
/// inspected (and must exceed the floor) at mask voxels.
Image evaluate(const AcquisitionSpec& spec, const ParametricMaps& q, const BinaryMask& mask);

struct ModelJacobian {
    Image d_pd;
    Image d_t1;
    Image d_t2;
};
ModelJacobian jacobian(const AcquisitionSpec& spec, const ParametricMaps& q,
                       const BinaryMask& mask);

/// The 12-contrast acquisition set: 6 saturation-recovery with
/// TR in {360, 540, 810, 1215, 1822, 2733} ms followed by 6 spin-echo
/// decays with TE in {10, 20, 40, 80, 160, 320} ms.
std::vector<AcquisitionSpec> standard_contrast_set();

/// Guide acquisitions: T1w IR-SPGR (TR/TE/TP/TD/flip = 6.6/2.6/450/0 ms, 12 deg)
/// and T2w SE (TR/TE/flip = 5211/146 ms, 160 deg).
IrSpgr standard_t1w_guide();
SpinEchoT2w standard_t2w_guide();

}  // namespace qsr
