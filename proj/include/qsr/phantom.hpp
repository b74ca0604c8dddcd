#pragma once

#include "qsr/degrade.hpp"
#include "qsr/fit.hpp"
#include "qsr/image.hpp"
#include "qsr/sr.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace qsr {

// Digital 2D brain-like phantom and the synthetic-data pipeline driving
// every end-to-end test: ground-truth maps -> contrasts -> degraded LR
// series -> fitted LR maps, plus high-resolution guides.

enum class TissueClass { Background, Csf, Gm, Wm, Lesion };

TissueClass parse_tissue_class(const std::string& name);
std::string tissue_class_name(TissueClass cls);

/// Geometry in grid-normalized coordinates: centers and semi-axes as
/// fractions of the grid extent, rotation in radians.
struct Ellipse {
    double cx = 0.5;
    double cy = 0.5;
    double ax = 0.1;
    double ay = 0.1;
    double rot = 0;
    TissueClass cls = TissueClass::Background;
};

struct TissueValues {
    double pd = 0;  // a.u.
    double t1 = 0;  // ms
    double t2 = 0;  // ms
};

struct PhantomSpec {
    ImageGrid grid{128, 128, 1.0, 1.0};
    std::vector<Ellipse> tissues;  // rasterized in order; later entries overwrite
    std::map<TissueClass, TissueValues> tissue_values = default_tissue_values();
    double texture_amplitude = 0.05;  // relative smooth intra-tissue variation
    std::uint64_t seed = 1234;
    MapBounds bounds{};

    static std::map<TissueClass, TissueValues> default_tissue_values();
    void validate() const;
};

/// Head phantom: cortical ribbon, white-matter interior, two ventricles,
/// and two small high-contrast lesions for edge-recovery metrics.
PhantomSpec default_phantom(int width = 128, int height = 128,
                            std::uint64_t seed = 1234);

/// Deterministic per seed. Mask is the union of non-background ellipses.
std::pair<ParametricMaps, BinaryMask> generate_phantom(const PhantomSpec& spec);

struct SyntheticDataset {
    std::vector<LrObservation> lr_contrasts;  // 12, standard contrast order
    ParametricMaps q_l;
    std::vector<GuideObservation> guides;  // [0] T1w IR-SPGR, [1] T2w SE
};

/// Synthesizes the 12 standard contrasts from q_h, degrades each with phi
/// (noise seeds derived as degrade.seed + contrast index), fits q_l from
/// the degraded series, and synthesizes the two HR guides from q_h.
SyntheticDataset synthesize_dataset(const ParametricMaps& q_h, const BinaryMask& mask,
                                    const DegradeSpec& degrade,
                                    const FitSettings& fit_settings);

}  // namespace qsr
