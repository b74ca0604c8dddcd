#include "qsr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qsr {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool inside_ellipse(const Ellipse& e, double xn, double yn) {
    const double dx = xn - e.cx;
    const double dy = yn - e.cy;
    const double c = std::cos(e.rot);
    const double s = std::sin(e.rot);
    const double u = (c * dx + s * dy) / e.ax;
    const double v = (-s * dx + c * dy) / e.ay;
    return u * u + v * v <= 1.0;
}

// Smooth cubic polynomial over the grid, rescaled to max |p| = 1.
struct TexturePoly {
    std::array<double, 10> coeff{};  // monomials x^a y^b, a+b <= 3

    static TexturePoly draw(std::mt19937_64& rng) {
        TexturePoly p;
        for (auto& c : p.coeff) c = 2.0 * uniform01(rng) - 1.0;
        return p;
    }

    double raw(double x, double y) const {
        const double u = 2.0 * x - 1.0;
        const double v = 2.0 * y - 1.0;
        int i = 0;
        double acc = 0;
        for (int a = 0; a <= 3; ++a) {
            for (int b = 0; a + b <= 3; ++b) {
                acc += coeff[static_cast<std::size_t>(i++)] * std::pow(u, a) * std::pow(v, b);
            }
        }
        return acc;
    }
};

}  // namespace

TissueClass parse_tissue_class(const std::string& name) {
    if (name == "background") return TissueClass::Background;
    if (name == "csf") return TissueClass::Csf;
    if (name == "gm") return TissueClass::Gm;
    if (name == "wm") return TissueClass::Wm;
    if (name == "lesion") return TissueClass::Lesion;
    throw std::invalid_argument("unknown tissue class '" + name + "'");
}

std::string tissue_class_name(TissueClass cls) {
    switch (cls) {
        case TissueClass::Background: return "background";
        case TissueClass::Csf: return "csf";
        case TissueClass::Gm: return "gm";
        case TissueClass::Wm: return "wm";
        case TissueClass::Lesion: return "lesion";
    }
    return "?";
}

std::map<TissueClass, TissueValues> PhantomSpec::default_tissue_values() {
    return {
        {TissueClass::Background, {0.0, 0.0, 0.0}},
        {TissueClass::Wm, {70.0, 600.0, 80.0}},
        {TissueClass::Gm, {85.0, 1100.0, 95.0}},
        {TissueClass::Csf, {100.0, 4000.0, 1800.0}},
        {TissueClass::Lesion, {90.0, 1600.0, 300.0}},
    };
}

void PhantomSpec::validate() const {
    grid.validate();
    if (!(texture_amplitude >= 0) || texture_amplitude > 0.5) {
        throw std::invalid_argument("PhantomSpec: texture_amplitude must be in [0, 0.5]");
    }
    if (tissues.empty()) {
        throw std::invalid_argument("PhantomSpec: no ellipses");
    }
    for (const auto& e : tissues) {
        if (!(e.ax > 0) || !(e.ay > 0)) {
            throw std::invalid_argument("PhantomSpec: ellipse axes must be positive");
        }
        // Rotated bounding half-extents must stay inside the unit square.
        const double c = std::cos(e.rot), s = std::sin(e.rot);
        const double bx = std::sqrt(e.ax * e.ax * c * c + e.ay * e.ay * s * s);
        const double by = std::sqrt(e.ax * e.ax * s * s + e.ay * e.ay * c * c);
        if (e.cx - bx < 0 || e.cx + bx > 1 || e.cy - by < 0 || e.cy + by > 1) {
            throw std::invalid_argument("PhantomSpec: ellipse extends outside the grid");
        }
    }
    for (const auto& [cls, v] : tissue_values) {
        if (cls == TissueClass::Background) continue;
        if (!(v.pd >= 0) || v.pd > bounds.pd_max || !(v.t1 > 0) || v.t1 > bounds.t1_max ||
            !(v.t2 > 0) || v.t2 > bounds.t2_max) {
            throw std::invalid_argument("PhantomSpec: tissue values outside map bounds for '" +
                                        tissue_class_name(cls) + "'");
        }
    }
}

PhantomSpec default_phantom(int width, int height, std::uint64_t seed) {
    PhantomSpec spec;
    spec.grid = ImageGrid{width, height, 1.0, 1.0};
    spec.seed = seed;
    spec.tissues = {
        {0.50, 0.50, 0.420, 0.460, 0.0, TissueClass::Gm},    // cortical ribbon
        {0.50, 0.52, 0.330, 0.370, 0.0, TissueClass::Wm},    // white-matter interior
        {0.44, 0.46, 0.050, 0.140, 0.25, TissueClass::Csf},  // left ventricle
        {0.56, 0.46, 0.050, 0.140, -0.25, TissueClass::Csf}, // right ventricle
        {0.40, 0.68, 0.045, 0.060, 0.6, TissueClass::Lesion},
        {0.64, 0.34, 0.030, 0.040, -0.4, TissueClass::Lesion},
    };
    return spec;
}

std::pair<ParametricMaps, BinaryMask> generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const ImageGrid& grid = spec.grid;

    // One texture polynomial per (class, channel), drawn in fixed order so
    // the phantom is a pure function of the seed.
    std::mt19937_64 rng(spec.seed);
    const TissueClass classes[4] = {TissueClass::Csf, TissueClass::Gm, TissueClass::Wm,
                                    TissueClass::Lesion};
    std::map<TissueClass, std::array<TexturePoly, 3>> polys;
    for (TissueClass cls : classes) {
        polys[cls] = {TexturePoly::draw(rng), TexturePoly::draw(rng), TexturePoly::draw(rng)};
    }
    std::map<TissueClass, std::array<double, 3>> poly_max;
    for (TissueClass cls : classes) {
        std::array<double, 3> mx{0, 0, 0};
        for (int y = 0; y < grid.height; ++y) {
            const double yn = (y + 0.5) / grid.height;
            for (int x = 0; x < grid.width; ++x) {
                const double xn = (x + 0.5) / grid.width;
                for (int c = 0; c < 3; ++c) {
                    mx[c] = std::max(mx[c], std::abs(polys[cls][c].raw(xn, yn)));
                }
            }
        }
        for (auto& m : mx) m = std::max(m, 1e-12);
        poly_max[cls] = mx;
    }

    ParametricMaps maps{Image(grid, 0.0, "PD", "a.u."), Image(grid, 0.0, "T1", "ms"),
                        Image(grid, 0.0, "T2", "ms")};
    BinaryMask mask(grid);

    for (int y = 0; y < grid.height; ++y) {
        const double yn = (y + 0.5) / grid.height;
        for (int x = 0; x < grid.width; ++x) {
            const double xn = (x + 0.5) / grid.width;
            TissueClass cls = TissueClass::Background;
            for (const auto& e : spec.tissues) {
                if (inside_ellipse(e, xn, yn)) cls = e.cls;  // later ellipses overwrite
            }
            if (cls == TissueClass::Background) continue;
            const auto it = spec.tissue_values.find(cls);
            if (it == spec.tissue_values.end()) {
                throw std::invalid_argument("PhantomSpec: no tissue values for '" +
                                            tissue_class_name(cls) + "'");
            }
            const TissueValues& v = it->second;
            double vals[3] = {v.pd, v.t1, v.t2};
            for (int c = 0; c < 3; ++c) {
                const double p = polys[cls][c].raw(xn, yn) / poly_max[cls][c];
                vals[c] *= 1.0 + spec.texture_amplitude * p;
            }
            const double caps[3] = {spec.bounds.pd_max, spec.bounds.t1_max,
                                    spec.bounds.t2_max};
            maps.pd.values(y, x) = std::clamp(vals[0], 0.0, caps[0]);
            maps.t1.values(y, x) = std::clamp(vals[1], kRelaxationFloorMs * 2, caps[1]);
            maps.t2.values(y, x) = std::clamp(vals[2], kRelaxationFloorMs * 2, caps[2]);
            mask.set(y, x, true);
        }
    }
    maps.validate(mask, spec.bounds);
    return {std::move(maps), std::move(mask)};
}

SyntheticDataset synthesize_dataset(const ParametricMaps& q_h, const BinaryMask& mask,
                                    const DegradeSpec& degrade,
                                    const FitSettings& fit_settings) {
    degrade.validate();
    fit_settings.validate();
    require_same_grid(q_h.grid(), mask.grid, "synthesize_dataset");

    SyntheticDataset out;
    const std::vector<AcquisitionSpec> specs = standard_contrast_set();
    std::vector<Image> lr_images;
    lr_images.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        DegradeSpec per_contrast = degrade;
        per_contrast.seed = degrade.seed + i;
        Image hr = evaluate(specs[i], q_h, mask);
        Image lr = phi(hr, per_contrast);
        lr_images.push_back(lr);
        out.lr_contrasts.push_back({std::move(lr), specs[i], per_contrast});
    }

    out.q_l = fit_map(lr_images, specs, mask, fit_settings);

    out.guides.push_back({evaluate(standard_t1w_guide(), q_h, mask), standard_t1w_guide()});
    out.guides.push_back({evaluate(standard_t2w_guide(), q_h, mask), standard_t2w_guide()});
    return out;
}

}  // namespace qsr
