#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qsr {

/// Shared 2D voxel grid. All images participating in one computation must
/// agree on the grid exactly.
struct ImageGrid {
    int width = 0;
    int height = 0;
    double spacing_x = 1.0;  // mm per voxel
    double spacing_y = 1.0;

    std::size_t size() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool operator==(const ImageGrid&) const = default;
    void validate() const;  // width,height >= 2; spacings > 0
};

/// Dense raster on an ImageGrid, indexed (y, x). Immutable by convention
/// after construction; copies are cheap enough at desk scale.
template <class Scalar>
struct ImageT {
    using ArrayType = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    ImageGrid grid;
    ArrayType values;  // height rows, width cols
    std::string label;
    std::string units;

    ImageT() = default;
    explicit ImageT(const ImageGrid& g, Scalar fill = Scalar{0},
                    std::string lab = {}, std::string un = {})
        : grid(g),
          values(ArrayType::Constant(g.height, g.width, fill)),
          label(std::move(lab)),
          units(std::move(un)) {}

    Scalar& at(int y, int x) { return values(y, x); }
    Scalar at(int y, int x) const { return values(y, x); }
};

using Image = ImageT<double>;

/// {0,1} raster; used both as brain mask (image domain) and as k-space mask.
struct BinaryMask {
    ImageGrid grid;
    Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> values;

    BinaryMask() = default;
    explicit BinaryMask(const ImageGrid& g, std::uint8_t fill = 0);

    std::size_t count() const;  // number of ones
    bool at(int y, int x) const { return values(y, x) != 0; }
    void set(int y, int x, bool v) { values(y, x) = v ? 1 : 0; }
};

struct ComplexImage {
    ImageGrid grid;
    Eigen::ArrayXXcd values;

    ComplexImage() = default;
    explicit ComplexImage(const ImageGrid& g)
        : grid(g), values(Eigen::ArrayXXcd::Zero(g.height, g.width)) {}

    Eigen::ArrayXXd re() const { return values.real(); }
    Eigen::ArrayXXd im() const { return values.imag(); }
};

/// Configured upper bounds for parametric maps.
struct MapBounds {
    double pd_max = 160.0;   // a.u.
    double t1_max = 4300.0;  // ms
    double t2_max = 2000.0;  // ms
};

/// Co-registered PD/T1/T2 maps on one grid.
struct ParametricMaps {
    Image pd;
    Image t1;
    Image t2;

    const ImageGrid& grid() const { return pd.grid; }
    /// Throws std::invalid_argument unless: grids match, values finite,
    /// pd >= 0, t1 > 0 and t2 > 0 at every mask voxel, and all values are
    /// within the configured upper bounds.
    void validate(const BinaryMask& mask, const MapBounds& bounds = {}) const;
};

void require_same_grid(const ImageGrid& a, const ImageGrid& b, const char* context);

/// map where mask=1, fill elsewhere.
Image apply_mask(const Image& map, const BinaryMask& mask, double fill);

/// (y, x) positions of mask=1 voxels in row-major order. This order fixes
/// every masked reduction in the library, keeping results deterministic.
std::vector<std::pair<int, int>> masked_indices(const BinaryMask& mask);

/// Values of map at mask=1 voxels, row-major order.
Eigen::VectorXd masked_values(const Image& map, const BinaryMask& mask);

}  // namespace qsr
