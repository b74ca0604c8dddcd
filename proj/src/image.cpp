#include "qsr/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qsr {

void ImageGrid::validate() const {
    if (width < 2 || height < 2) {
        throw std::invalid_argument("ImageGrid: width and height must be >= 2, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    if (!(spacing_x > 0) || !(spacing_y > 0)) {
        throw std::invalid_argument("ImageGrid: spacings must be positive");
    }
}

BinaryMask::BinaryMask(const ImageGrid& g, std::uint8_t fill)
    : grid(g),
      values(Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          g.height, g.width, fill)) {}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            if (values(y, x) != 0) ++n;
    return n;
}

void require_same_grid(const ImageGrid& a, const ImageGrid& b, const char* context) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(context) + ": grid mismatch (" +
                                    std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height) + ")");
    }
}

void ParametricMaps::validate(const BinaryMask& mask, const MapBounds& bounds) const {
    require_same_grid(pd.grid, t1.grid, "ParametricMaps");
    require_same_grid(pd.grid, t2.grid, "ParametricMaps");
    require_same_grid(pd.grid, mask.grid, "ParametricMaps");
    if (!pd.values.isFinite().all() || !t1.values.isFinite().all() ||
        !t2.values.isFinite().all()) {
        throw std::invalid_argument("ParametricMaps: non-finite values");
    }
    if ((pd.values < 0.0).any()) {
        throw std::invalid_argument("ParametricMaps: pd must be nonnegative");
    }
    if ((pd.values > bounds.pd_max).any() || (t1.values > bounds.t1_max).any() ||
        (t2.values > bounds.t2_max).any()) {
        throw std::invalid_argument("ParametricMaps: values exceed configured bounds");
    }
    for (int y = 0; y < pd.grid.height; ++y) {
        for (int x = 0; x < pd.grid.width; ++x) {
            if (!mask.at(y, x)) continue;
            if (!(t1.values(y, x) > 0) || !(t2.values(y, x) > 0)) {
                throw std::invalid_argument(
                    "ParametricMaps: nonpositive relaxation time inside mask at (" +
                    std::to_string(x) + "," + std::to_string(y) + ")");
            }
        }
    }
}

Image apply_mask(const Image& map, const BinaryMask& mask, double fill) {
    require_same_grid(map.grid, mask.grid, "apply_mask");
    Image out = map;
    for (int y = 0; y < map.grid.height; ++y)
        for (int x = 0; x < map.grid.width; ++x)
            if (!mask.at(y, x)) out.values(y, x) = fill;
    return out;
}

std::vector<std::pair<int, int>> masked_indices(const BinaryMask& mask) {
    std::vector<std::pair<int, int>> idx;
    idx.reserve(mask.grid.size());
    for (int y = 0; y < mask.grid.height; ++y)
        for (int x = 0; x < mask.grid.width; ++x)
            if (mask.at(y, x)) idx.emplace_back(y, x);
    return idx;
}

Eigen::VectorXd masked_values(const Image& map, const BinaryMask& mask) {
    require_same_grid(map.grid, mask.grid, "masked_values");
    Eigen::VectorXd out(static_cast<Eigen::Index>(mask.count()));
    Eigen::Index i = 0;
    for (int y = 0; y < mask.grid.height; ++y)
        for (int x = 0; x < mask.grid.width; ++x)
            if (mask.at(y, x)) out[i++] = map.values(y, x);
    return out;
}

}  // namespace qsr
