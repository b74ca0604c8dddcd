#include "qsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsr {

namespace {

// Mirror with edge repeat: ... 2 1 | 1 2 3 ... | n-1 n | n n-1 ...
inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

Eigen::ArrayXXd gaussian_window(int half, double sigma) {
    const int size = 2 * half + 1;
    Eigen::ArrayXXd w(size, size);
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            w(dy + half, dx + half) =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    w /= w.sum();
    return w;
}

Eigen::ArrayXXd log_kernel(int half, double sigma) {
    // Gaussian normalized to unit sum, multiplied by the Laplacian factor,
    // then mean-subtracted so the kernel annihilates constants exactly.
    const int size = 2 * half + 1;
    Eigen::ArrayXXd g(size, size);
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            g(dy + half, dx + half) =
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    g /= g.sum();
    const double s2 = sigma * sigma;
    Eigen::ArrayXXd k(size, size);
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            k(dy + half, dx + half) =
                g(dy + half, dx + half) * (dx * dx + dy * dy - 2.0 * s2) / (s2 * s2);
    k -= k.mean();
    return k;
}

Eigen::ArrayXXd convolve_reflect(const Eigen::ArrayXXd& img, const Eigen::ArrayXXd& kernel) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    const int half = static_cast<int>(kernel.rows()) / 2;
    Eigen::ArrayXXd out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int dy = -half; dy <= half; ++dy) {
                const int yy = reflect(y + dy, h);
                for (int dx = -half; dx <= half; ++dx) {
                    acc += kernel(dy + half, dx + half) * img(yy, reflect(x + dx, w));
                }
            }
            out(y, x) = acc;
        }
    }
    return out;
}

constexpr int kSsimHalf = 5;      // 11x11 window
constexpr double kSsimSigma = 1.5;
constexpr int kHfenHalf = 7;      // 15x15 kernel
constexpr double kHfenSigma = 1.5;

}  // namespace

double ssim(const Image& candidate, const Image& reference, const BinaryMask& mask,
            double dynamic_range) {
    require_same_grid(candidate.grid, reference.grid, "ssim");
    require_same_grid(candidate.grid, mask.grid, "ssim");
    if (!(dynamic_range > 0)) {
        throw std::invalid_argument("ssim: dynamic_range must be positive");
    }
    const std::size_t n = mask.count();
    if (n == 0) throw std::invalid_argument("ssim: empty mask");

    static const Eigen::ArrayXXd window = gaussian_window(kSsimHalf, kSsimSigma);
    const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    const int h = candidate.grid.height;
    const int w = candidate.grid.width;

    double total = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(y, x)) continue;
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int dy = -kSsimHalf; dy <= kSsimHalf; ++dy) {
                const int yy = reflect(y + dy, h);
                for (int dx = -kSsimHalf; dx <= kSsimHalf; ++dx) {
                    const int xx = reflect(x + dx, w);
                    const double wgt = window(dy + kSsimHalf, dx + kSsimHalf);
                    const double a = candidate.values(yy, xx);
                    const double b = reference.values(yy, xx);
                    mu_a += wgt * a;
                    mu_b += wgt * b;
                    aa += wgt * a * a;
                    bb += wgt * b * b;
                    ab += wgt * a * b;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        }
    }
    return total / static_cast<double>(n);
}

double hfen(const Image& candidate, const Image& reference, const BinaryMask& mask) {
    require_same_grid(candidate.grid, reference.grid, "hfen");
    require_same_grid(candidate.grid, mask.grid, "hfen");
    if (mask.count() == 0) throw std::invalid_argument("hfen: empty mask");

    static const Eigen::ArrayXXd kernel = log_kernel(kHfenHalf, kHfenSigma);
    const Eigen::ArrayXXd log_c = convolve_reflect(candidate.values, kernel);
    const Eigen::ArrayXXd log_r = convolve_reflect(reference.values, kernel);

    double num = 0, den = 0;
    for (int y = 0; y < candidate.grid.height; ++y) {
        for (int x = 0; x < candidate.grid.width; ++x) {
            if (!mask.at(y, x)) continue;
            const double d = log_c(y, x) - log_r(y, x);
            num += d * d;
            den += log_r(y, x) * log_r(y, x);
        }
    }
    if (!(den > 0)) {
        throw std::invalid_argument("hfen: reference has zero LoG energy over the mask");
    }
    return std::sqrt(num) / std::sqrt(den);
}

MetricReport compute_report(const ParametricMaps& candidate, const ParametricMaps& baseline,
                            const ParametricMaps& reference, const BinaryMask& mask,
                            const std::array<double, 3>& dynamic_ranges) {
    const Image* cand[3] = {&candidate.pd, &candidate.t1, &candidate.t2};
    const Image* base[3] = {&baseline.pd, &baseline.t1, &baseline.t2};
    const Image* ref[3] = {&reference.pd, &reference.t1, &reference.t2};
    MetricReport report;
    for (int m = 0; m < 3; ++m) {
        report.candidate[m] = {ssim(*cand[m], *ref[m], mask, dynamic_ranges[m]),
                               hfen(*cand[m], *ref[m], mask)};
        report.baseline[m] = {ssim(*base[m], *ref[m], mask, dynamic_ranges[m]),
                              hfen(*base[m], *ref[m], mask)};
    }
    return report;
}

std::vector<RankedModel> rank_models(const std::vector<ModelScores>& models) {
    if (models.size() < 2) {
        throw std::invalid_argument("rank_models: need at least 2 models");
    }
    for (const auto& m : models) {
        for (int i = 0; i < 3; ++i) {
            if (!std::isfinite(m.ssim[i]) || !std::isfinite(m.hfen[i])) {
                throw std::invalid_argument("rank_models: missing metric cell for model '" +
                                            m.name + "'");
            }
        }
    }

    std::vector<RankedModel> out(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) out[i].name = models[i].name;

    // Cells 0..2: SSIM pd/t1/t2 (higher better); 3..5: HFEN (lower better).
    for (int cell = 0; cell < 6; ++cell) {
        for (std::size_t i = 0; i < models.size(); ++i) {
            int better = 0;
            for (std::size_t j = 0; j < models.size(); ++j) {
                const double vi = cell < 3 ? models[i].ssim[cell] : models[i].hfen[cell - 3];
                const double vj = cell < 3 ? models[j].ssim[cell] : models[j].hfen[cell - 3];
                const bool j_better = cell < 3 ? vj > vi : vj < vi;
                if (j_better) ++better;
            }
            out[i].ranks[cell] = better + 1;  // ties share the minimum rank
        }
    }
    for (auto& m : out) {
        m.total = 0;
        for (int r : m.ranks) m.total += r;
    }
    std::sort(out.begin(), out.end(), [](const RankedModel& a, const RankedModel& b) {
        return a.total != b.total ? a.total < b.total : a.name < b.name;
    });
    return out;
}

}  // namespace qsr
