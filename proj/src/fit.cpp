#include "qsr/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qsr {

namespace {

Eigen::VectorXd log_grid(double lo, double hi, int n) {
    Eigen::VectorXd g(n);
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < n; ++i) {
        g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
    }
    return g;
}

struct SeriesInfo {
    bool t1_sensitive = false;
    bool t2_sensitive = false;
};

SeriesInfo series_info(std::span<const AcquisitionSpec> specs) {
    SeriesInfo info;
    for (const auto& spec : specs) {
        info.t1_sensitive = info.t1_sensitive || depends_on_t1(spec);
        info.t2_sensitive = info.t2_sensitive || depends_on_t2(spec);
    }
    return info;
}

// Unit-PD model values tabulated over the active (t1, t2) grid; the
// per-voxel search is then a matrix-vector product plus a cell scan.
struct GridTables {
    Eigen::VectorXd t1_grid;  // single midpoint entry when t1 is not identifiable
    Eigen::VectorXd t2_grid;
    Eigen::MatrixXd unit_values;  // (n1*n2, n_specs)
    Eigen::VectorXd sum_sq;       // rowwise squared norm of unit_values
};

GridTables build_tables(std::span<const AcquisitionSpec> specs, const FitSettings& s,
                        const SeriesInfo& info) {
    GridTables t;
    t.t1_grid = info.t1_sensitive ? log_grid(s.t1_min, s.t1_max, s.t1_points)
                                  : Eigen::VectorXd::Constant(1, std::sqrt(s.t1_min * s.t1_max));
    t.t2_grid = info.t2_sensitive ? log_grid(s.t2_min, s.t2_max, s.t2_points)
                                  : Eigen::VectorXd::Constant(1, std::sqrt(s.t2_min * s.t2_max));
    const Eigen::Index n1 = t.t1_grid.size();
    const Eigen::Index n2 = t.t2_grid.size();
    const Eigen::Index ns = static_cast<Eigen::Index>(specs.size());
    t.unit_values.resize(n1 * n2, ns);
    for (Eigen::Index a = 0; a < n1; ++a) {
        for (Eigen::Index b = 0; b < n2; ++b) {
            const Eigen::Index row = a * n2 + b;
            for (Eigen::Index i = 0; i < ns; ++i) {
                t.unit_values(row, i) = signal(specs[i], 1.0, t.t1_grid[a], t.t2_grid[b]);
            }
        }
    }
    t.sum_sq = t.unit_values.rowwise().squaredNorm();
    return t;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double rss_at(std::span<const double> signals, std::span<const AcquisitionSpec> specs,
              double pd, double t1, double t2) {
    double rss = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double r = signal(specs[i], pd, t1, t2) - signals[i];
        rss += r * r;
    }
    return rss;
}

VoxelFit fit_with_tables(std::span<const double> signals,
                         std::span<const AcquisitionSpec> specs, const FitSettings& settings,
                         const GridTables& tables, const SeriesInfo& info) {
    const Eigen::Index ns = static_cast<Eigen::Index>(signals.size());
    VoxelFit fit;
    fit.t1 = std::sqrt(settings.t1_min * settings.t1_max);
    fit.t2 = std::sqrt(settings.t2_min * settings.t2_max);

    bool all_zero = true;
    double sum_sq_signal = 0;
    for (double s : signals) {
        all_zero = all_zero && s == 0.0;
        sum_sq_signal += s * s;
    }
    if (all_zero) return fit;  // pd 0, residual 0, midpoints, unidentifiable

    fit.t1_identifiable = info.t1_sensitive;
    fit.t2_identifiable = info.t2_sensitive;

    Eigen::VectorXd s(ns);
    for (Eigen::Index i = 0; i < ns; ++i) s[i] = signals[static_cast<std::size_t>(i)];
    const Eigen::VectorXd inner = tables.unit_values * s;  // per cell: sum_i s_i f_i

    const Eigen::Index n2 = tables.t2_grid.size();
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::Index best_cell = -1;
    double best_pd = 0;
    for (Eigen::Index cell = 0; cell < inner.size(); ++cell) {
        const double g = tables.sum_sq[cell];
        if (!(g > 0)) continue;
        const double pd = clamp(inner[cell] / g, 0.0, settings.bounds.pd_max);
        const double rss = sum_sq_signal - 2.0 * pd * inner[cell] + pd * pd * g;
        if (rss < best_rss) {
            best_rss = rss;
            best_cell = cell;
            best_pd = pd;
        }
    }
    if (best_cell < 0) {
        throw std::runtime_error("fit_voxel: model values are zero over the entire grid");
    }

    double pd = best_pd;
    double t1 = tables.t1_grid[best_cell / n2];
    double t2 = tables.t2_grid[best_cell % n2];
    double rss = best_rss;

    // Gauss-Newton over the identifiable parameters, clamped; steps are
    // accepted only when they reduce the residual.
    const int n_active = 1 + (info.t1_sensitive ? 1 : 0) + (info.t2_sensitive ? 1 : 0);
    Eigen::MatrixXd jac(ns, n_active);
    Eigen::VectorXd res(ns);
    for (int iter = 0; iter < settings.refine_iters; ++iter) {
        for (Eigen::Index i = 0; i < ns; ++i) {
            const auto& spec = specs[static_cast<std::size_t>(i)];
            res[i] = signal(spec, pd, t1, t2) - s[i];
            const SignalGrad g = signal_grad(spec, pd, t1, t2);
            int col = 0;
            jac(i, col++) = g.d_pd;
            if (info.t1_sensitive) jac(i, col++) = g.d_t1;
            if (info.t2_sensitive) jac(i, col++) = g.d_t2;
        }
        Eigen::MatrixXd normal = jac.transpose() * jac;
        normal.diagonal().array() += 1e-12 * (normal.trace() + 1e-300);
        const Eigen::VectorXd delta = normal.ldlt().solve(-jac.transpose() * res);
        if (!delta.allFinite()) break;

        bool accepted = false;
        double new_pd = pd, new_t1 = t1, new_t2 = t2, new_rss = rss;
        for (double scale = 1.0; scale > 1e-7; scale *= 0.5) {
            int col = 0;
            new_pd = clamp(pd + scale * delta[col++], 0.0, settings.bounds.pd_max);
            new_t1 = info.t1_sensitive
                         ? clamp(t1 + scale * delta[col++], settings.t1_min, settings.t1_max)
                         : t1;
            new_t2 = info.t2_sensitive
                         ? clamp(t2 + scale * delta[col++], settings.t2_min, settings.t2_max)
                         : t2;
            new_rss = rss_at(signals, specs, new_pd, new_t1, new_t2);
            if (new_rss <= rss) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        const double step = std::max({std::abs(new_pd - pd) / std::max(std::abs(pd), 1e-12),
                                      std::abs(new_t1 - t1) / std::max(std::abs(t1), 1e-12),
                                      std::abs(new_t2 - t2) / std::max(std::abs(t2), 1e-12)});
        pd = new_pd;
        t1 = new_t1;
        t2 = new_t2;
        rss = new_rss;
        if (step < settings.tol) break;
    }

    fit.pd = pd;
    fit.t1 = t1;
    fit.t2 = t2;
    fit.residual = rss;
    return fit;
}

void check_series(std::span<const double> signals, std::span<const AcquisitionSpec> specs) {
    if (signals.empty() || specs.empty()) {
        throw std::invalid_argument("fit_voxel: empty series");
    }
    if (signals.size() != specs.size()) {
        throw std::invalid_argument("fit_voxel: signals/specs length mismatch");
    }
    if (signals.size() < 3) {
        throw std::invalid_argument("fit_voxel: need at least 3 contrasts");
    }
    for (const auto& spec : specs) {
        validate(spec);
        if (!linear_in_pd(spec)) {
            throw std::invalid_argument(
                "fit_voxel: series contains a model that is not linear in PD");
        }
    }
}

}  // namespace

void FitSettings::validate() const {
    if (t1_points < 2 || t2_points < 2) {
        throw std::invalid_argument("FitSettings: grid counts must be >= 2");
    }
    if (!(t1_min > 0) || !(t1_min < t1_max) || !(t2_min > 0) || !(t2_min < t2_max)) {
        throw std::invalid_argument("FitSettings: grid bounds must satisfy 0 < min < max");
    }
    if (t1_max > bounds.t1_max || t2_max > bounds.t2_max) {
        throw std::invalid_argument("FitSettings: grids exceed map bounds");
    }
    if (refine_iters < 0 || !(tol > 0)) {
        throw std::invalid_argument("FitSettings: bad refinement settings");
    }
}

VoxelFit fit_voxel(std::span<const double> signals, std::span<const AcquisitionSpec> specs,
                   const FitSettings& settings) {
    settings.validate();
    check_series(signals, specs);
    const SeriesInfo info = series_info(specs);
    const GridTables tables = build_tables(specs, settings, info);
    return fit_with_tables(signals, specs, settings, tables, info);
}

ParametricMaps fit_map(const std::vector<Image>& contrasts,
                       const std::vector<AcquisitionSpec>& specs, const BinaryMask& mask,
                       const FitSettings& settings) {
    settings.validate();
    if (contrasts.size() != specs.size()) {
        throw std::invalid_argument("fit_map: contrasts/specs length mismatch");
    }
    for (const auto& c : contrasts) {
        require_same_grid(c.grid, mask.grid, "fit_map");
    }
    std::vector<double> signals(contrasts.size());
    check_series(signals, specs);

    const SeriesInfo info = series_info(specs);
    const GridTables tables = build_tables(specs, settings, info);

    ParametricMaps maps{Image(mask.grid, 0.0, "PD", "a.u."), Image(mask.grid, 0.0, "T1", "ms"),
                        Image(mask.grid, 0.0, "T2", "ms")};
    for (int y = 0; y < mask.grid.height; ++y) {
        for (int x = 0; x < mask.grid.width; ++x) {
            if (!mask.at(y, x)) continue;
            for (std::size_t i = 0; i < contrasts.size(); ++i) {
                signals[i] = contrasts[i].values(y, x);
            }
            const VoxelFit fit = fit_with_tables(signals, specs, settings, tables, info);
            maps.pd.values(y, x) = fit.pd;
            maps.t1.values(y, x) = fit.t1;
            maps.t2.values(y, x) = fit.t2;
        }
    }
    return maps;
}

}  // namespace qsr
