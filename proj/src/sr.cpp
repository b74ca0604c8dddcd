#include "qsr/sr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsr {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kStepGrowth = 1.3;

// Masked z-score, quantized to single precision. The quantization makes
// the normalized guide an exact invariant of affine rescalings a*W+b
// (a > 0) of the stored guide, so solves on rescaled guides are
// bit-identical.
Eigen::VectorXd normalized_guide(const Image& guide, const BinaryMask& mask) {
    Eigen::VectorXd w = masked_values(guide, mask);
    const double mu = w.mean();
    const double var = (w.array() - mu).square().mean();
    if (!(var > 0)) {
        throw std::invalid_argument("guide_loss: guide has zero variance over the mask");
    }
    const double sd = std::sqrt(var);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w[i] = static_cast<double>(static_cast<float>((w[i] - mu) / sd));
    }
    return w;
}

struct ZScored {
    Eigen::VectorXd values;  // (raw - mu) / sd
    double mu = 0;
    double sd = 0;
};

ZScored zscore(const Eigen::VectorXd& raw) {
    ZScored z;
    z.mu = raw.mean();
    const double var = (raw.array() - z.mu).square().mean();
    if (!(var > 0)) {
        throw std::runtime_error("guide_loss: synthesized guide has zero variance over the mask");
    }
    z.sd = std::sqrt(var);
    z.values = (raw.array() - z.mu) / z.sd;
    return z;
}

double population_var(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return (v.array() - m).square().mean();
}

struct LossParts {
    double data = 0;
    double guide = 0;
    double total = 0;
};

LossParts loss_parts(const ParametricMaps& q, const SrProblem& problem) {
    LossParts parts;
    parts.data = data_loss(q, problem);
    parts.guide = problem.guides.empty() ? 0.0 : guide_loss(q, problem);
    parts.total = parts.data + problem.alpha * parts.guide;
    return parts;
}

double clamp(double v, const ChannelBox& box) { return std::min(std::max(v, box.lo), box.hi); }

}  // namespace

void SrProblem::validate() const {
    mask.grid.validate();
    require_same_grid(q_init.grid(), mask.grid, "SrProblem");
    for (const auto& obs : lr_contrasts) {
        require_same_grid(obs.image.grid, mask.grid, "SrProblem lr contrast");
        qsr::validate(obs.spec);
        obs.degrade.validate();
    }
    for (const auto& g : guides) {
        require_same_grid(g.image.grid, mask.grid, "SrProblem guide");
        qsr::validate(g.spec);
    }
    if (!(alpha >= 0)) throw std::invalid_argument("SrProblem: alpha must be >= 0");
    if (!(sigma > 0)) throw std::invalid_argument("SrProblem: sigma must be > 0");
    for (const ChannelBox* box : {&pd_box, &t1_box, &t2_box}) {
        if (!(box->lo <= box->hi)) throw std::invalid_argument("SrProblem: empty channel box");
    }
    if (pd_box.lo < 0 || !(t1_box.lo > kRelaxationFloorMs) ||
        !(t2_box.lo > kRelaxationFloorMs)) {
        throw std::invalid_argument("SrProblem: channel box floors too low");
    }
    q_init.validate(mask, MapBounds{pd_box.hi, t1_box.hi, t2_box.hi});
}

double data_loss(const ParametricMaps& q, const SrProblem& problem) {
    require_same_grid(q.grid(), problem.mask.grid, "data_loss");
    const double n = static_cast<double>(problem.mask.count());
    const double inv_var = 1.0 / (problem.sigma * problem.sigma);
    double total = 0;
    for (const auto& obs : problem.lr_contrasts) {
        const Image synth = evaluate(obs.spec, q, problem.mask);
        const Image predicted = lowpass(synth, obs.degrade);
        double sum_sq = 0;
        for (int y = 0; y < q.grid().height; ++y) {
            for (int x = 0; x < q.grid().width; ++x) {
                if (!problem.mask.at(y, x)) continue;
                const double d = predicted.values(y, x) - obs.image.values(y, x);
                sum_sq += d * d;
            }
        }
        total += sum_sq / n * inv_var;
    }
    return total;
}

double guide_loss(const ParametricMaps& q, const SrProblem& problem) {
    require_same_grid(q.grid(), problem.mask.grid, "guide_loss");
    double total = 0;
    for (const auto& g : problem.guides) {
        const Eigen::VectorXd w = normalized_guide(g.image, problem.mask);
        const Eigen::VectorXd raw = masked_values(evaluate(g.spec, q, problem.mask),
                                                  problem.mask);
        const ZScored what = zscore(raw);
        const Eigen::VectorXd diff = w - what.values;
        total += population_var(diff) / population_var(w);
    }
    return total;
}

double total_objective(const ParametricMaps& q, const SrProblem& problem) {
    return loss_parts(q, problem).total;
}

ObjectiveGradient objective_gradient(const ParametricMaps& q, const SrProblem& problem) {
    require_same_grid(q.grid(), problem.mask.grid, "objective_gradient");
    const ImageGrid& grid = q.grid();
    ObjectiveGradient grad{Image(grid, 0.0, "d_pd", ""), Image(grid, 0.0, "d_t1", ""),
                           Image(grid, 0.0, "d_t2", "")};
    const double n = static_cast<double>(problem.mask.count());

    // Data term: 2/(N sigma^2) * P(mask o (P M(q) - C)) chained through the
    // model Jacobian; P (lowpass) is its own adjoint.
    const double data_coeff = 2.0 / (n * problem.sigma * problem.sigma);
    for (const auto& obs : problem.lr_contrasts) {
        const Image synth = evaluate(obs.spec, q, problem.mask);
        const Image predicted = lowpass(synth, obs.degrade);
        Image residual(grid);
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                if (!problem.mask.at(y, x)) continue;
                residual.values(y, x) = predicted.values(y, x) - obs.image.values(y, x);
            }
        }
        const Image back = lowpass(residual, obs.degrade);
        const ModelJacobian jac = jacobian(obs.spec, q, problem.mask);
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                if (!problem.mask.at(y, x)) continue;
                const double g = data_coeff * back.values(y, x);
                grad.d_pd.values(y, x) += g * jac.d_pd.values(y, x);
                grad.d_t1.values(y, x) += g * jac.d_t1.values(y, x);
                grad.d_t2.values(y, x) += g * jac.d_t2.values(y, x);
            }
        }
    }

    // Guide term: gradient flows through the z-score of the synthesized
    // guide. With Wc the centered normalized guide, c = Var(Wc), s the
    // population std of the raw synthesis and What' its z-score:
    //   dL/dWhat_v = -2/(c N s) * (Wc_v - cov(Wc, What') * What'_v).
    const auto indices = masked_indices(problem.mask);
    for (const auto& gobs : problem.guides) {
        const Eigen::VectorXd w = normalized_guide(gobs.image, problem.mask);
        const double w_mean = w.mean();
        const Eigen::VectorXd wc = w.array() - w_mean;
        const double c = wc.squaredNorm() / n;

        const Eigen::VectorXd raw = masked_values(evaluate(gobs.spec, q, problem.mask),
                                                  problem.mask);
        const ZScored what = zscore(raw);
        const double cov = wc.dot(what.values) / n;

        const double coeff = problem.alpha * (-2.0) / (c * n * what.sd);
        const ModelJacobian jac = jacobian(gobs.spec, q, problem.mask);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const auto [y, x] = indices[i];
            const double g =
                coeff * (wc[static_cast<Eigen::Index>(i)] -
                         cov * what.values[static_cast<Eigen::Index>(i)]);
            grad.d_pd.values(y, x) += g * jac.d_pd.values(y, x);
            grad.d_t1.values(y, x) += g * jac.d_t1.values(y, x);
            grad.d_t2.values(y, x) += g * jac.d_t2.values(y, x);
        }
    }
    return grad;
}

SolveResult solve_sr(const SrProblem& problem, const SolverSettings& settings) {
    problem.validate();
    if (settings.max_iters < 1) throw std::invalid_argument("SolverSettings: max_iters >= 1");
    if (!(settings.step > 0)) throw std::invalid_argument("SolverSettings: step must be > 0");
    if (!(settings.tol >= 0)) throw std::invalid_argument("SolverSettings: tol must be >= 0");
    if (settings.max_backtracks < 1) {
        throw std::invalid_argument("SolverSettings: max_backtracks >= 1");
    }

    const auto indices = masked_indices(problem.mask);

    // Optimization runs in per-channel scaled variables u = q / scale.
    std::array<double, 3> scales = settings.param_scales;
    const Image* channels[3] = {&problem.q_init.pd, &problem.q_init.t1, &problem.q_init.t2};
    for (int c = 0; c < 3; ++c) {
        if (!(scales[c] > 0)) {
            scales[c] = masked_values(*channels[c], problem.mask).mean();
        }
        if (!(scales[c] > 0)) scales[c] = 1.0;
    }

    SolveResult result;
    result.maps = problem.q_init;
    const ChannelBox* boxes[3] = {&problem.pd_box, &problem.t1_box, &problem.t2_box};
    {
        Image* maps[3] = {&result.maps.pd, &result.maps.t1, &result.maps.t2};
        for (const auto& [y, x] : indices) {
            for (int c = 0; c < 3; ++c) {
                maps[c]->values(y, x) = clamp(maps[c]->values(y, x), *boxes[c]);
            }
        }
    }

    LossParts cur = loss_parts(result.maps, problem);
    result.log.push_back({0, cur.data, cur.guide, cur.total});

    double step = settings.step;
    for (int iter = 1; iter <= settings.max_iters; ++iter) {
        const ObjectiveGradient grad = objective_gradient(result.maps, problem);
        const Image* gch[3] = {&grad.d_pd, &grad.d_t1, &grad.d_t2};
        Image* mch[3] = {&result.maps.pd, &result.maps.t1, &result.maps.t2};

        bool accepted = false;
        bool stationary = false;
        ParametricMaps trial = result.maps;
        Image* tch[3] = {&trial.pd, &trial.t1, &trial.t2};
        LossParts cand;
        for (int bt = 0; bt < settings.max_backtracks; ++bt) {
            double dist_sq = 0;  // squared step length in scaled variables
            for (const auto& [y, x] : indices) {
                for (int c = 0; c < 3; ++c) {
                    const double next =
                        clamp(mch[c]->values(y, x) -
                                  step * scales[c] * scales[c] * gch[c]->values(y, x),
                              *boxes[c]);
                    tch[c]->values(y, x) = next;
                    const double du = (next - mch[c]->values(y, x)) / scales[c];
                    dist_sq += du * du;
                }
            }
            if (dist_sq == 0.0) {
                stationary = true;  // projected step cannot move: stationary point
                break;
            }
            cand = loss_parts(trial, problem);
            if (cand.total <= cur.total - kArmijo / step * dist_sq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (stationary) {
            result.converged = true;
            break;
        }
        if (!accepted) {
            result.warning = "line search stalled; returning best iterate";
            break;
        }

        const double prev_total = cur.total;
        result.maps = trial;
        cur = cand;
        result.log.push_back({iter, cur.data, cur.guide, cur.total});
        step *= kStepGrowth;

        if (prev_total - cur.total <= settings.tol * std::max(std::abs(prev_total), 1e-300)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace qsr
