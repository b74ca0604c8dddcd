#include "qsr/signal_models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qsr {

namespace {

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

void require_nonneg(double v, const char* name) {
    if (!(v >= 0)) {
        throw std::invalid_argument(std::string("AcquisitionSpec: ") + name +
                                    " must be nonnegative");
    }
}

void require_flip(double deg) {
    if (!(deg > 0) || !(deg < 180)) {
        throw std::invalid_argument("AcquisitionSpec: flip angle must be in (0, 180) degrees");
    }
}

void check_relaxation(const AcquisitionSpec& spec, double t1, double t2) {
    if (depends_on_t1(spec) && !(t1 > kRelaxationFloorMs)) {
        throw std::domain_error("signal: t1 at or below floor (" + std::to_string(t1) + " ms)");
    }
    if (depends_on_t2(spec) && !(t2 > kRelaxationFloorMs)) {
        throw std::domain_error("signal: t2 at or below floor (" + std::to_string(t2) + " ms)");
    }
}

double parse_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("AcquisitionSpec: bad value '" + value + "' for '" + key +
                                    "'");
    }
}

}  // namespace

void validate(const AcquisitionSpec& spec) {
    std::visit(
        [](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SatRecovery>) {
                require_nonneg(s.tr, "tr");
            } else if constexpr (std::is_same_v<S, SpinEchoDecay>) {
                require_nonneg(s.te, "te");
            } else if constexpr (std::is_same_v<S, IrSpgr>) {
                require_nonneg(s.tr, "tr");
                require_nonneg(s.te, "te");
                require_nonneg(s.tp, "tp");
                require_nonneg(s.td, "td");
                require_flip(s.flip_deg);
            } else if constexpr (std::is_same_v<S, SpinEchoT2w>) {
                require_nonneg(s.tr, "tr");
                require_nonneg(s.te, "te");
                require_flip(s.flip_deg);
                if (s.te > s.tr) {
                    throw std::invalid_argument("AcquisitionSpec: spin_echo_t2w needs te <= tr");
                }
            } else {
                require_nonneg(s.tr, "tr");
                require_nonneg(s.te, "te");
                require_nonneg(s.ti, "ti");
            }
        },
        spec);
}

std::string model_name(const AcquisitionSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SatRecovery>) return "sat_recovery";
            if constexpr (std::is_same_v<S, SpinEchoDecay>) return "spin_echo_decay";
            if constexpr (std::is_same_v<S, IrSpgr>) return "ir_spgr";
            if constexpr (std::is_same_v<S, SpinEchoT2w>) return "spin_echo_t2w";
            return "t2_flair";
        },
        spec);
}

std::string format_spec(const AcquisitionSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "model=" << model_name(spec);
    std::visit(
        [&os](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SatRecovery>) {
                os << " tr=" << s.tr;
            } else if constexpr (std::is_same_v<S, SpinEchoDecay>) {
                os << " te=" << s.te;
            } else if constexpr (std::is_same_v<S, IrSpgr>) {
                os << " tr=" << s.tr << " te=" << s.te << " tp=" << s.tp << " td=" << s.td
                   << " flip_deg=" << s.flip_deg;
            } else if constexpr (std::is_same_v<S, SpinEchoT2w>) {
                os << " tr=" << s.tr << " te=" << s.te << " flip_deg=" << s.flip_deg;
            } else {
                os << " tr=" << s.tr << " te=" << s.te << " ti=" << s.ti;
                if (s.scale_by_pd) os << " scale_by_pd=1";
            }
        },
        spec);
    return os.str();
}

AcquisitionSpec parse_spec(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty() || pairs.front().first != "model") {
        throw std::invalid_argument("AcquisitionSpec: record must start with model=<name>");
    }
    const std::string& name = pairs.front().second;

    auto build = [&pairs](auto spec, std::initializer_list<const char*> keys,
                          auto setter) -> AcquisitionSpec {
        for (std::size_t i = 1; i < pairs.size(); ++i) {
            const auto& [key, value] = pairs[i];
            bool known = false;
            for (const char* k : keys) {
                if (key == k) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                throw std::invalid_argument("AcquisitionSpec: unknown key '" + key + "'");
            }
            setter(spec, key, value);
        }
        AcquisitionSpec out = spec;
        validate(out);
        return out;
    };

    if (name == "sat_recovery") {
        return build(
            SatRecovery{}, {"tr"},
            [](SatRecovery& s, const std::string& k, const std::string& v) {
                s.tr = parse_num(k, v);
            });
    }
    if (name == "spin_echo_decay") {
        return build(
            SpinEchoDecay{}, {"te"},
            [](SpinEchoDecay& s, const std::string& k, const std::string& v) {
                s.te = parse_num(k, v);
            });
    }
    if (name == "ir_spgr") {
        return build(IrSpgr{}, {"tr", "te", "tp", "td", "flip_deg"},
                     [](IrSpgr& s, const std::string& k, const std::string& v) {
                         const double num = parse_num(k, v);
                         if (k == "tr") s.tr = num;
                         else if (k == "te") s.te = num;
                         else if (k == "tp") s.tp = num;
                         else if (k == "td") s.td = num;
                         else s.flip_deg = num;
                     });
    }
    if (name == "spin_echo_t2w") {
        return build(SpinEchoT2w{}, {"tr", "te", "flip_deg"},
                     [](SpinEchoT2w& s, const std::string& k, const std::string& v) {
                         const double num = parse_num(k, v);
                         if (k == "tr") s.tr = num;
                         else if (k == "te") s.te = num;
                         else s.flip_deg = num;
                     });
    }
    if (name == "t2_flair") {
        return build(T2Flair{}, {"tr", "te", "ti", "scale_by_pd"},
                     [](T2Flair& s, const std::string& k, const std::string& v) {
                         if (k == "scale_by_pd") {
                             s.scale_by_pd = parse_num(k, v) != 0;
                             return;
                         }
                         const double num = parse_num(k, v);
                         if (k == "tr") s.tr = num;
                         else if (k == "te") s.te = num;
                         else s.ti = num;
                     });
    }
    throw std::invalid_argument("AcquisitionSpec: unknown model '" + name + "'");
}

bool depends_on_t1(const AcquisitionSpec& spec) {
    return !std::holds_alternative<SpinEchoDecay>(spec);
}

bool depends_on_t2(const AcquisitionSpec& spec) {
    return !std::holds_alternative<SatRecovery>(spec);
}

bool linear_in_pd(const AcquisitionSpec& spec) {
    if (const auto* fl = std::get_if<T2Flair>(&spec)) return fl->scale_by_pd;
    return true;
}

double signal(const AcquisitionSpec& spec, double pd, double t1, double t2) {
    check_relaxation(spec, t1, t2);
    return std::visit(
        [pd, t1, t2](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, SatRecovery>) {
                return pd * (1.0 - std::exp(-s.tr / t1));
            } else if constexpr (std::is_same_v<S, SpinEchoDecay>) {
                return pd * std::exp(-s.te / t2);
            } else if constexpr (std::is_same_v<S, IrSpgr>) {
                const double e1 = std::exp(-s.tr / t1);
                const double cosa = std::cos(deg2rad(s.flip_deg));
                const double mz_eq =
                    pd * (1.0 - e1) / (1.0 - cosa * e1) * std::exp(-s.te / t2);
                const double ed = std::exp(-s.td / t1);
                const double ep = std::exp(-s.tp / t1);
                return -mz_eq * ed + pd * (1.0 - ed) * ep + pd * (1.0 - ep);
            } else if constexpr (std::is_same_v<S, SpinEchoT2w>) {
                const double beta = deg2rad(180.0 - s.flip_deg);
                const double e1 = std::exp(-(s.tr - s.te) / t1);
                return pd * std::sin(beta) * (1.0 - e1) / (1.0 - std::cos(beta) * e1) *
                       std::exp(-s.te / t2);
            } else {
                const double bracket =
                    1.0 - 2.0 * std::exp(-s.ti / t1) + std::exp(-s.tr / t1);
                const double v = bracket * std::exp(-s.te / t2);
                return s.scale_by_pd ? pd * v : v;
            }
        },
        spec);
}

SignalGrad signal_grad(const AcquisitionSpec& spec, double pd, double t1, double t2) {
    check_relaxation(spec, t1, t2);
    return std::visit(
        [pd, t1, t2](const auto& s) -> SignalGrad {
            using S = std::decay_t<decltype(s)>;
            SignalGrad g;
            if constexpr (std::is_same_v<S, SatRecovery>) {
                const double e1 = std::exp(-s.tr / t1);
                g.d_pd = 1.0 - e1;
                g.d_t1 = -pd * e1 * s.tr / (t1 * t1);
                g.d_t2 = 0.0;
            } else if constexpr (std::is_same_v<S, SpinEchoDecay>) {
                const double e2 = std::exp(-s.te / t2);
                g.d_pd = e2;
                g.d_t1 = 0.0;
                g.d_t2 = pd * e2 * s.te / (t2 * t2);
            } else if constexpr (std::is_same_v<S, IrSpgr>) {
                const double e1 = std::exp(-s.tr / t1);
                const double cosa = std::cos(deg2rad(s.flip_deg));
                const double denom = 1.0 - cosa * e1;
                const double a = (1.0 - e1) / denom;  // saturation factor
                const double e2 = std::exp(-s.te / t2);
                const double ed = std::exp(-s.td / t1);
                const double ep = std::exp(-s.tp / t1);

                const double unit = -a * e2 * ed + (1.0 - ed) * ep + (1.0 - ep);
                g.d_pd = unit;

                // d/dt1 of e^{-T/t1} is e^{-T/t1} * T / t1^2
                const double de1 = e1 * s.tr / (t1 * t1);
                const double ded = ed * s.td / (t1 * t1);
                const double dep = ep * s.tp / (t1 * t1);
                const double da = de1 * (cosa - 1.0) / (denom * denom);
                g.d_t1 = pd * (-e2 * (da * ed + a * ded) - ded * ep + (1.0 - ed) * dep -
                               dep);
                g.d_t2 = -pd * a * ed * e2 * s.te / (t2 * t2);
            } else if constexpr (std::is_same_v<S, SpinEchoT2w>) {
                const double beta = deg2rad(180.0 - s.flip_deg);
                const double sinb = std::sin(beta);
                const double cosb = std::cos(beta);
                const double e1 = std::exp(-(s.tr - s.te) / t1);
                const double denom = 1.0 - cosb * e1;
                const double a = (1.0 - e1) / denom;
                const double e2 = std::exp(-s.te / t2);

                g.d_pd = sinb * a * e2;
                const double de1 = e1 * (s.tr - s.te) / (t1 * t1);
                const double da = de1 * (cosb - 1.0) / (denom * denom);
                g.d_t1 = pd * sinb * da * e2;
                g.d_t2 = pd * sinb * a * e2 * s.te / (t2 * t2);
            } else {
                const double ei = std::exp(-s.ti / t1);
                const double er = std::exp(-s.tr / t1);
                const double e2 = std::exp(-s.te / t2);
                const double bracket = 1.0 - 2.0 * ei + er;
                const double scale = s.scale_by_pd ? pd : 1.0;
                g.d_pd = s.scale_by_pd ? bracket * e2 : 0.0;
                g.d_t1 = scale * e2 *
                         (-2.0 * ei * s.ti / (t1 * t1) + er * s.tr / (t1 * t1));
                g.d_t2 = scale * bracket * e2 * s.te / (t2 * t2);
            }
            return g;
        },
        spec);
}

namespace {

void check_voxel_relaxation(double t1, double t2, int x, int y) {
    if (!(t1 > kRelaxationFloorMs) || !(t2 > kRelaxationFloorMs)) {
        throw std::domain_error("evaluate: relaxation time at or below floor at (" +
                                std::to_string(x) + "," + std::to_string(y) + ")");
    }
}

}  // namespace

Image evaluate(const AcquisitionSpec& spec, const ParametricMaps& q, const BinaryMask& mask) {
    validate(spec);
    require_same_grid(q.grid(), mask.grid, "evaluate");
    Image out(q.grid(), 0.0, model_name(spec), "a.u.");
    for (int y = 0; y < q.grid().height; ++y) {
        for (int x = 0; x < q.grid().width; ++x) {
            if (!mask.at(y, x)) continue;
            check_voxel_relaxation(q.t1.values(y, x), q.t2.values(y, x), x, y);
            out.values(y, x) =
                signal(spec, q.pd.values(y, x), q.t1.values(y, x), q.t2.values(y, x));
        }
    }
    return out;
}

ModelJacobian jacobian(const AcquisitionSpec& spec, const ParametricMaps& q,
                       const BinaryMask& mask) {
    validate(spec);
    require_same_grid(q.grid(), mask.grid, "jacobian");
    ModelJacobian jac{Image(q.grid(), 0.0, "d_pd", ""), Image(q.grid(), 0.0, "d_t1", ""),
                      Image(q.grid(), 0.0, "d_t2", "")};
    for (int y = 0; y < q.grid().height; ++y) {
        for (int x = 0; x < q.grid().width; ++x) {
            if (!mask.at(y, x)) continue;
            check_voxel_relaxation(q.t1.values(y, x), q.t2.values(y, x), x, y);
            const SignalGrad g =
                signal_grad(spec, q.pd.values(y, x), q.t1.values(y, x), q.t2.values(y, x));
            jac.d_pd.values(y, x) = g.d_pd;
            jac.d_t1.values(y, x) = g.d_t1;
            jac.d_t2.values(y, x) = g.d_t2;
        }
    }
    return jac;
}

std::vector<AcquisitionSpec> standard_contrast_set() {
    std::vector<AcquisitionSpec> specs;
    specs.reserve(12);
    for (double tr : {360.0, 540.0, 810.0, 1215.0, 1822.0, 2733.0}) {
        specs.push_back(SatRecovery{tr});
    }
    for (double te : {10.0, 20.0, 40.0, 80.0, 160.0, 320.0}) {
        specs.push_back(SpinEchoDecay{te});
    }
    return specs;
}

IrSpgr standard_t1w_guide() { return IrSpgr{6.6, 2.6, 450.0, 0.0, 12.0}; }

SpinEchoT2w standard_t2w_guide() { return SpinEchoT2w{5211.0, 146.0, 160.0}; }

}  // namespace qsr
