/**
 * @file programs.hpp
 * @brief Deterministic equivalents of the stochastic multiresponse criteria.
 *
 * Each constructor turns a fitted surface plus a MethodConfig into a
 * ScalarProgram: one objective over x, optional equality constraints and
 * the feasible region. With m_k(x) = z'(x)b_k and s_k(x) = sqrt(sigma_kk q(x)):
 *
 *   V-model                 c q(x)
 *   mean weighting          sum w_k m_k(x)
 *   modified E, weighting   r1 sum w_k m_k(x) + r2 c q(x)
 *   modified E, epsilon     c q(x)            s.t. m_k(x) = tau_k for all k
 *   P-model term k          (tau_k - m_k(x)) / s_k(x)
 *   Kataoka term k          m_k(x) + Phi^{-1}(confidence) s_k(x)
 *   goal programming        sum w_k |kataoka_k(x) - tau_k|
 *
 * where c is MethodConfig::variance_scale.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsopt/fit.hpp"
#include "rsopt/linalg.hpp"
#include "rsopt/model.hpp"
#include "rsopt/normal.hpp"

namespace rsopt {

enum class MethodKind {
    v_model,
    mean_weighting,
    modified_e_weighting,
    modified_e_epsilon,
    p_model_weighting,
    p_model_epsilon,
    kataoka_weighting,
    kataoka_epsilon,
    goal_programming,
};

inline constexpr MethodKind all_method_kinds[] = {
    MethodKind::v_model,           MethodKind::mean_weighting,    MethodKind::modified_e_weighting,
    MethodKind::modified_e_epsilon, MethodKind::p_model_weighting, MethodKind::p_model_epsilon,
    MethodKind::kataoka_weighting, MethodKind::kataoka_epsilon,   MethodKind::goal_programming,
};

inline std::string_view method_name(MethodKind kind) {
    switch (kind) {
    case MethodKind::v_model: return "v-model";
    case MethodKind::mean_weighting: return "mean-weighting";
    case MethodKind::modified_e_weighting: return "modified-e-weighting";
    case MethodKind::modified_e_epsilon: return "modified-e-epsilon";
    case MethodKind::p_model_weighting: return "p-model-weighting";
    case MethodKind::p_model_epsilon: return "p-model-epsilon";
    case MethodKind::kataoka_weighting: return "kataoka-weighting";
    case MethodKind::kataoka_epsilon: return "kataoka-epsilon";
    case MethodKind::goal_programming: return "goal-programming";
    }
    return "unknown";
}

inline MethodKind parse_method_kind(std::string_view name) {
    for (MethodKind k : all_method_kinds)
        if (method_name(k) == name) return k;
    throw Error("unknown method '" + std::string(name) + "'");
}

/// Knobs shared by every method; each constructor reads only what it needs.
struct MethodConfig {
    Vector tau;                       ///< targets / aspiration levels
    Vector w;                         ///< response weights, nonnegative, summing to 1
    double confidence = 0.5;          ///< probability level of the Kataoka terms
    double r1 = 1.0;                  ///< modified E-model weight on the mean part
    double r2 = 0.0;                  ///< modified E-model weight on the variance part
    double variance_scale = 1.0;      ///< multiplies q(x) in scalarized objectives
    std::size_t primary_index = 0;    ///< retained objective of epsilon programs (0-based)
    Vector epsilon;                   ///< right-hand sides of P-model epsilon constraints
    bool epsilon_inequality = false;  ///< constraints as g(x) <= 0 instead of g(x) = 0
};

enum class ConstraintSense { equal, less_equal };

using PointFunction = std::function<double(std::span<const double>)>;

struct ScalarProgram {
    MethodKind kind;
    std::string descriptor;
    MethodConfig config;
    Region region;
    PointFunction objective;
    std::vector<PointFunction> constraints;  ///< g_i(x) required == 0 (or <= 0)
    ConstraintSense sense = ConstraintSense::equal;

    bool constrained() const noexcept { return !constraints.empty(); }

    /// Violation magnitude of constraint i at x.
    double residual(std::size_t i, std::span<const double> x) const {
        const double g = constraints[i](x);
        return sense == ConstraintSense::equal ? std::abs(g) : std::max(g, 0.0);
    }

    Vector residuals(std::span<const double> x) const {
        Vector out(constraints.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = residual(i, x);
        return out;
    }

    /// Objective plus mu times the squared violations.
    double merit(std::span<const double> x, double mu) const {
        double f = objective(x);
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            const double r = residual(i, x);
            f += mu * r * r;
        }
        return f;
    }
};

struct GoalDeviations {
    Vector d_plus;
    Vector d_minus;
};

// ---------------------------------------------------------------------------
// Per-point quantities

namespace detail {

struct SurfacePoint {
    Vector mean;  ///< m_k(x)
    double q;     ///< z'(X'X)^{-1}z
};

inline SurfacePoint surface_at(const FittedModel& model, std::span<const double> x) {
    const Vector z = evaluate_basis(x, model.terms);
    SurfacePoint s{Vector(model.r(), 0.0), quadratic_form(model.xtx_inv, z)};
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t k = 0; k < s.mean.size(); ++k) s.mean[k] += z[j] * model.b_hat(j, k);
    return s;
}

inline double response_sd(const FittedModel& model, const SurfacePoint& s, std::size_t k) {
    return std::sqrt(std::max(0.0, model.sigma_hat(k, k) * s.q));
}

inline void require_length(const Vector& v, std::size_t r, const char* what) {
    if (v.size() != r)
        throw Error(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                    std::to_string(r));
}

inline void require_weights(const Vector& w, std::size_t r) {
    require_length(w, r, "weight vector");
    double sum = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw Error("weights must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("weights must sum to 1");
}

inline void require_tau(const Vector& tau, std::size_t r) {
    require_length(tau, r, "target vector");
    for (double t : tau)
        if (!std::isfinite(t)) throw Error("targets must be finite");
}

inline void require_confidence(double c) {
    if (!(c > 0.0 && c < 1.0)) throw Error("confidence must lie in (0,1)");
}

inline void require_primary(std::size_t k, std::size_t r) {
    if (k >= r) throw Error("primary response index out of range");
}

inline Vector p_terms(const FittedModel& model, std::span<const double> tau, const SurfacePoint& s) {
    Vector out(model.r());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double sd = response_sd(model, s, k);
        if (!(sd > 0.0)) throw Error("zero predictive variance for response " + model.responses[k]);
        out[k] = (tau[k] - s.mean[k]) / sd;
    }
    return out;
}

inline Vector k_terms(const FittedModel& model, double z_conf, const SurfacePoint& s) {
    Vector out(model.r());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = s.mean[k] + z_conf * response_sd(model, s, k);
    return out;
}

inline std::string epsilon_suffix(const MethodConfig& cfg) {
    return cfg.epsilon_inequality ? " (epsilon-constraint, <=)" : " (epsilon-constraint)";
}

}  // namespace detail

/// Standardized shortfalls (tau_k - m_k(x)) / s_k(x).
inline Vector p_model_terms(const FittedModel& model, std::span<const double> tau, std::span<const double> x) {
    if (tau.size() != model.r()) throw Error("target vector length differs from r");
    return detail::p_terms(model, tau, detail::surface_at(model, x));
}

/// m_k(x) + Phi^{-1}(confidence) s_k(x).
inline Vector kataoka_terms(const FittedModel& model, const MethodConfig& cfg, std::span<const double> x) {
    detail::require_confidence(cfg.confidence);
    return detail::k_terms(model, normal_quantile(cfg.confidence), detail::surface_at(model, x));
}

inline GoalDeviations goal_deviations(const FittedModel& model, const MethodConfig& cfg,
                                      std::span<const double> x) {
    detail::require_tau(cfg.tau, model.r());
    const Vector t = kataoka_terms(model, cfg, x);
    GoalDeviations d{Vector(t.size()), Vector(t.size())};
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double gap = t[k] - cfg.tau[k];
        d.d_plus[k] = std::max(gap, 0.0);
        d.d_minus[k] = std::max(-gap, 0.0);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Program constructors

inline ScalarProgram v_model(const FittedModel& model, const MethodConfig& cfg, const Region& region) {
    if (!(cfg.variance_scale > 0.0)) throw Error("variance_scale must be positive");
    auto m = std::make_shared<const FittedModel>(model);
    const double scale = cfg.variance_scale;
    return {MethodKind::v_model, "V-model", cfg, region,
            [m, scale](std::span<const double> x) { return scale * unit_variance(*m, x); }, {}, ConstraintSense::equal};
}

inline ScalarProgram mean_weighting(const FittedModel& model, const MethodConfig& cfg, const Region& region) {
    detail::require_weights(cfg.w, model.r());
    auto m = std::make_shared<const FittedModel>(model);
    return {MethodKind::mean_weighting, "E-model (weighting method)", cfg, region,
            [m, w = cfg.w](std::span<const double> x) { return dot(w, predict(*m, x)); }, {}, ConstraintSense::equal};
}

inline ScalarProgram modified_e_weighting(const FittedModel& model, const MethodConfig& cfg,
                                          const Region& region) {
    detail::require_weights(cfg.w, model.r());
    if (!(cfg.r1 >= 0.0 && cfg.r2 >= 0.0) || std::abs(cfg.r1 + cfg.r2 - 1.0) > 1e-9)
        throw Error("r1 and r2 must be nonnegative and sum to 1");
    if (!(cfg.variance_scale > 0.0)) throw Error("variance_scale must be positive");
    auto m = std::make_shared<const FittedModel>(model);
    return {MethodKind::modified_e_weighting, "Modified E-model (weighting method)", cfg, region,
            [m, cfg](std::span<const double> x) {
                const auto s = detail::surface_at(*m, x);
                return cfg.r1 * dot(cfg.w, s.mean) + cfg.r2 * cfg.variance_scale * s.q;
            }, {}, ConstraintSense::equal};
}

inline ScalarProgram modified_e_epsilon(const FittedModel& model, const MethodConfig& cfg,
                                        const Region& region) {
    detail::require_tau(cfg.tau, model.r());
    if (!(cfg.variance_scale > 0.0)) throw Error("variance_scale must be positive");
    auto m = std::make_shared<const FittedModel>(model);
    ScalarProgram prog{MethodKind::modified_e_epsilon, "Modified E-model" + detail::epsilon_suffix(cfg), cfg,
                       region,
                       [m, scale = cfg.variance_scale](std::span<const double> x) {
                           return scale * unit_variance(*m, x);
                       }, {}, ConstraintSense::equal};
    for (std::size_t k = 0; k < model.r(); ++k)
        prog.constraints.push_back(
            [m, k, t = cfg.tau[k]](std::span<const double> x) { return predict(*m, x)[k] - t; });
    prog.sense = cfg.epsilon_inequality ? ConstraintSense::less_equal : ConstraintSense::equal;
    return prog;
}

inline ScalarProgram p_model_weighting(const FittedModel& model, const MethodConfig& cfg,
                                       const Region& region) {
    detail::require_tau(cfg.tau, model.r());
    detail::require_weights(cfg.w, model.r());
    auto m = std::make_shared<const FittedModel>(model);
    return {MethodKind::p_model_weighting, "P-model (weighting method)", cfg, region,
            [m, cfg](std::span<const double> x) {
                return dot(cfg.w, detail::p_terms(*m, cfg.tau, detail::surface_at(*m, x)));
            }, {}, ConstraintSense::equal};
}

inline ScalarProgram p_model_epsilon(const FittedModel& model, const MethodConfig& cfg, const Region& region) {
    detail::require_tau(cfg.tau, model.r());
    detail::require_primary(cfg.primary_index, model.r());
    detail::require_length(cfg.epsilon, model.r(), "epsilon vector");
    auto m = std::make_shared<const FittedModel>(model);
    const std::size_t primary = cfg.primary_index;
    ScalarProgram prog{MethodKind::p_model_epsilon, "P-model" + detail::epsilon_suffix(cfg), cfg, region,
                       [m, cfg, primary](std::span<const double> x) {
                           return detail::p_terms(*m, cfg.tau, detail::surface_at(*m, x))[primary];
                       }, {}, ConstraintSense::equal};
    for (std::size_t j = 0; j < model.r(); ++j) {
        if (j == primary) continue;
        prog.constraints.push_back([m, cfg, j](std::span<const double> x) {
            return detail::p_terms(*m, cfg.tau, detail::surface_at(*m, x))[j] - cfg.epsilon[j];
        });
    }
    prog.sense = cfg.epsilon_inequality ? ConstraintSense::less_equal : ConstraintSense::equal;
    return prog;
}

inline ScalarProgram kataoka_weighting(const FittedModel& model, const MethodConfig& cfg,
                                       const Region& region) {
    detail::require_weights(cfg.w, model.r());
    detail::require_confidence(cfg.confidence);
    auto m = std::make_shared<const FittedModel>(model);
    const double zc = normal_quantile(cfg.confidence);
    return {MethodKind::kataoka_weighting, "Kataoka (weighting method)", cfg, region,
            [m, zc, w = cfg.w](std::span<const double> x) {
                return dot(w, detail::k_terms(*m, zc, detail::surface_at(*m, x)));
            }, {}, ConstraintSense::equal};
}

inline ScalarProgram kataoka_epsilon(const FittedModel& model, const MethodConfig& cfg, const Region& region) {
    detail::require_tau(cfg.tau, model.r());
    detail::require_primary(cfg.primary_index, model.r());
    detail::require_confidence(cfg.confidence);
    auto m = std::make_shared<const FittedModel>(model);
    const double zc = normal_quantile(cfg.confidence);
    const std::size_t primary = cfg.primary_index;
    ScalarProgram prog{MethodKind::kataoka_epsilon, "Kataoka" + detail::epsilon_suffix(cfg), cfg, region,
                       [m, zc, primary](std::span<const double> x) {
                           return detail::k_terms(*m, zc, detail::surface_at(*m, x))[primary];
                       }, {}, ConstraintSense::equal};
    for (std::size_t j = 0; j < model.r(); ++j) {
        if (j == primary) continue;
        prog.constraints.push_back([m, zc, j, t = cfg.tau[j]](std::span<const double> x) {
            return detail::k_terms(*m, zc, detail::surface_at(*m, x))[j] - t;
        });
    }
    prog.sense = cfg.epsilon_inequality ? ConstraintSense::less_equal : ConstraintSense::equal;
    return prog;
}

/// Weighted absolute deviations, the closed form of sum w_k (d+_k + d-_k).
inline ScalarProgram goal_programming(const FittedModel& model, const MethodConfig& cfg,
                                      const Region& region) {
    detail::require_tau(cfg.tau, model.r());
    detail::require_weights(cfg.w, model.r());
    detail::require_confidence(cfg.confidence);
    auto m = std::make_shared<const FittedModel>(model);
    const double zc = normal_quantile(cfg.confidence);
    return {MethodKind::goal_programming, "Goal programming", cfg, region,
            [m, zc, cfg](std::span<const double> x) {
                const Vector t = detail::k_terms(*m, zc, detail::surface_at(*m, x));
                double s = 0.0;
                for (std::size_t k = 0; k < t.size(); ++k) s += cfg.w[k] * std::abs(t[k] - cfg.tau[k]);
                return s;
            }, {}, ConstraintSense::equal};
}

inline ScalarProgram make_program(MethodKind kind, const FittedModel& model, const MethodConfig& cfg,
                                  const Region& region) {
    if (region.dimension() != model.n()) throw Error("region dimension differs from the model");
    switch (kind) {
    case MethodKind::v_model: return v_model(model, cfg, region);
    case MethodKind::mean_weighting: return mean_weighting(model, cfg, region);
    case MethodKind::modified_e_weighting: return modified_e_weighting(model, cfg, region);
    case MethodKind::modified_e_epsilon: return modified_e_epsilon(model, cfg, region);
    case MethodKind::p_model_weighting: return p_model_weighting(model, cfg, region);
    case MethodKind::p_model_epsilon: return p_model_epsilon(model, cfg, region);
    case MethodKind::kataoka_weighting: return kataoka_weighting(model, cfg, region);
    case MethodKind::kataoka_epsilon: return kataoka_epsilon(model, cfg, region);
    case MethodKind::goal_programming: return goal_programming(model, cfg, region);
    }
    throw Error("unknown method");
}

// ---------------------------------------------------------------------------
// Joint attainment probability

struct ProbabilityEstimate {
    double estimate;
    double std_error;
};

/// Monte-Carlo estimate of P(Y_k(x) <= tau_k for all k) with
/// Y(x) ~ Normal(m(x), q(x) Sigma). Uses mt19937_64 seeded by `seed`.
inline ProbabilityEstimate joint_probability_mc(const FittedModel& model, std::span<const double> x,
                                                std::span<const double> tau, std::size_t n_samples,
                                                std::uint64_t seed) {
    if (n_samples < 1000) throw Error("joint_probability_mc needs at least 1000 samples");
    if (tau.size() != model.r()) throw Error("target vector length differs from r");
    const auto s = detail::surface_at(model, x);
    const Matrix root = matrix_sqrt(s.q * model.sigma_hat);
    const std::size_t r = model.r();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector u(r);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (double& v : u) v = gauss(rng);
        bool inside = true;
        for (std::size_t k = 0; k < r && inside; ++k) {
            double y = s.mean[k];
            for (std::size_t j = 0; j < r; ++j) y += root(k, j) * u[j];
            inside = y <= tau[k];
        }
        hits += inside ? 1 : 0;
    }
    const double n = static_cast<double>(n_samples);
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace rsopt
