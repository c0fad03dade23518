/**
 * @file solve.hpp
 * @brief Minimization of ScalarPrograms over box or ball regions.
 *
 * grid_search is the exhaustive oracle. Local refinement is a bound-clipped
 * Nelder-Mead; equality constraints go through a quadratic penalty schedule
 * with warm starts. multistart combines a coarse-grid incumbent with
 * quasi-random (Halton) starting points.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rsopt/linalg.hpp"
#include "rsopt/model.hpp"
#include "rsopt/programs.hpp"

namespace rsopt {

struct SolverSettings {
    double resolution = 0.01;         ///< oracle grid step
    double coarse_resolution = 0.1;   ///< multistart incumbent grid step
    double tol = 1e-10;               ///< Nelder-Mead f-spread tolerance
    std::size_t max_evaluations = 100000;
    std::vector<double> penalty_schedule{1e1, 1e2, 1e3, 1e4, 1e5};
    double feasibility_tol = 1e-3;
    double stagnation_tol = 1e-2;
    std::size_t starts = 16;
    std::uint64_t seed = 0;
    unsigned threads = 0;  ///< 0 = hardware concurrency

    double terminal_penalty() const {
        return penalty_schedule.empty() ? 1e5 : penalty_schedule.back();
    }
};

struct TracePoint {
    std::size_t iteration;
    double best_f;
};

struct SolveResult {
    Vector x_star;
    double f_star = std::numeric_limits<double>::infinity();
    Vector constraint_residuals;
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<TracePoint> trace;
    std::string message;

    double max_residual() const {
        double m = 0.0;
        for (double r : constraint_residuals) m = std::max(m, r);
        return m;
    }
};

struct ParetoPoint {
    Vector x;
    Vector values;
};

struct ParetoSet {
    std::vector<ParetoPoint> points;
};

namespace detail {

inline double finite_or_inf(double v) {
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

/// Axis-aligned lattice over a bounding box.
class Lattice {
public:
    Lattice(const Hypercube& box, double step) : lower_(box.lower), step_(step) {
        if (!(step > 0.0)) throw Error("grid resolution must be positive");
        total_ = 1;
        for (std::size_t i = 0; i < box.lower.size(); ++i) {
            const double span = box.upper[i] - box.lower[i];
            const auto count = static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
            counts_.push_back(count);
            upper_.push_back(box.upper[i]);
            if (total_ > 2e8 / static_cast<double>(count)) throw Error("grid too large");
            total_ *= count;
        }
    }

    std::size_t size() const noexcept { return total_; }

    /// Node `index`; the first coordinate varies slowest, so index order is lexicographic.
    void node(std::size_t index, std::span<double> x) const {
        for (std::size_t d = counts_.size(); d-- > 0;) {
            const std::size_t i = index % counts_[d];
            index /= counts_[d];
            double v = lower_[d] + static_cast<double>(i) * step_;
            if (i + 1 == counts_[d] && std::abs(v - upper_[d]) < 1e-9 * std::max(1.0, std::abs(v))) v = upper_[d];
            x[d] = v;
        }
    }

private:
    Vector lower_, upper_;
    std::vector<std::size_t> counts_;
    double step_;
    std::size_t total_ = 0;
};

inline unsigned thread_count(unsigned requested, std::size_t work) {
    unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    const auto cap = static_cast<unsigned>(std::max<std::size_t>(1, work / 4096));
    return std::min(t, cap);
}

/// Runs body(begin, end, slot) over disjoint contiguous chunks.
template <class Body>
void parallel_chunks(std::size_t total, unsigned threads, Body&& body) {
    if (threads <= 1) {
        body(std::size_t{0}, total, 0u);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t b = std::min(total, t * chunk), e = std::min(total, b + chunk);
        pool.emplace_back([&body, b, e, t] { body(b, e, t); });
    }
    for (auto& th : pool) th.join();
}

inline Vector initial_step(const Region& region) {
    const Hypercube box = region.bounds();
    Vector h(box.lower.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = 0.05 * (box.upper[i] - box.lower[i]);
    return h;
}

struct LocalResult {
    Vector x;
    double f;
    std::size_t evaluations;
    bool converged;
};

/// Nelder-Mead on fn with every trial point projected into the region.
/// Restarts from the incumbent until a restart gains less than tol.
template <class Fn>
LocalResult nelder_mead_core(Fn&& fn, const Region& region, std::span<const double> x0, double tol,
                             std::size_t max_evals) {
    const std::size_t n = x0.size();
    const Vector h = initial_step(region);
    std::size_t evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        return finite_or_inf(fn(std::span<const double>(x)));
    };

    Vector best = region.project(x0);
    double best_f = eval(best);
    bool converged = false;

    for (int restart = 0; restart < 50 && evals < max_evals; ++restart) {
        std::vector<Vector> simplex{best};
        std::vector<double> f{best_f};
        for (std::size_t i = 0; i < n; ++i) {
            Vector p = best;
            p[i] += h[i];
            if (!region.contains(p)) p[i] = best[i] - h[i];
            p = region.project(p);
            f.push_back(eval(p));
            simplex.push_back(std::move(p));
        }

        std::vector<std::size_t> order(n + 1);
        bool local_converged = false;
        while (evals < max_evals) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return f[a] < f[b] || (f[a] == f[b] && lex_less(simplex[a], simplex[b]));
            });
            const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];
            double diam = 0.0;
            for (std::size_t i = 0; i <= n; ++i)
                for (std::size_t d = 0; d < n; ++d)
                    diam = std::max(diam, std::abs(simplex[i][d] - simplex[lo][d]));
            if (f[hi] - f[lo] < tol || diam < 1e-13) {
                local_converged = true;
                break;
            }

            Vector centroid(n, 0.0);
            for (std::size_t i = 0; i <= n; ++i)
                if (i != hi)
                    for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);

            auto along = [&](double t) {
                Vector p(n);
                for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + t * (simplex[hi][d] - centroid[d]);
                return region.project(p);
            };

            Vector xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < f[lo]) {
                Vector xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[hi] = std::move(xe);
                    f[hi] = fe;
                } else {
                    simplex[hi] = std::move(xr);
                    f[hi] = fr;
                }
                continue;
            }
            if (fr < f[second]) {
                simplex[hi] = std::move(xr);
                f[hi] = fr;
                continue;
            }
            const bool outside = fr < f[hi];
            Vector xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : f[hi])) {
                simplex[hi] = std::move(xc);
                f[hi] = fc;
                continue;
            }
            for (std::size_t i = 0; i <= n; ++i) {
                if (i == lo) continue;
                for (std::size_t d = 0; d < n; ++d) simplex[i][d] = simplex[lo][d] + 0.5 * (simplex[i][d] - simplex[lo][d]);
                simplex[i] = region.project(simplex[i]);
                f[i] = eval(simplex[i]);
            }
        }

        std::size_t arg = 0;
        for (std::size_t i = 1; i <= n; ++i)
            if (f[i] < f[arg] || (f[i] == f[arg] && lex_less(simplex[i], simplex[arg]))) arg = i;
        const double gain = best_f - f[arg];
        if (f[arg] < best_f) {
            best = simplex[arg];
            best_f = f[arg];
        }
        converged = local_converged;
        if (!local_converged || !(gain >= tol)) break;
    }
    return {best, best_f, evals, converged && evals < max_evals};
}

inline SolveResult finish(const ScalarProgram& program, Vector x, std::size_t evals, double feasibility_tol,
                          bool local_ok) {
    SolveResult r;
    r.f_star = program.objective(x);
    r.constraint_residuals = program.residuals(x);
    r.x_star = std::move(x);
    r.evaluations = evals;
    r.converged = local_ok && (!program.constrained() || r.max_residual() < feasibility_tol);
    return r;
}

/// Halton sequence with a seeded Cranley-Patterson shift, mapped into the region.
inline std::vector<Vector> quasi_random_points(const Region& region, std::size_t count, std::uint64_t seed) {
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    const Hypercube box = region.bounds();
    const std::size_t n = box.lower.size();
    if (n > std::size(primes)) throw Error("quasi-random starts support at most 16 factors");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector shift(n);
    for (double& s : shift) s = unit(rng);

    std::vector<Vector> out;
    for (std::size_t index = 1; out.size() < count && index < 64 * count + 1024; ++index) {
        Vector x(n);
        for (std::size_t d = 0; d < n; ++d) {
            double v = 0.0, f = 1.0 / primes[d];
            for (std::size_t i = index; i > 0; i /= primes[d], f /= primes[d]) v += f * static_cast<double>(i % primes[d]);
            v = std::fmod(v + shift[d], 1.0);
            x[d] = box.lower[d] + v * (box.upper[d] - box.lower[d]);
        }
        if (region.contains(x)) out.push_back(std::move(x));
    }
    return out;
}

/// Prefers feasible results, then lower f, then the lexicographically smaller x.
inline bool better(const SolveResult& a, const SolveResult& b, double feasibility_tol) {
    const bool fa = a.max_residual() < feasibility_tol, fb = b.max_residual() < feasibility_tol;
    if (fa != fb) return fa;
    if (!fa && a.max_residual() != b.max_residual()) return a.max_residual() < b.max_residual();
    if (a.f_star != b.f_star) return a.f_star < b.f_star;
    return lex_less(a.x_star, b.x_star);
}

}  // namespace detail

/// Exhaustive lattice search. Constrained programs minimize
/// f + penalty * sum(residual^2); the raw f and residuals are reported.
/// Ties go to the lexicographically smallest x.
inline SolveResult grid_search(const ScalarProgram& program, double resolution, double penalty = 1e5,
                               unsigned threads = 0, double feasibility_tol = 1e-3) {
    const detail::Lattice lattice(program.region.bounds(), resolution);
    const std::size_t n = program.region.dimension();
    const unsigned workers = detail::thread_count(threads, lattice.size());

    struct Best {
        double merit = std::numeric_limits<double>::infinity();
        Vector x;
        std::size_t evaluations = 0;
    };
    std::vector<Best> best(workers);
    detail::parallel_chunks(lattice.size(), workers, [&](std::size_t b, std::size_t e, unsigned slot) {
        Vector x(n);
        Best& mine = best[slot];
        for (std::size_t i = b; i < e; ++i) {
            lattice.node(i, x);
            if (!program.region.is_box() && !program.region.contains(x)) continue;
            ++mine.evaluations;
            const double m = detail::finite_or_inf(program.merit(x, penalty));
            if (mine.x.empty() || m < mine.merit) {
                mine.merit = m;
                mine.x = x;
            }
        }
    });

    Best winner;
    std::size_t evals = 0;
    for (const Best& b : best) {
        evals += b.evaluations;
        if (b.x.empty()) continue;
        if (winner.x.empty() || b.merit < winner.merit ||
            (b.merit == winner.merit && detail::lex_less(b.x, winner.x)))
            winner = b;
    }
    if (winner.x.empty()) throw Error("grid has no node inside the region");
    return detail::finish(program, std::move(winner.x), evals, feasibility_tol, true);
}

/// Bound-clipped Nelder-Mead from x0. Constrained programs are minimized
/// through their merit at the terminal penalty of the default schedule.
inline SolveResult nelder_mead(const ScalarProgram& program, std::span<const double> x0, double tol,
                               const SolverSettings& settings = {}) {
    if (x0.size() != program.region.dimension()) throw Error("start point dimension mismatch");
    const double mu = settings.terminal_penalty();
    auto fn = [&](std::span<const double> x) {
        return program.constrained() ? program.merit(x, mu) : program.objective(x);
    };
    auto local = detail::nelder_mead_core(fn, program.region, x0, tol, settings.max_evaluations);
    SolveResult r = detail::finish(program, std::move(local.x), local.evaluations, settings.feasibility_tol,
                                   local.converged);
    r.trace.push_back({0, r.f_star});
    if (!local.converged) r.message = "evaluation limit reached";
    return r;
}

/// Quadratic-penalty sequence, each stage warm-started from the previous one.
inline SolveResult penalty_solve(const ScalarProgram& program, std::span<const double> schedule,
                                 std::span<const double> x0, const SolverSettings& settings = {}) {
    if (!program.constrained()) throw Error("penalty_solve needs at least one constraint");
    if (schedule.empty()) throw Error("empty penalty schedule");
    Vector x(x0.begin(), x0.end());
    std::size_t evals = 0;
    std::vector<double> stage_residual;
    std::vector<TracePoint> trace;
    bool local_ok = true;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        const double mu = schedule[s];
        auto local = detail::nelder_mead_core([&](std::span<const double> p) { return program.merit(p, mu); },
                                              program.region, x, settings.tol, settings.max_evaluations);
        evals += local.evaluations;
        local_ok = local_ok && local.converged;
        x = std::move(local.x);
        const Vector res = program.residuals(x);
        stage_residual.push_back(res.empty() ? 0.0 : *std::max_element(res.begin(), res.end()));
        trace.push_back({s, program.objective(x)});
    }
    SolveResult r = detail::finish(program, std::move(x), evals, settings.feasibility_tol, true);
    r.trace = std::move(trace);
    const std::size_t k = stage_residual.size();
    if (!r.converged) {
        const bool stagnant = k >= 2 && stage_residual[k - 1] > settings.stagnation_tol &&
                              stage_residual[k - 2] > settings.stagnation_tol;
        r.message = stagnant ? "infeasible: constraint residual stagnated at " + std::to_string(stage_residual[k - 1])
                             : "constraint residual " + std::to_string(stage_residual[k - 1]) +
                                   " above feasibility tolerance";
    } else if (!local_ok) {
        r.message = "a penalty stage hit the evaluation limit";
    }
    return r;
}

/// Starts from the coarse-grid incumbent of the terminal-penalty merit.
inline SolveResult penalty_solve(const ScalarProgram& program, std::span<const double> schedule,
                                 const SolverSettings& settings = {}) {
    const double mu = schedule.empty() ? 1e5 : schedule.back();
    const SolveResult seed = grid_search(program, settings.coarse_resolution, mu, settings.threads);
    SolveResult r = penalty_solve(program, schedule, seed.x_star, settings);
    r.evaluations += seed.evaluations;
    return r;
}

/// Local solves from the coarse-grid incumbent and k quasi-random points;
/// the best feasible result wins. Deterministic for a given seed.
inline SolveResult multistart(const ScalarProgram& program, std::size_t k, std::uint64_t seed,
                              const SolverSettings& settings = {}) {
    if (k < 1) throw Error("multistart needs at least one start");
    const SolveResult incumbent =
        grid_search(program, settings.coarse_resolution, settings.terminal_penalty(), settings.threads,
                    settings.feasibility_tol);
    std::vector<Vector> starts{incumbent.x_star};
    for (auto& p : detail::quasi_random_points(program.region, k, seed)) starts.push_back(std::move(p));

    auto local = [&](const Vector& x0) {
        return program.constrained() ? penalty_solve(program, settings.penalty_schedule, x0, settings)
                                     : nelder_mead(program, x0, settings.tol, settings);
    };

    SolveResult best = incumbent;
    std::size_t evals = incumbent.evaluations;
    std::vector<TracePoint> trace{{0, incumbent.f_star}};
    for (std::size_t i = 0; i < starts.size(); ++i) {
        SolveResult r = local(starts[i]);
        evals += r.evaluations;
        if (detail::better(r, best, settings.feasibility_tol)) best = std::move(r);
        trace.push_back({i + 1, best.f_star});
    }
    best.evaluations = evals;
    best.trace = std::move(trace);
    if (program.constrained() && !best.converged && best.message.empty())
        best.message = "no start reached the feasibility tolerance";
    return best;
}

/// Nondominated lattice points under componentwise <= with at least one <.
inline ParetoSet pareto_front(std::span<const PointFunction> objectives, const Region& region, double resolution) {
    if (objectives.size() < 2) throw Error("pareto_front needs at least two objectives");
    const detail::Lattice lattice(region.bounds(), resolution);
    const std::size_t n = region.dimension();

    std::vector<ParetoPoint> all;
    Vector x(n);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        lattice.node(i, x);
        if (!region.contains(x)) continue;
        Vector v(objectives.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = objectives[j](x);
        all.push_back({x, std::move(v)});
    }
    // A dominating point sorts lexicographically before the points it dominates.
    std::stable_sort(all.begin(), all.end(),
                     [](const ParetoPoint& a, const ParetoPoint& b) { return detail::lex_less(a.values, b.values); });

    auto dominates = [](const Vector& a, const Vector& b) {
        bool strict = false;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] > b[j]) return false;
            if (a[j] < b[j]) strict = true;
        }
        return strict;
    };
    ParetoSet front;
    for (auto& cand : all) {
        bool dominated = false;
        for (const auto& kept : front.points)
            if (dominates(kept.values, cand.values)) {
                dominated = true;
                break;
            }
        if (!dominated) front.points.push_back(std::move(cand));
    }
    return front;
}

}  // namespace rsopt
