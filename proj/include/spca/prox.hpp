#pragma once

#include <spca/datamat.hpp>
#include <spca/errors.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace spca {

/**
 * Composite objective f(x) = g(x) + lambda * h(x).
 *
 * grad_g maps x to the gradient of the smooth part; prox_h(v, tau) returns
 * argmin_z 0.5 * ||z - v||^2 + tau * h(z). `objective`, when set, evaluates
 * f in full and is only used for trace recording. `lipschitz`, when positive,
 * lets the solver resolve an automatic step as 1 / lipschitz.
 */
struct ProxProblem {
    Eigen::Index dim = 0;
    std::function<Vector(const Vector&)> grad_g;
    std::function<Vector(const Vector&, double)> prox_h;
    std::function<double(const Vector&)> objective;
    double lambda = 0.0;
    double lipschitz = 0.0;
};

enum class Method { ista, fista };

inline const char* to_string(Method m) { return m == Method::ista ? "ista" : "fista"; }

struct SolverConfig {
    std::optional<double> step;  // nullopt = automatic
    double tol = 1e-6;
    int max_iter = 1000;
    std::uint64_t seed = 0;
    bool normalize = false;
    bool record_objective = false;

    void validate() const {
        if (step && !(*step > 0.0 && std::isfinite(*step))) {
            throw InvalidInput("solver: step must be positive and finite");
        }
        if (!(tol > 0.0)) throw InvalidInput("solver: tol must be > 0");
        if (max_iter < 1) throw InvalidInput("solver: max_iter must be >= 1");
    }
};

struct SolverTrace {
    int iterations = 0;
    double displacement = std::numeric_limits<double>::infinity();
    std::vector<double> objective_history;
    double wall_seconds = 0.0;
    bool converged = false;
    // normalize was on and the iterate was shrunk to exactly zero
    bool collapsed_to_zero = false;
};

struct SolveResult {
    Vector x;
    SolverTrace trace;
};

// Componentwise sign(v_i) * max(|v_i| - tau, 0).
inline Vector soft_threshold(const Vector& v, double tau) {
    if (!(tau >= 0.0)) throw InvalidInput("soft_threshold: tau must be >= 0");
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i)) - tau;
        out(i) = mag > 0.0 ? std::copysign(mag, v(i)) : 0.0;
    }
    return out;
}

// Builds a problem with h = ||.||_1.
inline ProxProblem l1_problem(Eigen::Index dim, std::function<Vector(const Vector&)> grad,
                              double lambda,
                              std::function<double(const Vector&)> smooth_value = {}) {
    if (!(lambda >= 0.0)) throw InvalidInput("l1_problem: lambda must be >= 0");
    ProxProblem p;
    p.dim = dim;
    p.grad_g = std::move(grad);
    p.prox_h = [](const Vector& v, double tau) { return soft_threshold(v, tau); };
    p.lambda = lambda;
    if (smooth_value) {
        p.objective = [g = std::move(smooth_value), lambda](const Vector& x) {
            return g(x) + lambda * x.lpNorm<1>();
        };
    }
    return p;
}

// g(x) = 0.5 * ||A x - b||^2, h = ||.||_1.
inline ProxProblem lasso_problem(const Matrix& a, const Vector& b, double lambda) {
    if (a.rows() != b.size()) throw InvalidInput("lasso_problem: A rows != b length");
    return l1_problem(
        a.cols(), [a, b](const Vector& x) -> Vector { return a.transpose() * (a * x - b); },
        lambda, [a, b](const Vector& x) { return 0.5 * (a * x - b).squaredNorm(); });
}

namespace detail {

inline void check_dim(const ProxProblem& problem, const Vector& x, const char* who) {
    if (x.size() != problem.dim) {
        throw InvalidInput(std::string(who) + ": vector length " + std::to_string(x.size()) +
                           " != problem dimension " + std::to_string(problem.dim));
    }
}

inline Vector checked_gradient(const ProxProblem& problem, const Vector& x) {
    Vector g = problem.grad_g(x);
    if (g.size() != problem.dim) throw InvalidInput("grad_g changed the dimension");
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g(i))) {
            throw NumericError("non-finite gradient component " + std::to_string(i));
        }
    }
    return g;
}

// x+ = prox_h(point - step * grad_g(point), lambda * step)
inline Vector forward_backward(const ProxProblem& problem, const Vector& point, double step) {
    const Vector g = checked_gradient(problem, point);
    Vector out = problem.prox_h(point - step * g, problem.lambda * step);
    if (out.size() != problem.dim) throw InvalidInput("prox_h changed the dimension");
    return out;
}

} // namespace detail

// One proximal-gradient step from x.
inline Vector ista_pass(const ProxProblem& problem, const Vector& x, double step) {
    if (!(step > 0.0)) throw InvalidInput("ista_pass: step must be > 0");
    detail::check_dim(problem, x, "ista_pass");
    return detail::forward_backward(problem, x, step);
}

/**
 * Two-iterate, two-scalar FISTA state. The extrapolation coefficient used by
 * the next pass is (t_old_old - 1) / t_old.
 */
struct FistaState {
    Vector x_old;
    Vector x_old_old;
    double t_old = 1.0;
    double t_old_old = 1.0;
    double step = 0.0;

    double momentum() const { return (t_old_old - 1.0) / t_old; }
};

inline FistaState fista_start(const Vector& x0, double step) {
    return FistaState{x0, x0, 1.0, 1.0, step};
}

inline double fista_next_t(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

struct FistaPassResult {
    Vector x;
    FistaState state;
};

inline FistaPassResult fista_pass(const ProxProblem& problem, const FistaState& state) {
    if (!(state.step > 0.0)) throw InvalidInput("fista_pass: step must be > 0");
    if (!(state.t_old >= 1.0) || !(state.t_old_old >= 1.0)) {
        throw InvalidInput("fista_pass: momentum scalars must be >= 1");
    }
    detail::check_dim(problem, state.x_old, "fista_pass");
    detail::check_dim(problem, state.x_old_old, "fista_pass");

    const Vector y = state.x_old + state.momentum() * (state.x_old - state.x_old_old);
    Vector x = detail::forward_backward(problem, y, state.step);

    // old_old fields take the previous values before the newest ones move in.
    FistaState next;
    next.step = state.step;
    next.x_old_old = state.x_old;
    next.t_old_old = state.t_old;
    next.x_old = x;
    next.t_old = fista_next_t(state.t_old);
    return {std::move(x), std::move(next)};
}

// Uniform on the unit sphere.
inline Vector random_unit_vector(Eigen::Index dim, std::uint64_t seed) {
    if (dim < 1) throw InvalidInput("random_unit_vector: dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    do {
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

// Flips v so that its largest-magnitude entry (first one on ties) is positive.
inline void canonicalize_sign(Vector& v) {
    if (v.size() == 0) return;
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (v(idx) < 0.0) v = -v;
}

inline double resolve_step(const ProxProblem& problem, const SolverConfig& config) {
    if (config.step) return *config.step;
    if (problem.lipschitz > 0.0) return 1.0 / problem.lipschitz;
    throw InvalidInput("solver: automatic step needs a Lipschitz estimate on the problem");
}

/**
 * Repeats the chosen pass until ||x_{k+1} - x_k||_2 <= tol or max_iter passes.
 * With `normalize`, every nonzero iterate is projected onto the unit sphere
 * before the displacement test and the result gets a canonical sign; an
 * all-zero iterate is a fixed point and ends the solve with collapsed_to_zero.
 */
inline SolveResult solve(const ProxProblem& problem, const SolverConfig& config, Method method,
                         const Vector& x0) {
    config.validate();
    detail::check_dim(problem, x0, "solve");
    const double step = resolve_step(problem, config);
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    SolveResult result;
    SolverTrace& trace = result.trace;
    Vector x = x0;
    if (config.normalize && x.norm() > 0.0) x /= x.norm();
    FistaState state = fista_start(x, step);
    if (config.record_objective && problem.objective) {
        trace.objective_history.push_back(problem.objective(x));
    }

    for (int k = 1; k <= config.max_iter; ++k) {
        Vector next;
        try {
            if (method == Method::ista) {
                next = detail::forward_backward(problem, x, step);
            } else {
                auto pass = fista_pass(problem, state);
                next = std::move(pass.x);
                state = std::move(pass.state);
            }
        } catch (const DivergenceError&) {
            throw;
        } catch (const NumericError& e) {
            throw DivergenceError(static_cast<std::size_t>(k), e.what());
        }
        if (!next.allFinite()) {
            throw DivergenceError(static_cast<std::size_t>(k), "non-finite iterate");
        }
        trace.iterations = k;

        if (config.normalize) {
            const double norm = next.norm();
            if (norm == 0.0) {
                x = std::move(next);
                trace.displacement = 0.0;
                trace.converged = true;
                trace.collapsed_to_zero = true;
                break;
            }
            next /= norm;
            if (method == Method::fista) state.x_old = next;
        }

        trace.displacement = (next - x).norm();
        x = std::move(next);
        if (config.record_objective && problem.objective) {
            trace.objective_history.push_back(problem.objective(x));
        }
        if (trace.displacement <= config.tol) {
            trace.converged = true;
            break;
        }
    }

    if (config.normalize) canonicalize_sign(x);
    trace.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.x = std::move(x);
    return result;
}

struct StepEstimate {
    double step = 0.0;
    double lambda_max = 0.0;  // estimated top eigenvalue of D^T D
    bool degenerate = false;  // zero matrix; step is the clamp value
};

/**
 * Power iteration on D^T D from the all-ones direction (or the heaviest
 * column's axis if D kills it); returns the step
 * 1 / (2 * lambda_max) matching the gradient -2 D^T D x, clamped below by 1e-12.
 */
inline StepEstimate estimate_step(const Matrix& d, int iters = 200) {
    if (iters < 1) throw InvalidInput("estimate_step: iters must be >= 1");
    if (d.cols() < 1) throw InvalidInput("estimate_step: empty matrix");
    constexpr double clamp = 1e-12;
    if (d.isZero(0.0)) return {clamp, 0.0, true};
    Vector v = Vector::Ones(d.cols()) / std::sqrt(static_cast<double>(d.cols()));
    if ((d * v).isZero(0.0)) {
        // start lies in the null space; the heaviest column cannot
        Eigen::Index j = 0;
        d.colwise().squaredNorm().maxCoeff(&j);
        v = Vector::Unit(d.cols(), j);
    }
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        const Vector w = d.transpose() * (d * v);
        const double norm = w.norm();
        if (norm == 0.0) {
            lambda = 0.0;
            break;
        }
        lambda = v.dot(w);
        v = w / norm;
    }
    if (!std::isfinite(lambda)) throw NumericError("estimate_step: non-finite eigenvalue estimate");
    if (lambda <= 0.0) return {clamp, 0.0, true};
    return {std::max(1.0 / (2.0 * lambda), clamp), lambda, false};
}

} // namespace spca
