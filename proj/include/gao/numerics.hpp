#pragma once

// Numerical kernels shared by the rest of the library: truncated semi-infinite
// quadrature, bracketed scalar root finding and a derivative-free 2-D minimizer.

#include "gao/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>

namespace gao::numerics {

template <typename F>
concept ScalarFunction = requires(F f, double x) {
    { f(x) } -> std::convertible_to<double>;
};

template <typename F>
concept BivariateFunction = requires(F f, double a, double b) {
    { f(a, b) } -> std::convertible_to<double>;
};

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-14;
    /// Upper cut (in the integration variable) that replaces +infinity.
    double truncation_horizon = 90.0;
    unsigned max_depth = 20;

    void validate() const {
        if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0))
            throw DomainError("quadrature tolerances must be positive");
        if (!(truncation_horizon > 0.0))
            throw DomainError("quadrature truncation horizon must be positive");
    }
};

struct RootSpec {
    double bracket_low = -0.5;
    double bracket_high = 1.0;
    double tolerance = 1e-12;
    std::uintmax_t max_iterations = 200;

    void validate() const {
        if (!(bracket_low < bracket_high))
            throw DomainError("root bracket must satisfy low < high");
        if (!(tolerance > 0.0))
            throw DomainError("root tolerance must be positive");
    }
};

struct MinimizeSpec {
    double tolerance = 1e-12;
    /// Initial simplex edge, relative to each coordinate (absolute when the coordinate is 0).
    double initial_step = 0.05;
    std::size_t max_evaluations = 20000;
    int restarts = 3;
};

/// Integral of f over [0, spec.truncation_horizon] by adaptive Gauss–Kronrod.
///
/// The integrands this library passes are smooth, nonnegative and decay at
/// least exponentially, so the truncated tail is below double precision for
/// the default horizon.
template <ScalarFunction F>
double integrate_semi_infinite(F&& integrand, const QuadratureSpec& spec = {}) {
    spec.validate();
    double error = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double t) { return static_cast<double>(integrand(t)); }, 0.0, spec.truncation_horizon,
        spec.max_depth, spec.relative_tolerance, &error, &l1);
    if (!std::isfinite(value))
        throw NumericalFailure("quadrature produced a non-finite value", value);
    if (error > std::max(spec.relative_tolerance * l1, spec.absolute_tolerance) * 10.0) {
        std::ostringstream msg;
        msg << "quadrature did not converge: estimate " << value << ", error " << error;
        throw NumericalFailure(msg.str(), value);
    }
    return value;
}

/// Bracketed root of g on [spec.bracket_low, spec.bracket_high].
///
/// Terminates when the bracket is narrower than spec.tolerance or g hits 0.
template <ScalarFunction G>
double find_root_bracketed(G&& g, const RootSpec& spec = {}) {
    spec.validate();
    const double lo = spec.bracket_low;
    const double hi = spec.bracket_high;
    const double g_lo = g(lo);
    const double g_hi = g(hi);
    if (!std::isfinite(g_lo) || !std::isfinite(g_hi))
        throw NumericalFailure("root function is not finite at the bracket ends",
                               std::numeric_limits<double>::quiet_NaN());
    if (g_lo == 0.0) return lo;
    if (g_hi == 0.0) return hi;
    if (std::signbit(g_lo) == std::signbit(g_hi)) {
        std::ostringstream msg;
        msg << "no sign change on [" << lo << ", " << hi << "]: g = " << g_lo << ", " << g_hi;
        throw BracketError(msg.str());
    }

    const double tol = spec.tolerance;
    std::uintmax_t iterations = spec.max_iterations;
    const auto [a, b] = boost::math::tools::toms748_solve(
        [&](double x) { return static_cast<double>(g(x)); }, lo, hi, g_lo, g_hi,
        [tol](double x, double y) { return std::abs(y - x) <= tol; }, iterations);
    const double root = 0.5 * (a + b);
    if (iterations >= spec.max_iterations && std::abs(b - a) > tol)
        throw NumericalFailure("root finding hit the iteration limit", root);
    return root;
}

/// Local minimizer of a loss of two variables by Nelder–Mead with restarts.
///
/// Each restart rebuilds the simplex around the current best point, which
/// escapes the collapsed simplices plain Nelder–Mead can stall on.
template <BivariateFunction L>
std::pair<double, double> minimize_loss_2d(L&& loss, std::pair<double, double> initial,
                                           const MinimizeSpec& spec = {}) {
    using Point = std::array<double, 2>;
    auto eval = [&](const Point& p) {
        const double v = loss(p[0], p[1]);
        if (v == -std::numeric_limits<double>::infinity())
            throw NumericalFailure("loss diverged to -infinity", v);
        // NaN and +inf act as a wall the simplex backs away from.
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    Point best{initial.first, initial.second};
    double best_value = loss(best[0], best[1]);
    if (!std::isfinite(best_value))
        throw NumericalFailure("loss is not finite at the initial point", best_value);

    std::size_t evaluations = 1;
    for (int round = 0; round <= spec.restarts; ++round) {
        std::array<Point, 3> simplex{best, best, best};
        std::array<double, 3> values{};
        for (int k = 0; k < 2; ++k) {
            const double step = best[k] != 0.0 ? spec.initial_step * std::abs(best[k])
                                                : spec.initial_step;
            simplex[k + 1][k] += step;
        }
        for (int i = 0; i < 3; ++i) values[i] = eval(simplex[i]);
        evaluations += 3;

        while (evaluations < spec.max_evaluations) {
            std::array<int, 3> order{0, 1, 2};
            std::sort(order.begin(), order.end(),
                      [&](int i, int j) { return values[i] < values[j]; });
            const int lo = order[0], mid = order[1], hi = order[2];

            const double spread = std::abs(values[hi] - values[lo]);
            double size = 0.0;
            for (int k = 0; k < 2; ++k)
                size = std::max(size, std::max(std::abs(simplex[mid][k] - simplex[lo][k]),
                                               std::abs(simplex[hi][k] - simplex[lo][k])));
            const double scale = std::max(1.0, std::abs(simplex[lo][0]) + std::abs(simplex[lo][1]));
            if (spread <= spec.tolerance * (std::abs(values[lo]) + spec.tolerance) &&
                size <= std::sqrt(spec.tolerance) * scale)
                break;

            Point centroid{};
            for (int k = 0; k < 2; ++k) centroid[k] = 0.5 * (simplex[lo][k] + simplex[mid][k]);
            auto along = [&](double coef) {
                Point p{};
                for (int k = 0; k < 2; ++k)
                    p[k] = centroid[k] + coef * (simplex[hi][k] - centroid[k]);
                return p;
            };

            const Point reflected = along(-1.0);
            const double f_reflected = eval(reflected);
            ++evaluations;
            if (f_reflected < values[lo]) {
                const Point expanded = along(-2.0);
                const double f_expanded = eval(expanded);
                ++evaluations;
                if (f_expanded < f_reflected) {
                    simplex[hi] = expanded;
                    values[hi] = f_expanded;
                } else {
                    simplex[hi] = reflected;
                    values[hi] = f_reflected;
                }
                continue;
            }
            if (f_reflected < values[mid]) {
                simplex[hi] = reflected;
                values[hi] = f_reflected;
                continue;
            }
            const bool outside = f_reflected < values[hi];
            const Point contracted = along(outside ? -0.5 : 0.5);
            const double f_contracted = eval(contracted);
            ++evaluations;
            if (f_contracted < std::min(f_reflected, values[hi])) {
                simplex[hi] = contracted;
                values[hi] = f_contracted;
                continue;
            }
            for (int i : {mid, hi}) {
                for (int k = 0; k < 2; ++k)
                    simplex[i][k] = simplex[lo][k] + 0.5 * (simplex[i][k] - simplex[lo][k]);
                values[i] = eval(simplex[i]);
            }
            evaluations += 2;
        }

        const auto it = std::min_element(values.begin(), values.end());
        const Point candidate = simplex[static_cast<std::size_t>(it - values.begin())];
        if (!std::isfinite(candidate[0]) || !std::isfinite(candidate[1]) ||
            std::abs(candidate[0]) > 1e100 || std::abs(candidate[1]) > 1e100)
            throw NumericalFailure("minimizer diverged", best_value);
        const bool improved = *it < best_value;
        if (*it <= best_value) {
            best = candidate;
            best_value = *it;
        }
        if (!improved && round > 0) break;
    }
    return {best[0], best[1]};
}

}  // namespace gao::numerics
