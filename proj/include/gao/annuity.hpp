#pragma once

#include "gao/errors.hpp"
#include "gao/mortality.hpp"
#include "gao/numerics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gao {

/// Conversion of a fund A at rate h into an income stream H = A h.
struct ConversionTerms {
    double h = 0.0;
    double fund = 0.0;

    double income() const noexcept { return fund * h; }
    void validate() const {
        if (!(h > 0.0)) throw DomainError("conversion rate h must be positive");
    }
};

/// Effective rate per period.
struct DiscreteRate {
    double i = 0.0;
    int periods_per_year = 1;
};

/// How l12 converts the lump sum into a monthly stream.
enum class L12Mode {
    table,  ///< L* / s-angle (future-value factor), reproduces the published l12 column
    text,   ///< L* / a-angle (present-value factor)
};

struct MonthlyEquivalents {
    double p12 = 0.0;
    double l12 = 0.0;
    double total() const noexcept { return p12 + l12; }
};

/// Continuous life annuity factor: integral of e^{-rate t} * survival(age, t) dt.
inline double annuity_factor(const MortalityModel& model, double age, double rate,
                             numerics::QuadratureSpec spec = {}) {
    spec.truncation_horizon = integration_horizon(model, age, spec.truncation_horizon);
    const double tail = frozen_hazard_tail(model, age, spec.truncation_horizon, rate);
    if (!std::isfinite(tail)) {
        std::ostringstream msg;
        msg << "annuity integral diverges at rate " << rate;
        throw NumericalFailure(msg.str(), tail);
    }
    return numerics::integrate_semi_infinite(
               [&](double t) { return std::exp(-rate * t) * model.survival(age, t); }, spec) +
           tail;
}

/// Technical rate r_h solving annuity_factor(r_h) = 1/h.
inline double implicit_rate(const MortalityModel& model, double age, double h,
                            const numerics::RootSpec& root = {},
                            const numerics::QuadratureSpec& quad = {}) {
    if (!(h > 0.0)) throw DomainError("conversion rate h must be positive");
    const double target = 1.0 / h;
    auto converges = [&](double r) {
        try {
            annuity_factor(model, age, r, quad);
            return true;
        } catch (const NumericalFailure&) {
            return false;
        }
    };
    // Raise a divergent lower end to just inside the convergence region; the
    // factor is large and finite there, so the sign change is preserved.
    numerics::RootSpec bracket = root;
    if (!converges(bracket.bracket_low)) {
        double bad = bracket.bracket_low, good = bracket.bracket_high;
        if (!converges(good)) throw NoSolutionError("annuity factor diverges on the whole rate bracket");
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (bad + good);
            (converges(mid) ? good : bad) = mid;
        }
        bracket.bracket_low = good;
    }
    auto gap = [&](double r) { return annuity_factor(model, age, r, quad) - target; };
    try {
        return numerics::find_root_bracketed(gap, bracket);
    } catch (const BracketError&) {
        std::ostringstream msg;
        msg << "1/h = " << target << " is not attainable by the annuity factor on rates ["
            << root.bracket_low << ", " << root.bracket_high << "]";
        throw NoSolutionError(msg.str());
    } catch (const NumericalFailure& e) {
        if (!std::isfinite(e.last_estimate())) throw NoSolutionError(e.what());
        throw;
    }
}

/// Monthly effective rate equivalent to a continuously compounded r.
inline DiscreteRate monthly_rate(double r) { return {std::expm1(r / 12.0), 12}; }

/// Present value of n unit payments in arrears (a-angle).
inline double annuity_certain_pv(int n, double i) {
    if (n < 1) throw DomainError("annuity-certain needs at least one period");
    if (!(i > -1.0)) throw DomainError("per-period rate must exceed -1");
    if (i == 0.0) return n;
    return -std::expm1(-n * std::log1p(i)) / i;
}

/// Accumulated value after n periods of unit payments (s-angle).
inline double annuity_certain_fv(int n, double i) {
    if (n < 1) throw DomainError("annuity-certain needs at least one period");
    if (!(i > -1.0)) throw DomainError("per-period rate must exceed -1");
    if (i == 0.0) return n;
    return std::expm1(n * std::log1p(i)) / i;
}

/// Monthly payments equivalent to the fund A (p12) and to the lump sum L* (l12).
inline MonthlyEquivalents monthly_equivalents(double fund, double lump_sum, double r, double years,
                                              L12Mode mode = L12Mode::table) {
    if (!(fund > 0.0)) throw DomainError("accumulated fund must be positive");
    if (!(lump_sum >= 0.0)) throw DomainError("lump sum must be nonnegative");
    if (!(years > 0.0)) throw DomainError("horizon must be positive");
    const int months = static_cast<int>(std::lround(12.0 * years));
    const double i = monthly_rate(r).i;
    const double fv = annuity_certain_fv(months, i);
    MonthlyEquivalents out;
    out.p12 = fund / fv;
    out.l12 = lump_sum / (mode == L12Mode::table ? fv : annuity_certain_pv(months, i));
    return out;
}

}  // namespace gao
