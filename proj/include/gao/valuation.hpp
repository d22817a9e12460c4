#pragma once

// Closed-form value functions of the annuitization problem and the
// indifference price of the guaranteed annuity option.
//
// Time is measured in years from t0. At maturity T the holder either keeps
// the fund A (value U) or converts it into the income H = A h (value V).
// Before T both policies pay the premium rate P; the option costs L0 at t0.

#include "gao/annuity.hpp"
#include "gao/errors.hpp"
#include "gao/mortality.hpp"
#include "gao/numerics.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace gao {

struct MarketParams {
    double r = 0.0;      ///< risk-free rate
    double mu = 0.0;     ///< drift of the risky asset
    double sigma = 0.0;  ///< volatility of the risky asset

    double risk_premium() const noexcept { return mu - r; }
    void validate() const {
        if (!std::isfinite(r) || !std::isfinite(mu)) throw ValidationError("market rates must be finite");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ValidationError("market volatility sigma must be positive");
    }
};

/// CRRA preference u(c) = c^{1-gamma} / (1-gamma).
struct Preference {
    double gamma = 0.0;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw ValidationError("risk aversion gamma must be positive");
        if (gamma == 1.0) throw ValidationError("gamma = 1 (log utility) is not supported");
    }
};

struct PolicySpec {
    double chi = 0.0;  ///< age at t0
    double t0 = 0.0;
    double T = 0.0;  ///< maturity
    std::optional<double> premium;  ///< continuous premium rate P
    std::optional<double> fund;     ///< accumulated fund A at T
    double h = 0.0;                 ///< guaranteed conversion rate

    double term() const noexcept { return T - t0; }
    double age_at_maturity() const noexcept { return chi + term(); }

    void validate() const {
        if (!(chi >= 0.0)) throw ValidationError("policy age must be nonnegative");
        if (!(T > t0)) throw ValidationError("policy maturity T must exceed t0");
        if (premium.has_value() == fund.has_value())
            throw ValidationError("exactly one of premium P and fund A must be given");
        if (premium && !(*premium > 0.0)) throw ValidationError("premium P must be positive");
        if (fund && !(*fund > 0.0)) throw ValidationError("fund A must be positive");
        if (!(h > 0.0)) throw ValidationError("conversion rate h must be positive");
    }
};

struct MertonConstants {
    double delta = 0.0;
    double b = 0.0;
};

/// Survival weighting inside phi.
enum class PhiKernel {
    /// e^{-b tau} p^{1/gamma}: the form for which the closed-form U and V solve
    /// the dynamic-programming equation with mortality-weighted discounting.
    survival_root,
    /// e^{-b tau} p, the literal integrand without the 1/gamma power.
    survival,
};

// ---------------------------------------------------------------------------
// Primitive closed forms

inline double crra_utility(double c, double gamma) {
    return std::pow(c, 1.0 - gamma) / (1.0 - gamma);
}

/// A = integral over [0, T] of e^{r(T-s)} P ds.
inline double accumulated_funds(double premium, double r, double years) {
    if (!(years > 0.0)) throw DomainError("accumulation period must be positive");
    if (r == 0.0) return premium * years;
    return premium * std::expm1(r * years) / r;
}

/// Premium rate that accumulates to `fund` after `years`.
inline double premium_for_fund(double fund, double r, double years) {
    if (!(years > 0.0)) throw DomainError("accumulation period must be positive");
    if (r == 0.0) return fund / years;
    return fund * r / std::expm1(r * years);
}

inline MertonConstants merton_constants(const MarketParams& market, const Preference& pref) {
    market.validate();
    pref.validate();
    const double g = pref.gamma;
    const double excess = market.risk_premium() / market.sigma;
    MertonConstants out;
    out.delta = market.r + excess * excess / (2.0 * g);
    out.b = -((1.0 - g) * out.delta - market.r) / g;
    if (!(market.r > (1.0 - g) * out.delta)) {
        std::ostringstream msg;
        msg << "ill-posed: r = " << market.r << " <= (1-gamma)*delta = " << (1.0 - g) * out.delta;
        throw IllPosedError(msg.str());
    }
    return out;
}

/// Exponent applied to survival probabilities inside phi.
inline double phi_survival_power(PhiKernel kernel, double gamma) {
    return kernel == PhiKernel::survival_root ? 1.0 / gamma : 1.0;
}

/// phi(age) = integral over tau >= 0 of e^{-b tau} p(age, tau)^k.
inline double phi(const MortalityModel& model, double age, double b, double gamma,
                  PhiKernel kernel = PhiKernel::survival_root, numerics::QuadratureSpec quad = {}) {
    const double k = phi_survival_power(kernel, gamma);
    quad.truncation_horizon = integration_horizon(model, age, quad.truncation_horizon);
    const double tail = frozen_hazard_tail(model, age, quad.truncation_horizon, b, k);
    if (!std::isfinite(tail)) {
        std::ostringstream msg;
        msg << "phi diverges for b = " << b;
        throw IllPosedError(msg.str());
    }
    return numerics::integrate_semi_infinite(
               [&](double tau) {
                   const double p = model.survival(age, tau);
                   return std::exp(-b * tau) * (k == 1.0 ? p : std::pow(p, k));
               },
               quad) +
           tail;
}

/// d/dt of phi at age + t, at t = 0, differentiating under the integral:
/// d/dt p(age + t, tau) = p * (hazard(age + t) - hazard(age + t + tau)).
inline double phi_age_derivative(const MortalityModel& model, double age, double b, double gamma,
                                 PhiKernel kernel = PhiKernel::survival_root,
                                 numerics::QuadratureSpec quad = {}) {
    const double k = phi_survival_power(kernel, gamma);
    quad.truncation_horizon = integration_horizon(model, age, quad.truncation_horizon);
    const double hazard_now = model.hazard(age);
    return numerics::integrate_semi_infinite(
        [&](double tau) {
            const double p = model.survival(age, tau);
            if (p == 0.0) return 0.0;
            return std::exp(-b * tau) * k * std::pow(p, k) * (hazard_now - model.hazard(age + tau));
        },
        quad);
}

/// Value at T of withdrawing the fund: (x + A)^{1-gamma} phi^gamma / (1-gamma).
inline double value_U(double x, double fund, double phi_T, double gamma) {
    const double wealth = x + fund;
    if (!(wealth > 0.0)) throw DomainError("value_U needs x + A > 0");
    return std::pow(wealth, 1.0 - gamma) * std::pow(phi_T, gamma) / (1.0 - gamma);
}

/// Value at T of converting: (x + H/r)^{1-gamma} phi^gamma / (1-gamma).
inline double value_V(double x, double income, double r, double phi_T, double gamma) {
    if (!(r > 0.0)) throw UnsupportedRegimeError("value_V needs r > 0 (perpetuity value H/r)");
    const double wealth = x + income / r;
    if (!(wealth > 0.0)) throw DomainError("value_V needs x + H/r > 0");
    return std::pow(wealth, 1.0 - gamma) * std::pow(phi_T, gamma) / (1.0 - gamma);
}

/// Convert at T iff r <= h; a tie converts.
inline bool exercise_decision(double r, double h) noexcept { return r <= h; }

namespace detail {
// (P/r)(1 - e^{r(t-T)}), continuous in r at 0
inline double premium_annuity(double t, double premium, double r, double T) {
    if (r == 0.0) return premium * (T - t);
    return -premium * std::expm1(r * (t - T)) / r;
}
}  // namespace detail

/// Wealth offset of the no-option problem.
inline double xi_hat_U(double t, double premium, double r, double T, double fund) {
    if (!(t <= T)) throw DomainError("xi_hat_U needs t <= T");
    return detail::premium_annuity(t, premium, r, T) - fund * std::exp(r * (t - T));
}

/// Wealth offset of the problem with the guaranteed annuity.
inline double xi_hat_V(double t, double premium, double r, double T, double income) {
    if (!(t <= T)) throw DomainError("xi_hat_V needs t <= T");
    if (!(r > 0.0)) throw UnsupportedRegimeError("xi_hat_V needs r > 0 (perpetuity value H/r)");
    return detail::premium_annuity(t, premium, r, T) - income / r * std::exp(r * (t - T));
}

/// (H/r - A) e^{-r(T - t0)} before clamping; nonpositive when r >= h.
inline double indifference_price_unclamped(double fund, double h, double r, double T, double t0) {
    if (!(r > 0.0)) throw UnsupportedRegimeError("indifference price needs r > 0");
    return (fund * h / r - fund) * std::exp(-r * (T - t0));
}

/// Largest lump sum at t0 with U(x0, t0) <= V(x0 - L0, t0); zero when r >= h.
inline double indifference_price(double fund, double h, double r, double T, double t0) {
    if (!exercise_decision(r, h) || r == h) {
        indifference_price_unclamped(fund, h, r, T, t0);  // validates r
        return 0.0;
    }
    return indifference_price_unclamped(fund, h, r, T, t0);
}

// ---------------------------------------------------------------------------
// Values at t0

/// Everything the t0 value functions need, with the fund resolved.
struct ResolvedPolicy {
    double chi = 0.0;
    double t0 = 0.0;
    double T = 0.0;
    double premium = 0.0;
    double fund = 0.0;
    double h = 0.0;

    double income() const noexcept { return fund * h; }
};

inline ResolvedPolicy resolve_policy(const PolicySpec& policy, const MarketParams& market) {
    policy.validate();
    ResolvedPolicy out{policy.chi, policy.t0, policy.T, 0.0, 0.0, policy.h};
    if (policy.fund) {
        out.fund = *policy.fund;
        out.premium = premium_for_fund(out.fund, market.r, policy.term());
    } else {
        out.premium = *policy.premium;
        out.fund = accumulated_funds(out.premium, market.r, policy.term());
    }
    return out;
}

/// U(x0, t0) = (x0 - xi_U(t0))^{1-gamma} phi^gamma(t0) / (1-gamma).
inline double value_calU(double x0, double t0, const ResolvedPolicy& policy, const MarketParams& market,
                         const Preference& pref, double phi_t0) {
    const double adjusted = x0 - xi_hat_U(t0, policy.premium, market.r, policy.T, policy.fund);
    if (!(adjusted > 0.0)) throw DomainError("value_calU needs x0 - xi_U(t0) > 0");
    return std::pow(adjusted, 1.0 - pref.gamma) * std::pow(phi_t0, pref.gamma) / (1.0 - pref.gamma);
}

/// V(x0 - L0, t0): equals U at the paid-down wealth when r >= h.
inline double value_calV(double x0, double lump_sum, double t0, const ResolvedPolicy& policy,
                         const MarketParams& market, const Preference& pref, double phi_t0) {
    const double w0 = x0 - lump_sum;
    if (!(w0 > 0.0)) throw DomainError("value_calV needs x0 - L0 > 0");
    if (market.r >= policy.h) return value_calU(w0, t0, policy, market, pref, phi_t0);
    const double adjusted = w0 - xi_hat_V(t0, policy.premium, market.r, policy.T, policy.income());
    if (!(adjusted > 0.0)) throw DomainError("value_calV needs x0 - L0 - xi_V(t0) > 0");
    return std::pow(adjusted, 1.0 - pref.gamma) * std::pow(phi_t0, pref.gamma) / (1.0 - pref.gamma);
}

/// Convenience overloads evaluating phi(chi + t0) from the subjective law.
inline double value_calU(double x0, double t0, const PolicySpec& policy, const MarketParams& market,
                         const Preference& pref, const MortalityModel& subjective,
                         PhiKernel kernel = PhiKernel::survival_root) {
    const auto resolved = resolve_policy(policy, market);
    const auto constants = merton_constants(market, pref);
    const double phi_t0 = phi(subjective, policy.chi + (t0 - policy.t0), constants.b, pref.gamma, kernel);
    return value_calU(x0, t0, resolved, market, pref, phi_t0);
}

inline double value_calV(double x0, double lump_sum, double t0, const PolicySpec& policy,
                         const MarketParams& market, const Preference& pref,
                         const MortalityModel& subjective, PhiKernel kernel = PhiKernel::survival_root) {
    const auto resolved = resolve_policy(policy, market);
    const auto constants = merton_constants(market, pref);
    const double phi_t0 = phi(subjective, policy.chi + (t0 - policy.t0), constants.b, pref.gamma, kernel);
    return value_calV(x0, lump_sum, t0, resolved, market, pref, phi_t0);
}

// ---------------------------------------------------------------------------
// Full report

struct ValuationInputs {
    PolicySpec policy;
    MarketParams market;
    Preference preference;
    MortalityModel subjective;
    MortalityModel objective;
    double x0 = 0.0;  ///< initial wealth at t0 for the U / V evaluations
    PhiKernel kernel = PhiKernel::survival_root;
    L12Mode l12_mode = L12Mode::table;
    numerics::RootSpec rate_bracket{};
};

struct ValuationReport {
    double fund = 0.0;     ///< A
    double premium = 0.0;  ///< P
    double income = 0.0;   ///< H
    std::optional<double> r_h;  ///< empty when 1/h is not attainable
    double delta = 0.0;
    double b = 0.0;
    double phi_t0 = 0.0;
    double phi_T = 0.0;
    double calU = 0.0;          ///< U(x0, t0)
    double calV = 0.0;          ///< V(x0, t0) with L0 = 0
    double calV_at_price = 0.0; ///< V(x0 - L*, t0)
    double lump_sum = 0.0;      ///< L*
    bool exercise = false;
    bool worthless = false;  ///< r >= h: the buyer pays nothing
    MonthlyEquivalents monthly;
};

inline ValuationReport evaluate(const ValuationInputs& in) {
    in.market.validate();
    in.preference.validate();
    const auto policy = resolve_policy(in.policy, in.market);
    if (!(in.market.r > 0.0)) throw UnsupportedRegimeError("valuation needs r > 0");
    const auto constants = merton_constants(in.market, in.preference);
    const double gamma = in.preference.gamma;

    ValuationReport out;
    out.fund = policy.fund;
    out.premium = policy.premium;
    out.income = policy.income();
    out.delta = constants.delta;
    out.b = constants.b;
    try {
        out.r_h = implicit_rate(in.objective, in.policy.age_at_maturity(), policy.h, in.rate_bracket);
    } catch (const NoSolutionError&) {
        out.r_h.reset();
    }
    out.phi_t0 = phi(in.subjective, policy.chi, constants.b, gamma, in.kernel);
    out.phi_T = phi(in.subjective, in.policy.age_at_maturity(), constants.b, gamma, in.kernel);
    out.exercise = exercise_decision(in.market.r, policy.h);
    out.worthless = in.market.r >= policy.h;
    out.lump_sum = indifference_price(policy.fund, policy.h, in.market.r, policy.T, policy.t0);
    out.calU = value_calU(in.x0, policy.t0, policy, in.market, in.preference, out.phi_t0);
    out.calV = value_calV(in.x0, 0.0, policy.t0, policy, in.market, in.preference, out.phi_t0);
    if (in.x0 > out.lump_sum)
        out.calV_at_price = value_calV(in.x0, out.lump_sum, policy.t0, policy, in.market, in.preference, out.phi_t0);
    else
        out.calV_at_price = std::numeric_limits<double>::quiet_NaN();
    out.monthly = monthly_equivalents(policy.fund, out.lump_sum, in.market.r, in.policy.term(), in.l12_mode);
    return out;
}

}  // namespace gao
