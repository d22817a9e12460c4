#pragma once

// Monte Carlo and dynamic-programming checks of the post-maturity value
// functions U and V.
//
// After T the wealth follows dX = [rX + (mu - r) pi + H - c] dt + sigma pi dW.
// Mortality enters as a deterministic weight e^{-rs} p(age, s) on u(c_s).

#include "gao/errors.hpp"
#include "gao/mortality.hpp"
#include "gao/numerics.hpp"
#include "gao/valuation.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

namespace gao::simulate {

struct SimConfig {
    std::size_t paths = 100000;
    double dt = 1.0 / 252.0;
    double horizon = 60.0;  ///< years past T replacing the infinite horizon
    std::uint64_t seed = 20090101;
    bool antithetic = true;
    unsigned workers = 0;  ///< 0: one per hardware thread
    /// Each step's Brownian increment is the scaled sum of this many normal
    /// draws, so (dt, m) consumes the same noise as (dt / m, 1).
    unsigned increments_per_step = 1;

    std::size_t steps() const { return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)); }

    void validate() const {
        if (paths < 1) throw ValidationError("simulation needs at least one path");
        if (!(dt > 0.0)) throw ValidationError("simulation dt must be positive");
        if (!(horizon > 0.0)) throw ValidationError("simulation horizon must be positive");
        if (increments_per_step < 1) throw ValidationError("increments_per_step must be at least 1");
        if (antithetic && paths % 2 != 0)
            throw ValidationError("antithetic sampling needs an even number of paths");
    }
};

/// A feedback control: consumption rate and amount held in the risky asset.
template <typename P>
concept FeedbackRule = requires(const P& p, double wealth, double t) {
    { p.consumption(wealth, t) } -> std::convertible_to<double>;
    { p.investment(wealth, t) } -> std::convertible_to<double>;
};

/// Type-erased feedback policy.
struct FeedbackPolicy {
    std::function<double(double, double)> consumption_rule;
    std::function<double(double, double)> investment_rule;

    double consumption(double wealth, double t) const { return consumption_rule(wealth, t); }
    double investment(double wealth, double t) const { return investment_rule(wealth, t); }
};

/// Samples of a function of time on a uniform grid, linearly interpolated.
class UniformTable {
public:
    UniformTable(const std::function<double(double)>& fn, double step, double span)
        : step_(step), inv_step_(1.0 / step) {
        if (!(step > 0.0) || !(span >= 0.0)) throw DomainError("invalid tabulation grid");
        const auto n = static_cast<std::size_t>(std::ceil(span / step - 1e-9)) + 1;
        values_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) values_.push_back(fn(static_cast<double>(i) * step));
    }

    double operator()(double t) const {
        const double pos = t * inv_step_;
        if (!(pos > 0.0)) return values_.front();
        const auto k = static_cast<std::size_t>(pos);
        if (k + 1 >= values_.size()) return values_.back();
        const double w = pos - static_cast<double>(k);
        return w == 0.0 ? values_[k] : values_[k] + w * (values_[k + 1] - values_[k]);
    }

    double step() const noexcept { return step_; }

private:
    double step_;
    double inv_step_;
    std::vector<double> values_;
};

/// Candidate optimal controls of the Merton problem with income H:
/// pi = (mu - r)/(gamma sigma^2) (x + H/r), c = (x + H/r) / phi(t).
class MertonFeedback {
public:
    /// `inverse_phi` holds 1/phi on the time grid.
    MertonFeedback(const MarketParams& market, const Preference& pref, double income, UniformTable inverse_phi)
        : capitalized_income_(income / market.r),
          exposure_(market.risk_premium() / (pref.gamma * market.sigma * market.sigma)),
          inverse_phi_(std::move(inverse_phi)) {}

    double consumption(double wealth, double t) const {
        return std::max(0.0, (wealth + capitalized_income_) * inverse_phi_(t));
    }
    double investment(double wealth, double /*t*/) const {
        return exposure_ * (wealth + capitalized_income_);
    }

    operator FeedbackPolicy() const {
        return {[self = *this](double x, double t) { return self.consumption(x, t); },
                [self = *this](double x, double t) { return self.investment(x, t); }};
    }

private:
    double capitalized_income_;
    double exposure_;
    UniformTable inverse_phi_;
};

/// Builds the candidate feedback; phi_fn(t) is phi at t years past T and is
/// tabulated on the simulation grid.
inline MertonFeedback merton_feedback(const MarketParams& market, const Preference& pref, double income,
                                      const std::function<double(double)>& phi_fn, const SimConfig& cfg) {
    if (!(market.r > 0.0)) throw UnsupportedRegimeError("feedback with income needs r > 0");
    merton_constants(market, pref);  // well-posedness
    return MertonFeedback(market, pref, income,
                          UniformTable([&](double t) { return 1.0 / phi_fn(t); }, cfg.dt, cfg.horizon + cfg.dt));
}

/// phi at age + t as a function of t.
inline std::function<double(double)> phi_curve(const MortalityModel& model, double age, double b, double gamma,
                                               PhiKernel kernel = PhiKernel::survival_root,
                                               double scale = 1.0) {
    return [=](double t) { return scale * phi(model, age + t, b, gamma, kernel); };
}

struct WealthPath {
    std::vector<double> time;
    std::vector<double> wealth;
    std::vector<double> consumption;
    bool ruined = false;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream per (seed, path index), independent of the worker split.
inline boost::random::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t index) {
    return boost::random::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

// Standard normal for one step built from `m` draws.
template <typename Engine>
double step_normal(Engine& engine, boost::random::normal_distribution<double>& normal, unsigned m) {
    if (m == 1) return normal(engine);
    double sum = 0.0;
    for (unsigned i = 0; i < m; ++i) sum += normal(engine);
    return sum / std::sqrt(static_cast<double>(m));
}

template <typename Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) job(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// One Euler–Maruyama path from x_start; the path stops once x + H/r <= 0.
template <FeedbackRule Policy>
WealthPath simulate_wealth_path(const Policy& policy, const MarketParams& market, double income,
                                double x_start, const SimConfig& cfg, std::uint64_t path_index = 0) {
    cfg.validate();
    if (!(market.r > 0.0)) throw UnsupportedRegimeError("wealth simulation needs r > 0");
    const double floor = -income / market.r;
    if (!(x_start > floor)) throw DomainError("simulation needs x_start + H/r > 0");

    auto engine = detail::path_engine(cfg.seed, path_index);
    boost::random::normal_distribution<double> normal;
    const std::size_t n = cfg.steps();
    const double sqrt_dt = std::sqrt(cfg.dt);

    WealthPath path;
    path.time.reserve(n + 1);
    path.wealth.reserve(n + 1);
    path.consumption.reserve(n + 1);
    double x = x_start;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double c = policy.consumption(x, t);
        path.time.push_back(t);
        path.wealth.push_back(x);
        path.consumption.push_back(c);
        if (k == n) break;
        const double pi = policy.investment(x, t);
        const double z = detail::step_normal(engine, normal, cfg.increments_per_step);
        x += (market.r * x + market.risk_premium() * pi + income - c) * cfg.dt +
             market.sigma * pi * sqrt_dt * z;
        if (!(x > floor)) {
            path.ruined = true;
            break;
        }
    }
    return path;
}

/// e^{-r t} p(age, t) on the simulation grid.
inline std::vector<double> survival_discount_weights(const MortalityModel& model, double age, double r,
                                                     const SimConfig& cfg) {
    const std::size_t n = cfg.steps();
    std::vector<double> w(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        w[k] = std::exp(-r * t) * model.survival(age, t);
    }
    return w;
}

/// Trapezoidal integral of weights * u(consumption) along a stored path.
inline double path_reward(const WealthPath& path, const std::vector<double>& weights, double gamma, double dt) {
    double total = 0.0;
    const std::size_t n = path.consumption.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double term = weights[k] * crra_utility(path.consumption[k], gamma);
        total += (k == 0 || k + 1 == n) ? 0.5 * term : term;
    }
    return total * dt;
}

struct ValueEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t paths = 0;   ///< paths entering the mean
    std::size_t ruined = 0;  ///< paths dropped after hitting x + H/r <= 0
    /// First-order size of the reward beyond the horizon, with consumption and
    /// hazard frozen at their horizon values.
    double tail_estimate = 0.0;
};

/// Monte Carlo estimate of E[ integral e^{-rs} p(age, s) u(c_s) ds ] under `policy`.
template <FeedbackRule Policy>
ValueEstimate estimate_value(const Policy& policy, const MarketParams& market, const Preference& pref,
                             const MortalityModel& model, double age, double income, double x_start,
                             const SimConfig& cfg) {
    cfg.validate();
    pref.validate();
    if (!(market.r > 0.0)) throw UnsupportedRegimeError("value estimation needs r > 0");
    const double floor = -income / market.r;
    if (!(x_start > floor)) throw DomainError("estimation needs x_start + H/r > 0");

    const std::size_t n = cfg.steps();
    const double horizon = static_cast<double>(n) * cfg.dt;
    integration_horizon(model, age, horizon);
    const auto weights = survival_discount_weights(model, age, market.r, cfg);
    const double gamma = pref.gamma;
    const double one_minus_gamma = 1.0 - gamma;
    const double inv_one_minus_gamma = 1.0 / one_minus_gamma;
    const double drift_r = market.r;
    const double premium = market.risk_premium();
    const double vol = market.sigma;
    const double sqrt_dt = std::sqrt(cfg.dt);
    const double dt = cfg.dt;

    const std::size_t samples = cfg.antithetic ? cfg.paths / 2 : cfg.paths;
    const int legs = cfg.antithetic ? 2 : 1;

    struct Sample {
        double reward = 0.0;   // mean over the legs that survived
        int alive = 0;
        double end_utility = 0.0;  // largest |u(c)| at the horizon
    };
    std::vector<Sample> results(samples);

    detail::parallel_for(samples, cfg.workers, [&](std::size_t s) {
        auto engine = detail::path_engine(cfg.seed, s);
        boost::random::normal_distribution<double> normal;
        double x[2] = {x_start, x_start};
        double reward[2] = {0.0, 0.0};
        bool alive[2] = {true, legs > 1};
        double end_u = 0.0;
        for (std::size_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * dt;
            const double half = (k == 0 || k == n) ? 0.5 : 1.0;
            const double z = k < n ? detail::step_normal(engine, normal, cfg.increments_per_step) : 0.0;
            for (int leg = 0; leg < legs; ++leg) {
                if (!alive[leg]) continue;
                const double c = policy.consumption(x[leg], t);
                const double u = std::exp(one_minus_gamma * std::log(c)) * inv_one_minus_gamma;
                reward[leg] += half * weights[k] * u;
                if (k == n) {
                    end_u = std::max(end_u, std::abs(u));
                    continue;
                }
                const double pi = policy.investment(x[leg], t);
                const double shock = leg == 0 ? z : -z;
                x[leg] += (drift_r * x[leg] + premium * pi + income - c) * dt + vol * pi * sqrt_dt * shock;
                if (!(x[leg] > floor)) alive[leg] = false;
            }
            if (k == n) break;
        }
        Sample out;
        for (int leg = 0; leg < legs; ++leg) {
            if (!alive[leg]) continue;
            out.reward += reward[leg] * dt;
            ++out.alive;
        }
        if (out.alive > 0) out.reward /= out.alive;
        out.end_utility = end_u;
        results[s] = out;
    });

    ValueEstimate est;
    double sum = 0.0, end_u = 0.0;
    std::size_t used = 0;
    for (const auto& r : results) {
        est.ruined += static_cast<std::size_t>(legs - r.alive);
        est.paths += static_cast<std::size_t>(r.alive);
        end_u = std::max(end_u, r.end_utility);
        if (r.alive == 0) continue;
        sum += r.reward;
        ++used;
    }
    if (used == 0) throw EstimationFailure("every simulated path was ruined");
    est.mean = sum / static_cast<double>(used);
    double sq = 0.0;
    for (const auto& r : results) {
        if (r.alive == 0) continue;
        const double d = r.reward - est.mean;
        sq += d * d;
    }
    est.standard_error = used > 1 ? std::sqrt(sq / static_cast<double>(used - 1) / static_cast<double>(used)) : 0.0;
    const double end_hazard = model.hazard(age + horizon);
    est.tail_estimate = weights[n] * end_u / (market.r + end_hazard);
    return est;
}

// ---------------------------------------------------------------------------
// Dynamic-programming residual

enum class DerivativeMode {
    finite_difference,  ///< central differences of the closed form in x and t
    analytic,           ///< closed-form x-derivatives, phi' by differentiating its integral
};

struct HjbOptions {
    PhiKernel kernel = PhiKernel::survival_root;
    double phi_scale = 1.0;  ///< multiplies phi everywhere (negative control)
    DerivativeMode derivatives = DerivativeMode::finite_difference;
    double wealth_step = 1e-3;  ///< relative to x + H/r
    double time_step = 1e-3;    ///< years
    numerics::QuadratureSpec quadrature{1e-13, 1e-300, 90.0, 25};
};

struct HjbResult {
    double max_relative = 0.0;
    double mean_relative = 0.0;
    double worst_wealth = 0.0;
    double worst_time = 0.0;
    std::size_t points = 0;
};

/// Residual of sup_{c,pi}[u(c) + V_t + (rx + (mu-r)pi + H - c) V_x + sigma^2 pi^2 V_xx / 2]
/// - (r + hazard(age + t)) V for V(x, t) = (x + H/r)^{1-gamma} phi^gamma(t) / (1-gamma),
/// with the sup taken at the first-order conditions. Relative to the sum of
/// the absolute values of the terms.
inline HjbResult hjb_residual(const MarketParams& market, const Preference& pref, double income,
                              const MortalityModel& model, double age, const std::vector<double>& wealth_grid,
                              const std::vector<double>& time_grid, const HjbOptions& opt = {}) {
    market.validate();
    const auto constants = merton_constants(market, pref);
    if (!(market.r > 0.0)) throw UnsupportedRegimeError("HJB check needs r > 0");
    const double g = pref.gamma;
    const double r = market.r;
    const double capitalized = income / r;

    auto phi_at = [&](double t) {
        return opt.phi_scale * phi(model, age + t, constants.b, g, opt.kernel, opt.quadrature);
    };
    auto value = [&](double x, double phi_t) {
        return std::pow(x + capitalized, 1.0 - g) * std::pow(phi_t, g) / (1.0 - g);
    };

    HjbResult out;
    double sum = 0.0;
    for (double t : time_grid) {
        const double phi_t = phi_at(t);
        double dphi = 0.0;
        if (opt.derivatives == DerivativeMode::analytic) {
            dphi = opt.phi_scale * phi_age_derivative(model, age + t, constants.b, g, opt.kernel, opt.quadrature);
        } else {
            const double ht = std::min(opt.time_step, t > 0.0 ? t : opt.time_step);
            if (t >= ht)
                dphi = (phi_at(t + ht) - phi_at(t - ht)) / (2.0 * ht);
            else
                dphi = (-3.0 * phi_t + 4.0 * phi_at(t + ht) - phi_at(t + 2.0 * ht)) / (2.0 * ht);
        }
        const double hazard = model.hazard(age + t);

        for (double x : wealth_grid) {
            const double y = x + capitalized;
            if (!(y > 0.0)) throw DomainError("HJB grid needs x + H/r > 0");
            const double v = value(x, phi_t);
            double v_x, v_xx, v_t;
            if (opt.derivatives == DerivativeMode::analytic) {
                v_x = std::pow(y, -g) * std::pow(phi_t, g);
                v_xx = -g * v_x / y;
                v_t = g / (1.0 - g) * std::pow(y, 1.0 - g) * std::pow(phi_t, g - 1.0) * dphi;
            } else {
                const double hx = opt.wealth_step * y;
                const double v_up = value(x + hx, phi_t);
                const double v_dn = value(x - hx, phi_t);
                v_x = (v_up - v_dn) / (2.0 * hx);
                v_xx = (v_up - 2.0 * v + v_dn) / (hx * hx);
                v_t = g / (1.0 - g) * std::pow(y, 1.0 - g) * std::pow(phi_t, g - 1.0) * dphi;
            }
            if (!(v_x > 0.0) || !(v_xx < 0.0)) throw NumericalFailure("value function is not concave on the grid", v);

            const double c = std::pow(v_x, -1.0 / g);
            const double pi = -market.risk_premium() * v_x / (market.sigma * market.sigma * v_xx);
            const double terms[] = {
                crra_utility(c, g),
                v_t,
                (r * x + income) * v_x,
                market.risk_premium() * pi * v_x,
                -c * v_x,
                0.5 * market.sigma * market.sigma * pi * pi * v_xx,
                -(r + hazard) * v,
            };
            double residual = 0.0, scale = 0.0;
            for (double term : terms) {
                residual += term;
                scale += std::abs(term);
            }
            const double rel = std::abs(residual) / scale;
            sum += rel;
            ++out.points;
            if (rel > out.max_relative) {
                out.max_relative = rel;
                out.worst_wealth = x;
                out.worst_time = t;
            }
        }
    }
    out.mean_relative = out.points ? sum / static_cast<double>(out.points) : 0.0;
    return out;
}

/// n equally spaced points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out;
    if (n == 0) return out;
    if (n == 1) return {lo};
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

// ---------------------------------------------------------------------------
// Verification run

struct VerificationInputs {
    MarketParams market;
    Preference preference;
    MortalityModel subjective;
    double age_at_maturity = 65.0;
    double fund = 0.0;    ///< A
    double income = 0.0;  ///< H
    double wealth = 0.0;  ///< x_T
    SimConfig sim;
    PhiKernel kernel = PhiKernel::survival_root;
    double phi_scale = 1.0;
    std::vector<double> hjb_wealth;
    std::vector<double> hjb_time;
    double z_limit = 4.0;
    double residual_limit = 1e-4;
};

struct MonteCarloCheck {
    const char* name = "";
    ValueEstimate estimate;
    double closed_form = 0.0;
    double z = 0.0;
};

struct VerificationReport {
    MonteCarloCheck exercise;  ///< V(x_T) with income H
    MonteCarloCheck withdraw;  ///< U(x_T + A) with no income
    HjbResult hjb;
    bool passed = false;
};

inline double z_score(const ValueEstimate& est, double closed_form) {
    const double diff = est.mean - closed_form;
    // An SE at rounding level means the paths were deterministic.
    if (est.standard_error > 1e-12 * std::abs(est.mean)) return diff / est.standard_error;
    // Deterministic paths: only Euler bias remains, O(dt) relative.
    const double rel = std::abs(diff) / std::abs(closed_form);
    return rel <= 1e-5 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

inline VerificationReport run_verification(const VerificationInputs& in) {
    in.sim.validate();
    const auto constants = merton_constants(in.market, in.preference);
    const double g = in.preference.gamma;
    const auto curve = phi_curve(in.subjective, in.age_at_maturity, constants.b, g, in.kernel, in.phi_scale);
    const double phi_T = curve(0.0);

    VerificationReport rep;
    {
        const auto policy = merton_feedback(in.market, in.preference, in.income, curve, in.sim);
        rep.exercise.name = "V";
        rep.exercise.estimate = estimate_value(policy, in.market, in.preference, in.subjective,
                                               in.age_at_maturity, in.income, in.wealth, in.sim);
        rep.exercise.closed_form = value_V(in.wealth, in.income, in.market.r, phi_T, g);
        rep.exercise.z = z_score(rep.exercise.estimate, rep.exercise.closed_form);
    }
    {
        const auto policy = merton_feedback(in.market, in.preference, 0.0, curve, in.sim);
        rep.withdraw.name = "U";
        rep.withdraw.estimate = estimate_value(policy, in.market, in.preference, in.subjective,
                                               in.age_at_maturity, 0.0, in.wealth + in.fund, in.sim);
        rep.withdraw.closed_form = value_U(in.wealth, in.fund, phi_T, g);
        rep.withdraw.z = z_score(rep.withdraw.estimate, rep.withdraw.closed_form);
    }
    HjbOptions hjb;
    hjb.kernel = in.kernel;
    hjb.phi_scale = in.phi_scale;
    rep.hjb = hjb_residual(in.market, in.preference, in.income, in.subjective, in.age_at_maturity,
                           in.hjb_wealth, in.hjb_time, hjb);
    rep.passed = std::abs(rep.exercise.z) <= in.z_limit && std::abs(rep.withdraw.z) <= in.z_limit &&
                 rep.hjb.max_relative <= in.residual_limit;
    return rep;
}

inline void write_verification_text(std::ostream& out, const VerificationReport& rep) {
    out.setf(std::ios::scientific);
    out.precision(10);
    for (const auto* check : {&rep.exercise, &rep.withdraw}) {
        out << check->name << ": estimate " << check->estimate.mean << " +/- " << check->estimate.standard_error
            << ", closed form " << check->closed_form << ", z " << check->z << ", paths " << check->estimate.paths
            << ", ruined " << check->estimate.ruined << ", tail " << check->estimate.tail_estimate << '\n';
    }
    out << "HJB: max relative residual " << rep.hjb.max_relative << " at (x=" << rep.hjb.worst_wealth
        << ", t=" << rep.hjb.worst_time << "), mean " << rep.hjb.mean_relative << " over " << rep.hjb.points
        << " points\n";
    out << "result: " << (rep.passed ? "PASS" : "FAIL") << '\n';
    out.unsetf(std::ios::scientific);
}

inline void write_verification_csv(std::ostream& out, const VerificationReport& rep) {
    out.precision(17);
    out << "check,estimate,stderr,closed_form,z,paths,ruined,tail,max_residual,mean_residual\n";
    for (const auto* check : {&rep.exercise, &rep.withdraw})
        out << check->name << ',' << check->estimate.mean << ',' << check->estimate.standard_error << ','
            << check->closed_form << ',' << check->z << ',' << check->estimate.paths << ','
            << check->estimate.ruined << ',' << check->estimate.tail_estimate << ",,\n";
    out << "HJB,,,,,,,," << rep.hjb.max_relative << ',' << rep.hjb.mean_relative << '\n';
}

}  // namespace gao::simulate
