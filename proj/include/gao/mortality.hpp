#pragma once

// Survival laws. A MortalityModel is immutable once built; every query is a
// pure function of (model, age, elapsed time).

#include "gao/errors.hpp"
#include "gao/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gao {

/// Gompertz law: hazard(x) = exp((x - m) / varsigma) / varsigma.
struct GompertzParams {
    double m = 0.0;         ///< modal age at death, years
    double varsigma = 0.0;  ///< dispersion, years

    void validate() const {
        if (!(m > 0.0)) throw DomainError("Gompertz modal age m must be positive");
        if (!(varsigma > 0.0)) throw DomainError("Gompertz dispersion must be positive");
    }
};

/// Age-independent hazard; mostly useful as an analytic reference.
struct ConstantHazard {
    double lambda = 0.0;
};

struct TableRow {
    double age = 0.0;
    double survivors = 0.0;  ///< l_x as a count or a probability
};

/// Survivorship column indexed by integer age.
class MortalityTable {
public:
    MortalityTable(double base_age, std::vector<TableRow> rows)
        : base_age_(base_age), rows_(std::move(rows)) {
        if (rows_.empty()) throw DomainError("mortality table has no rows");
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto& row = rows_[i];
            if (!std::isfinite(row.age) || !std::isfinite(row.survivors) || row.survivors < 0.0)
                throw DomainError("mortality table row " + std::to_string(i) + " is invalid");
            if (i > 0 && !(row.age > rows_[i - 1].age))
                throw DomainError("mortality table ages must be strictly increasing");
            if (i > 0 && row.survivors > rows_[i - 1].survivors)
                throw DomainError("mortality table survivorship must be nonincreasing");
        }
        const auto base = std::find_if(rows_.begin(), rows_.end(),
                                       [&](const TableRow& r) { return r.age == base_age_; });
        if (base == rows_.end())
            throw DomainError("base age " + std::to_string(base_age_) + " is not a table row");
        if (!(base->survivors > 0.0)) throw DomainError("survivorship at the base age is zero");
        const double radix = base->survivors;
        for (auto& row : rows_) row.survivors /= radix;
    }

    double base_age() const noexcept { return base_age_; }
    /// Rows with survivorship normalized to 1 at the base age.
    const std::vector<TableRow>& rows() const noexcept { return rows_; }
    double first_age() const noexcept { return rows_.front().age; }
    double last_age() const noexcept { return rows_.back().age; }

private:
    double base_age_;
    std::vector<TableRow> rows_;
};

/// Reads the `age,lx` CSV format. The base age defaults to the first row.
inline MortalityTable parse_mortality_table(std::istream& in, std::optional<double> base_age = {}) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<TableRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
            line.erase(0, 3);  // UTF-8 BOM
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (!header_seen) {
            std::string compact;
            std::copy_if(line.begin(), line.end(), std::back_inserter(compact),
                         [](char c) { return c != ' ' && c != '\t'; });
            if (compact != "age,lx") throw ParseError("expected header 'age,lx'", line_no);
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError("expected two comma-separated fields", line_no);
        TableRow row;
        try {
            std::size_t used = 0;
            const std::string age = line.substr(0, comma);
            const std::string lx = line.substr(comma + 1);
            row.age = std::stod(age, &used);
            if (age.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(age);
            row.survivors = std::stod(lx, &used);
            if (lx.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(lx);
        } catch (const std::logic_error&) {
            throw ParseError("non-numeric field", line_no);
        }
        if (row.age != std::floor(row.age)) throw ParseError("age must be an integer", line_no);
        if (!rows.empty() && !(row.age > rows.back().age))
            throw ParseError("ages must be ascending", line_no);
        if (row.survivors < 0.0) throw ParseError("lx must be nonnegative", line_no);
        if (!rows.empty() && row.survivors > rows.back().survivors)
            throw ParseError("lx must be nonincreasing", line_no);
        rows.push_back(row);
    }
    if (!header_seen) throw ParseError("empty mortality table", 0);
    if (rows.empty()) throw ParseError("mortality table has a header but no rows", line_no);
    const double base = base_age.value_or(rows.front().age);
    try {
        return MortalityTable(base, std::move(rows));
    } catch (const DomainError& e) {
        throw ParseError(e.what(), 0);
    }
}

inline MortalityTable read_mortality_table(const std::string& path,
                                           std::optional<double> base_age = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mortality table '" + path + "'", 0);
    return parse_mortality_table(in, base_age);
}

inline void write_mortality_table(std::ostream& out, const MortalityTable& table) {
    out << "age,lx\n";
    out.precision(17);
    for (const auto& row : table.rows()) out << row.age << ',' << row.survivors << '\n';
}

/// A survival law: Gompertz, constant hazard, or a table with the integrated
/// hazard interpolated linearly between ages (constant hazard within each year).
class MortalityModel {
public:
    MortalityModel(GompertzParams params, std::string label = {})
        : law_(params), label_(std::move(label)) {
        params.validate();
    }

    MortalityModel(ConstantHazard hazard, std::string label = {})
        : law_(hazard), label_(std::move(label)) {
        if (!(hazard.lambda >= 0.0) || !std::isfinite(hazard.lambda))
            throw DomainError("constant hazard must be finite and nonnegative");
    }

    MortalityModel(const MortalityTable& table, std::string label = {})
        : law_(Tabular{}), label_(std::move(label)) {
        auto& tab = std::get<Tabular>(law_);
        for (const auto& row : table.rows()) {
            tab.ages.push_back(row.age);
            tab.cumulative_hazard.push_back(row.survivors > 0.0
                                                ? -std::log(row.survivors)
                                                : std::numeric_limits<double>::infinity());
        }
    }

    const std::string& label() const noexcept { return label_; }

    bool is_gompertz() const noexcept { return std::holds_alternative<GompertzParams>(law_); }
    std::optional<GompertzParams> gompertz() const {
        if (const auto* g = std::get_if<GompertzParams>(&law_)) return *g;
        return std::nullopt;
    }

    /// Oldest age the model can answer for (infinite for analytic laws).
    double max_age() const noexcept {
        if (const auto* t = std::get_if<Tabular>(&law_)) return t->ages.back();
        return std::numeric_limits<double>::infinity();
    }

    double hazard(double age) const {
        if (!(age >= 0.0)) throw DomainError("age must be nonnegative");
        return std::visit([age](const auto& law) { return hazard_of(law, age); }, law_);
    }

    /// Probability that a life aged `age` survives `t` more years.
    double survival(double age, double t) const {
        if (!(age >= 0.0)) throw DomainError("age must be nonnegative");
        if (!(t >= 0.0)) throw DomainError("elapsed time must be nonnegative");
        if (t == 0.0) {
            check_range(age);
            return 1.0;
        }
        return std::visit([age, t](const auto& law) { return survival_of(law, age, t); }, law_);
    }

private:
    struct Tabular {
        std::vector<double> ages;
        std::vector<double> cumulative_hazard;  // -log(l_x / l_base), +inf once extinct

        std::size_t segment(double age) const {
            if (age < ages.front() || age > ages.back()) {
                std::ostringstream msg;
                msg << "age " << age << " outside table range [" << ages.front() << ", "
                    << ages.back() << "]";
                throw OutOfRangeError(msg.str());
            }
            if (ages.size() == 1) return 0;
            const auto it = std::upper_bound(ages.begin(), ages.end(), age);
            const auto idx = static_cast<std::size_t>(it - ages.begin());
            return std::min(idx == 0 ? 0 : idx - 1, ages.size() - 2);
        }

        double integrated(double age) const {
            if (ages.size() == 1) {
                segment(age);
                return cumulative_hazard.front();
            }
            const std::size_t k = segment(age);
            const double lo = cumulative_hazard[k];
            const double hi = cumulative_hazard[k + 1];
            const double w = (age - ages[k]) / (ages[k + 1] - ages[k]);
            if (w == 0.0) return lo;
            if (w == 1.0) return hi;
            if (std::isinf(hi)) return hi;
            return lo + w * (hi - lo);
        }
    };

    using Law = std::variant<GompertzParams, ConstantHazard, Tabular>;

    void check_range(double age) const {
        if (const auto* t = std::get_if<Tabular>(&law_)) t->segment(age);
    }

    static double hazard_of(const GompertzParams& g, double age) {
        return std::exp((age - g.m) / g.varsigma) / g.varsigma;
    }
    static double hazard_of(const ConstantHazard& c, double) { return c.lambda; }
    static double hazard_of(const Tabular& t, double age) {
        if (t.ages.size() == 1) {
            t.segment(age);
            return 0.0;
        }
        const std::size_t k = t.segment(age);
        const double d = t.cumulative_hazard[k + 1] - t.cumulative_hazard[k];
        return d / (t.ages[k + 1] - t.ages[k]);
    }

    static double survival_of(const GompertzParams& g, double age, double t) {
        // exp(-e^{(age-m)/s} (e^{t/s} - 1)), with expm1 for small t
        return std::exp(-std::exp((age - g.m) / g.varsigma) * std::expm1(t / g.varsigma));
    }
    static double survival_of(const ConstantHazard& c, double, double t) {
        return std::exp(-c.lambda * t);
    }
    static double survival_of(const Tabular& tab, double age, double t) {
        const double start = tab.integrated(age);
        const double end = tab.integrated(age + t);
        if (std::isinf(start)) throw DomainError("table survivorship is zero at the starting age");
        if (std::isinf(end)) return 0.0;
        return std::exp(-(end - start));
    }

    Law law_;
    std::string label_;
};

inline double force_of_mortality(const MortalityModel& model, double age) {
    return model.hazard(age);
}

inline double survival_probability(const MortalityModel& model, double age, double t) {
    return model.survival(age, t);
}

/// Density of the remaining lifetime of a life aged `age`, evaluated t years on.
inline double death_density(const MortalityModel& model, double age, double t) {
    return model.hazard(age + t) * model.survival(age, t);
}

/// Largest horizon (years past `age`) that a semi-infinite integral may use.
inline double integration_horizon(const MortalityModel& model, double age, double requested) {
    const double available = model.max_age() - age;
    if (!(available > 0.0)) throw OutOfRangeError("no table rows beyond the starting age");
    return std::min(requested, available);
}

/// Integral beyond `horizon` of e^{-rate s} p(age, s)^k with the hazard frozen at
/// age + horizon: exact for a constant hazard, an upper bound for an increasing one.
/// Tables end the integral at their last row. Infinite when the frozen tail diverges.
inline double frozen_hazard_tail(const MortalityModel& model, double age, double horizon, double rate,
                                 double k = 1.0) {
    if (std::isfinite(model.max_age())) return 0.0;
    const double p = model.survival(age, horizon);
    const double f = std::exp(-rate * horizon) * (k == 1.0 ? p : std::pow(p, k));
    if (f == 0.0) return 0.0;
    const double decay = rate + k * model.hazard(age + horizon);
    if (!(decay > 0.0)) return std::numeric_limits<double>::infinity();
    return f / decay;
}

// Bundled Gompertz laws for Ontario lives conditional on survival to 35.
namespace bundled {

struct NamedLaw {
    std::string_view label;
    GompertzParams params;
};

inline constexpr NamedLaw laws[] = {
    {"ON-female-1970", {85.3758, 10.5098}},
    {"ON-female-2004", {89.7615, 9.3216}},
    {"ON-male-1970", {79.1089, 11.5890}},
    {"ON-male-2004", {85.8651, 10.1379}},
};

inline std::optional<MortalityModel> find(std::string_view label) {
    for (const auto& law : laws)
        if (law.label == label) return MortalityModel(law.params, std::string(law.label));
    return std::nullopt;
}

inline MortalityModel female_1970() { return *find("ON-female-1970"); }
inline MortalityModel female_2004() { return *find("ON-female-2004"); }

}  // namespace bundled

// ---------------------------------------------------------------------------
// Gompertz fitting

enum class FitWeighting {
    none,      ///< plain squared survival differences
    relative,  ///< residuals divided by empirical survival
};

struct FitOptions {
    FitWeighting weighting = FitWeighting::none;
    numerics::MinimizeSpec minimizer{};
    std::size_t min_rows = 10;
};

namespace detail {

// Log-linear regression of the empirical one-year hazard; seeds the minimizer.
inline std::optional<GompertzParams> gompertz_initial_guess(const std::vector<TableRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double l0 = rows[i].survivors, l1 = rows[i + 1].survivors;
        if (!(l0 > 0.0) || !(l1 > 0.0) || !(l1 < l0)) continue;
        const double width = rows[i + 1].age - rows[i].age;
        const double mu = -std::log(l1 / l0) / width;
        const double x = 0.5 * (rows[i].age + rows[i + 1].age);
        const double y = std::log(mu);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++n;
    }
    if (n < 2) return std::nullopt;
    const double denom = n * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0)) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    if (!(slope > 0.0)) return std::nullopt;
    // log hazard = -log(s) + (x - m)/s
    const double s = 1.0 / slope;
    const double m = s * (-std::log(s) - intercept);
    if (!std::isfinite(m) || !(m > 0.0)) return std::nullopt;
    return GompertzParams{m, s};
}

}  // namespace detail

/// Least-squares Gompertz fit to survival conditional on `base_age`.
///
/// Minimizes sum over table ages s > base_age of
/// (model survival from base_age - empirical survival from base_age)^2.
inline GompertzParams fit_gompertz(const MortalityTable& table, double base_age,
                                   const FitOptions& options = {}) {
    const auto& rows = table.rows();
    const auto base = std::find_if(rows.begin(), rows.end(),
                                   [&](const TableRow& r) { return r.age == base_age; });
    if (base == rows.end() || !(base->survivors > 0.0))
        throw FittingError("base age is not a table row with positive survivorship");

    std::vector<TableRow> data;
    for (auto it = base; it != rows.end(); ++it)
        data.push_back({it->age, it->survivors / base->survivors});
    const std::size_t after_base = data.size() - 1;
    if (after_base < std::max<std::size_t>(options.min_rows, 2))
        throw FittingError("need at least " + std::to_string(options.min_rows) +
                           " rows past the base age, got " + std::to_string(after_base));
    if (std::all_of(data.begin(), data.end(),
                    [&](const TableRow& r) { return r.survivors == data.front().survivors; }))
        throw FittingError("survivorship is constant; Gompertz parameters are not identified");

    auto loss = [&](double m, double log_s) {
        const double s = std::exp(log_s);
        const double scale = std::exp((base_age - m) / s);
        double total = 0.0;
        for (std::size_t i = 1; i < data.size(); ++i) {
            const double model = std::exp(-scale * std::expm1((data[i].age - base_age) / s));
            double residual = model - data[i].survivors;
            if (options.weighting == FitWeighting::relative) {
                if (!(data[i].survivors > 0.0)) continue;
                residual /= data[i].survivors;
            }
            total += residual * residual;
        }
        return total;
    };

    const GompertzParams seed = detail::gompertz_initial_guess(data).value_or(GompertzParams{85.0, 10.0});
    const auto [m, log_s] =
        numerics::minimize_loss_2d(loss, {seed.m, std::log(seed.varsigma)}, options.minimizer);
    GompertzParams fitted{m, std::exp(log_s)};
    if (!std::isfinite(fitted.m) || !std::isfinite(fitted.varsigma) || !(fitted.m > 0.0))
        throw FittingError("Gompertz fit did not converge to valid parameters");
    return fitted;
}

/// l_x table implied by a Gompertz law, normalized to `radix` at `base_age`.
inline MortalityTable synthesize_table(const GompertzParams& params, int base_age, int last_age,
                                       double radix = 1.0) {
    const MortalityModel model(params);
    std::vector<TableRow> rows;
    for (int age = base_age; age <= last_age; ++age)
        rows.push_back({static_cast<double>(age), radix * model.survival(base_age, age - base_age)});
    return MortalityTable(base_age, std::move(rows));
}

}  // namespace gao
