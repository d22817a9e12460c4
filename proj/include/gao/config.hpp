#pragma once

// Scenario configuration: a flat `section.key = value` text file plus
// command-line overrides, resolved into the library's parameter structs.

#include "gao/annuity.hpp"
#include "gao/errors.hpp"
#include "gao/mortality.hpp"
#include "gao/simulate.hpp"
#include "gao/valuation.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef GAO_DEFAULT_DATA_DIR
#define GAO_DEFAULT_DATA_DIR "data"
#endif

namespace gao::config {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Every key the loader understands, with its default. Defaults are the
// 1970 female Ontario scenario at r = 0.07.
inline const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"policy.age", "35"},
        {"policy.t0", "0"},
        {"policy.T", "30"},
        {"policy.A", ""},  // both empty: A = 350000
        {"policy.P", ""},
        {"policy.h", "1/9"},
        {"policy.x0", "100000"},
        {"market.r", "0.07"},
        {"market.mu", "0.08"},
        {"market.sigma", "0.12"},
        {"preference.gamma", "1.4"},
        {"mortality.subjective", "ON-female-1970"},
        {"mortality.objective", "ON-female-1970"},
        {"mortality.phi_kernel", "survival_root"},
        {"sim.paths", "100000"},
        {"sim.dt", "1/252"},
        {"sim.horizon", "60"},
        {"sim.seed", "20090101"},
        {"sim.antithetic", "true"},
        {"sim.workers", "0"},
        {"sim.increments_per_step", "1"},
        {"sim.wealth", "100000"},
        {"hjb.wealth_min", "10000"},
        {"hjb.wealth_max", "1000000"},
        {"hjb.wealth_points", "50"},
        {"hjb.time_max", "35"},
        {"hjb.time_points", "50"},
        {"verify.z_limit", "4"},
        {"verify.residual_limit", "1e-4"},
        {"output.prefix", "gao"},
        {"output.l12_mode", "table"},
    };
    return table;
}

}  // namespace detail

/// Raw key/value store with the origin of each entry for error messages.
class KeyValues {
public:
    KeyValues() : values_(detail::defaults()) {}

    void set(const std::string& key, const std::string& value, std::size_t line = 0) {
        if (!detail::defaults().count(key)) throw ParseError("unknown key '" + key + "'", line);
        values_[key] = value;
        lines_[key] = line;
    }

    /// Applies "key = value" lines; '#' starts a comment.
    void load(std::istream& in) {
        std::string raw;
        std::size_t line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            const auto hash = raw.find('#');
            const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'section.key = value'", line_no);
            const std::string key = detail::trim(line.substr(0, eq));
            if (key.find('.') == std::string::npos) throw ParseError("key '" + key + "' has no section", line_no);
            set(key, detail::trim(line.substr(eq + 1)), line_no);
        }
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config file '" + path + "'", 0);
        base_dir_ = std::filesystem::path(path).parent_path();
        load(in);
    }

    /// Applies a "key=value" override from the command line.
    void override_with(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw ParseError("override '" + assignment + "' needs key=value", 0);
        set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
    }

    const std::string& text(const std::string& key) const { return values_.at(key); }
    bool empty(const std::string& key) const { return values_.at(key).empty(); }

    /// Number, accepting a single "a/b" quotient.
    double number(const std::string& key) const {
        const std::string& v = text(key);
        try {
            std::size_t used = 0;
            const auto slash = v.find('/');
            double out = 0.0;
            if (slash == std::string::npos) {
                out = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } else {
                const std::string num = detail::trim(v.substr(0, slash));
                const std::string den = detail::trim(v.substr(slash + 1));
                const double a = std::stod(num, &used);
                if (used != num.size()) throw std::invalid_argument(v);
                const double b = std::stod(den, &used);
                if (used != den.size()) throw std::invalid_argument(v);
                out = a / b;
            }
            return out;
        } catch (const std::logic_error&) {
            throw ParseError("key '" + key + "': '" + v + "' is not a number", line_of(key));
        }
    }

    std::optional<double> optional_number(const std::string& key) const {
        if (empty(key)) return std::nullopt;
        return number(key);
    }

    std::size_t count(const std::string& key) const {
        const double v = number(key);
        if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::uint64_t>(v)))
            throw ParseError("key '" + key + "' must be a nonnegative integer", line_of(key));
        return static_cast<std::size_t>(v);
    }

    std::uint64_t unsigned_integer(const std::string& key) const {
        const std::string& v = text(key);
        try {
            std::size_t used = 0;
            if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
            const auto out = std::stoull(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::logic_error&) {
            throw ParseError("key '" + key + "' must be a nonnegative integer", line_of(key));
        }
    }

    bool flag(const std::string& key) const {
        const std::string& v = text(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ParseError("key '" + key + "' must be true or false", line_of(key));
    }

    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

private:
    std::size_t line_of(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

    std::map<std::string, std::string> values_;
    std::map<std::string, std::size_t> lines_;
    std::filesystem::path base_dir_;
};

inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("GAO_DATA_DIR")) return env;
    return GAO_DEFAULT_DATA_DIR;
}

/// Reads a `gompertz.m` / `gompertz.varsigma` model file as written by `fit`.
inline GompertzParams read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'", 0);
    std::optional<double> m, s;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "gompertz.m") m = std::stod(value);
            else if (key == "gompertz.varsigma") s = std::stod(value);
            else if (key != "label" && key != "source" && key != "base_age")
                throw ParseError("unknown key '" + key + "'", line_no);
        } catch (const std::logic_error&) {
            throw ParseError("'" + value + "' is not a number", line_no);
        }
    }
    if (!m || !s) throw ParseError("model file needs gompertz.m and gompertz.varsigma", 0);
    return {*m, *s};
}

/// Resolves a mortality reference:
///   ON-female-1970           bundled Gompertz law
///   gompertz:85.3758,10.5098 explicit Gompertz parameters
///   constant:0.02            constant hazard
///   table:ON-female-1970     bundled l_x table
///   path.csv                 `age,lx` table (relative to the config file first)
///   path.model               model file written by `fit`
inline MortalityModel resolve_model(const std::string& ref,
                                    const std::filesystem::path& base_dir = {}) {
    if (auto law = bundled::find(ref)) return *law;
    auto numbers_after = [&](std::size_t prefix) {
        std::vector<double> out;
        std::stringstream ss(ref.substr(prefix));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                const std::string t = detail::trim(item);
                out.push_back(std::stod(t, &used));
                if (used != t.size()) throw std::invalid_argument(t);
            } catch (const std::logic_error&) {
                throw ValidationError("mortality reference '" + ref + "' has a non-numeric parameter");
            }
        }
        return out;
    };
    try {
        if (ref.rfind("gompertz:", 0) == 0) {
            const auto p = numbers_after(9);
            if (p.size() != 2) throw ValidationError("gompertz reference needs m,varsigma");
            return MortalityModel(GompertzParams{p[0], p[1]}, ref);
        }
        if (ref.rfind("constant:", 0) == 0) {
            const auto p = numbers_after(9);
            if (p.size() != 1) throw ValidationError("constant reference needs one hazard");
            return MortalityModel(ConstantHazard{p[0]}, ref);
        }
    } catch (const DomainError& e) {
        throw ValidationError("mortality reference '" + ref + "': " + e.what());
    }
    std::filesystem::path path;
    if (ref.rfind("table:", 0) == 0) {
        path = data_dir() / (ref.substr(6) + ".csv");
    } else {
        path = ref;
        if (path.is_relative() && !base_dir.empty() && std::filesystem::exists(base_dir / path))
            path = base_dir / path;
    }
    if (!std::filesystem::exists(path))
        throw ValidationError("mortality reference '" + ref + "' is neither a label nor a readable file");
    if (path.extension() == ".model")
        return MortalityModel(read_model_file(path.string()), path.stem().string());
    return MortalityModel(read_mortality_table(path.string()), path.stem().string());
}

struct HjbGrid {
    double wealth_min = 0.0;
    double wealth_max = 0.0;
    std::size_t wealth_points = 0;
    double time_max = 0.0;
    std::size_t time_points = 0;
};

/// A fully resolved and validated scenario.
struct ScenarioConfig {
    PolicySpec policy;
    MarketParams market;
    Preference preference;
    std::string subjective_ref;
    std::string objective_ref;
    MortalityModel subjective;
    MortalityModel objective;
    PhiKernel kernel = PhiKernel::survival_root;
    double x0 = 0.0;
    simulate::SimConfig sim;
    double sim_wealth = 0.0;
    HjbGrid hjb;
    double z_limit = 4.0;
    double residual_limit = 1e-4;
    std::string output_prefix;
    L12Mode l12_mode = L12Mode::table;

    ValuationInputs valuation_inputs() const {
        return {policy, market, preference, subjective, objective, x0, kernel, l12_mode, {}};
    }
};

inline PhiKernel parse_kernel(const std::string& v) {
    if (v == "survival_root") return PhiKernel::survival_root;
    if (v == "survival") return PhiKernel::survival;
    throw ValidationError("phi kernel must be survival_root or survival, got '" + v + "'");
}

inline L12Mode parse_l12_mode(const std::string& v) {
    if (v == "table") return L12Mode::table;
    if (v == "text") return L12Mode::text;
    throw ValidationError("l12 mode must be table or text, got '" + v + "'");
}

/// Builds the scenario and checks every precondition before any computation.
inline ScenarioConfig build_scenario(const KeyValues& kv) {
    PolicySpec policy;
    policy.chi = kv.number("policy.age");
    policy.t0 = kv.number("policy.t0");
    policy.T = kv.number("policy.T");
    policy.premium = kv.optional_number("policy.P");
    policy.fund = kv.optional_number("policy.A");
    if (!policy.premium && !policy.fund) policy.fund = 350000.0;
    policy.h = kv.number("policy.h");
    policy.validate();

    MarketParams market{kv.number("market.r"), kv.number("market.mu"), kv.number("market.sigma")};
    market.validate();
    if (!(market.r > 0.0)) throw ValidationError("market.r must be positive (perpetuity value H/r)");
    Preference preference{kv.number("preference.gamma")};
    preference.validate();
    merton_constants(market, preference);  // throws IllPosedError

    ScenarioConfig cfg{policy,
                       market,
                       preference,
                       kv.text("mortality.subjective"),
                       kv.text("mortality.objective"),
                       resolve_model(kv.text("mortality.subjective"), kv.base_dir()),
                       resolve_model(kv.text("mortality.objective"), kv.base_dir())};
    cfg.kernel = parse_kernel(kv.text("mortality.phi_kernel"));
    cfg.x0 = kv.number("policy.x0");
    if (!(cfg.x0 > 0.0)) throw ValidationError("policy.x0 must be positive");
    if (cfg.subjective.max_age() <= policy.age_at_maturity() ||
        cfg.objective.max_age() <= policy.age_at_maturity())
        throw ValidationError("mortality models must cover ages beyond the maturity age");

    cfg.sim.paths = kv.count("sim.paths");
    cfg.sim.dt = kv.number("sim.dt");
    cfg.sim.horizon = kv.number("sim.horizon");
    cfg.sim.seed = kv.unsigned_integer("sim.seed");
    cfg.sim.antithetic = kv.flag("sim.antithetic");
    cfg.sim.workers = static_cast<unsigned>(kv.count("sim.workers"));
    cfg.sim.increments_per_step = static_cast<unsigned>(kv.count("sim.increments_per_step"));
    cfg.sim.validate();
    cfg.sim_wealth = kv.number("sim.wealth");

    cfg.hjb = {kv.number("hjb.wealth_min"), kv.number("hjb.wealth_max"), kv.count("hjb.wealth_points"),
               kv.number("hjb.time_max"), kv.count("hjb.time_points")};
    if (!(cfg.hjb.wealth_max >= cfg.hjb.wealth_min) || cfg.hjb.wealth_points < 1 || cfg.hjb.time_points < 1 ||
        !(cfg.hjb.time_max >= 0.0))
        throw ValidationError("HJB grid is empty or inverted");
    cfg.z_limit = kv.number("verify.z_limit");
    cfg.residual_limit = kv.number("verify.residual_limit");
    cfg.output_prefix = kv.text("output.prefix");
    cfg.l12_mode = parse_l12_mode(kv.text("output.l12_mode"));
    return cfg;
}

}  // namespace gao::config
