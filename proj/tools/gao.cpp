// Command-line front end: fit, rh, value, sweep, scenarios, verify.

#include "gao/config.hpp"
#include "gao/gao.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace gao;

struct GlobalOptions {
    std::string config_path;
    std::string out_prefix;
    std::optional<std::uint64_t> seed;
    std::string l12_mode;
    std::vector<std::string> overrides;
};

config::ScenarioConfig load_scenario(const GlobalOptions& g) {
    config::KeyValues kv;
    if (!g.config_path.empty()) kv.load_file(g.config_path);
    for (const auto& o : g.overrides) kv.override_with(o);
    if (!g.out_prefix.empty()) kv.set("output.prefix", g.out_prefix);
    if (g.seed) kv.set("sim.seed", std::to_string(*g.seed));
    if (!g.l12_mode.empty()) kv.set("output.l12_mode", g.l12_mode);
    return config::build_scenario(kv);
}

std::string output_prefix(const GlobalOptions& g) {
    if (!g.out_prefix.empty()) return g.out_prefix;
    config::KeyValues kv;
    if (!g.config_path.empty()) kv.load_file(g.config_path);
    for (const auto& o : g.overrides) kv.override_with(o);
    return kv.text("output.prefix");
}

std::ofstream open_csv(const std::string& prefix, const std::string& suffix) {
    const std::string path = prefix + "_" + suffix + ".csv";
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    return out;
}

// Whole currency units with thousands separators, for the text view only.
std::string money(double v) {
    const long long rounded = std::llround(v);
    std::string digits = std::to_string(rounded < 0 ? -rounded : rounded);
    for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(static_cast<std::size_t>(i), ",");
    return (rounded < 0 ? "-$" : "$") + digits;
}

std::vector<double> grid_or_values(const std::vector<double>& values, double lo, double hi, std::size_t n) {
    if (!values.empty()) return values;
    return simulate::linspace(lo, hi, n);
}

// ---------------------------------------------------------------------------

int cmd_fit(const GlobalOptions& g, const std::string& table_path, double base_age, const std::string& weighting) {
    const auto table = read_mortality_table(table_path, base_age);
    FitOptions options;
    if (weighting == "relative") options.weighting = FitWeighting::relative;
    else if (weighting != "none") throw ValidationError("weighting must be none or relative");
    const auto params = fit_gompertz(table, base_age, options);

    std::cout << std::fixed << std::setprecision(4) << "m = " << params.m << "\nvarsigma = " << params.varsigma
              << '\n';
    const std::string path = output_prefix(g) + "_fit.model";
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << "label = " << std::filesystem::path(table_path).stem().string() << '\n'
        << "base_age = " << base_age << '\n'
        << "gompertz.m = " << params.m << '\n'
        << "gompertz.varsigma = " << params.varsigma << '\n';
    std::cout << "wrote " << path << '\n';
    return 0;
}

int cmd_rh(const GlobalOptions& g, std::vector<std::string> models, std::optional<double> age,
           const std::vector<double>& h_values, double h_min, double h_max, std::size_t h_steps) {
    const auto scenario = load_scenario(g);
    if (models.empty()) models.push_back(scenario.objective_ref);
    const double at_age = age.value_or(scenario.policy.age_at_maturity());
    const auto grid = grid_or_values(h_values, h_min, h_max, h_steps);

    auto csv = open_csv(scenario.output_prefix, "rh");
    csv << "model,age,h,r_h,status\n";
    std::cout << "model,age,h,r_h,status\n" << std::setprecision(10);
    for (const auto& ref : models) {
        const auto model = config::resolve_model(ref);
        for (double h : grid) {
            std::string rate = "", status = "ok";
            try {
                std::ostringstream s;
                s.precision(17);
                s << implicit_rate(model, at_age, h);
                rate = s.str();
            } catch (const NoSolutionError&) {
                status = "unattainable";
            } catch (const NumericalFailure&) {
                status = "numerical-failure";
            }
            csv << ref << ',' << at_age << ',' << h << ',' << rate << ',' << status << '\n';
            std::cout << ref << ',' << at_age << ',' << h << ',' << rate << ',' << status << '\n';
        }
    }
    return 0;
}

int cmd_value(const GlobalOptions& g, std::size_t curve_points) {
    const auto scenario = load_scenario(g);
    const auto rep = evaluate(scenario.valuation_inputs());

    std::cout << std::fixed;
    std::cout << "fund A            " << money(rep.fund) << '\n'
              << "premium P         " << money(rep.premium) << " per year\n"
              << "income H          " << std::setprecision(2) << rep.income << " per year\n";
    if (rep.r_h)
        std::cout << "technical rate    " << std::setprecision(4) << *rep.r_h << '\n';
    else
        std::cout << "technical rate    unattainable\n";
    std::cout << std::setprecision(6) << "delta             " << rep.delta << '\n'
              << "b                 " << rep.b << '\n'
              << "phi(t0)           " << rep.phi_t0 << '\n'
              << "phi(T)            " << rep.phi_T << '\n'
              << std::scientific << std::setprecision(8) << "U(x0, t0)         " << rep.calU << '\n'
              << "V(x0, t0)         " << rep.calV << '\n'
              << "V(x0 - L*, t0)    " << rep.calV_at_price << '\n'
              << std::fixed << "indifference L*   " << money(rep.lump_sum) << '\n'
              << "exercise at T     " << (rep.exercise ? "yes" : "no") << '\n'
              << "worthless         " << (rep.worthless ? "yes" : "no") << '\n'
              << "p12               " << money(rep.monthly.p12) << '\n'
              << "l12               " << money(rep.monthly.l12) << " ("
              << (scenario.l12_mode == L12Mode::table ? "table" : "text") << " mode)\n"
              << "total             " << money(rep.monthly.p12) << " + " << money(rep.monthly.l12) << " = "
              << money(std::round(rep.monthly.p12) + std::round(rep.monthly.l12)) << '\n';

    auto csv = open_csv(scenario.output_prefix, "value");
    csv << "quantity,value\n"
        << "r," << scenario.market.r << '\n'
        << "h," << scenario.policy.h << '\n'
        << "A," << rep.fund << '\n'
        << "P," << rep.premium << '\n'
        << "H," << rep.income << '\n'
        << "r_h,";
    if (rep.r_h) csv << *rep.r_h;
    else csv << "nan";
    csv << '\n'
        << "delta," << rep.delta << '\n'
        << "b," << rep.b << '\n'
        << "phi_t0," << rep.phi_t0 << '\n'
        << "phi_T," << rep.phi_T << '\n'
        << "calU," << rep.calU << '\n'
        << "calV," << rep.calV << '\n'
        << "calV_at_L_star," << rep.calV_at_price << '\n'
        << "L_star," << rep.lump_sum << '\n'
        << "exercise," << (rep.exercise ? 1 : 0) << '\n'
        << "worthless," << (rep.worthless ? 1 : 0) << '\n'
        << "p12," << rep.monthly.p12 << '\n'
        << "l12," << rep.monthly.l12 << '\n'
        << "total," << rep.monthly.total() << '\n';

    // Curves over x0 in [L* + 1, 10 A].
    auto curves = open_csv(scenario.output_prefix, "value_curves");
    curves << "x0,calU,calV\n";
    const auto resolved = resolve_policy(scenario.policy, scenario.market);
    for (double x0 : simulate::linspace(rep.lump_sum + 1.0, 10.0 * rep.fund, curve_points)) {
        curves << x0 << ','
               << value_calU(x0, resolved.t0, resolved, scenario.market, scenario.preference, rep.phi_t0) << ','
               << value_calV(x0, 0.0, resolved.t0, resolved, scenario.market, scenario.preference, rep.phi_t0)
               << '\n';
    }
    return 0;
}

int cmd_sweep(const GlobalOptions& g, const std::vector<double>& r_values, double r_min, double r_max,
              std::size_t r_steps, const std::vector<double>& h_values, double h_min, double h_max,
              std::size_t h_steps) {
    const auto scenario = load_scenario(g);
    const auto resolved = resolve_policy(scenario.policy, scenario.market);
    const auto rs = grid_or_values(r_values, r_min, r_max, r_steps);
    const auto hs = grid_or_values(h_values, h_min, h_max, h_steps);
    for (double r : rs)
        if (!(r > 0.0)) throw ValidationError("sweep rates must be positive");
    for (double h : hs)
        if (!(h > 0.0)) throw ValidationError("sweep conversion rates must be positive");

    auto csv = open_csv(scenario.output_prefix, "sweep");
    csv << "r,h,L_star\n";
    for (double r : rs)
        for (double h : hs)
            csv << r << ',' << h << ',' << indifference_price(resolved.fund, h, r, resolved.T, resolved.t0) << '\n';
    std::cout << "wrote " << rs.size() * hs.size() << " cells to " << scenario.output_prefix << "_sweep.csv\n";
    return 0;
}

int cmd_scenarios(const GlobalOptions& g, const std::string& ref_a, const std::string& ref_b,
                  std::size_t curve_points, double density_span, std::size_t density_points) {
    auto scenario = load_scenario(g);
    const auto model_a = config::resolve_model(ref_a);
    const auto model_b = config::resolve_model(ref_b);

    auto inputs_a = scenario.valuation_inputs();
    inputs_a.subjective = model_a;
    auto inputs_b = scenario.valuation_inputs();
    inputs_b.subjective = model_b;
    const auto rep_a = evaluate(inputs_a);
    const auto rep_b = evaluate(inputs_b);
    const auto resolved = resolve_policy(scenario.policy, scenario.market);

    auto values = open_csv(scenario.output_prefix, "scenarios_values");
    values << "x0,calU_" << ref_a << ",calV_" << ref_a << ",calU_" << ref_b << ",calV_" << ref_b << '\n';
    bool v_above_u = true;
    for (double x0 : simulate::linspace(rep_a.lump_sum + 1.0, 10.0 * rep_a.fund, curve_points)) {
        double row[4];
        int k = 0;
        for (const auto* rep : {&rep_a, &rep_b}) {
            row[k++] = value_calU(x0, resolved.t0, resolved, scenario.market, scenario.preference, rep->phi_t0);
            row[k++] = value_calV(x0, 0.0, resolved.t0, resolved, scenario.market, scenario.preference, rep->phi_t0);
        }
        v_above_u = v_above_u && row[1] > row[0] && row[3] > row[2];
        values << x0 << ',' << row[0] << ',' << row[1] << ',' << row[2] << ',' << row[3] << '\n';
    }

    const double age = scenario.policy.chi;
    auto density = open_csv(scenario.output_prefix, "scenarios_density");
    density << "t,age,density_" << ref_a << ",density_" << ref_b << '\n';
    for (double t : simulate::linspace(0.0, density_span, density_points))
        density << t << ',' << age + t << ',' << death_density(model_a, age, t) << ','
                << death_density(model_b, age, t) << '\n';

    numerics::QuadratureSpec quad;
    quad.truncation_horizon = density_span;
    const double mass_a = numerics::integrate_semi_infinite([&](double t) { return death_density(model_a, age, t); }, quad);
    const double mass_b = numerics::integrate_semi_infinite([&](double t) { return death_density(model_b, age, t); }, quad);

    std::cout << std::fixed << std::setprecision(6) << "model            " << ref_a << " | " << ref_b << '\n'
              << "phi(t0)          " << rep_a.phi_t0 << " | " << rep_b.phi_t0 << '\n'
              << "phi(T)           " << rep_a.phi_T << " | " << rep_b.phi_T << '\n'
              << "L*               " << money(rep_a.lump_sum) << " | " << money(rep_b.lump_sum) << '\n'
              << "exercise         " << (rep_a.exercise ? "yes" : "no") << " | " << (rep_b.exercise ? "yes" : "no")
              << '\n'
              << "V > U on grid    " << (v_above_u ? "yes" : "no") << '\n'
              << "density mass     " << std::setprecision(9) << mass_a << " | " << mass_b << '\n';
    return 0;
}

int cmd_verify(const GlobalOptions& g, double perturb_phi) {
    const auto scenario = load_scenario(g);
    const auto resolved = resolve_policy(scenario.policy, scenario.market);
    simulate::VerificationInputs in{scenario.market, scenario.preference, scenario.subjective};
    in.age_at_maturity = scenario.policy.age_at_maturity();
    in.fund = resolved.fund;
    in.income = resolved.income();
    in.wealth = scenario.sim_wealth;
    in.sim = scenario.sim;
    in.kernel = scenario.kernel;
    in.phi_scale = 1.0 + perturb_phi;
    in.hjb_wealth = simulate::linspace(scenario.hjb.wealth_min, scenario.hjb.wealth_max, scenario.hjb.wealth_points);
    in.hjb_time = simulate::linspace(0.0, scenario.hjb.time_max, scenario.hjb.time_points);
    in.z_limit = scenario.z_limit;
    in.residual_limit = scenario.residual_limit;

    const auto rep = simulate::run_verification(in);
    simulate::write_verification_text(std::cout, rep);
    auto csv = open_csv(scenario.output_prefix, "verify");
    simulate::write_verification_csv(csv, rep);
    return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Indifference valuation of guaranteed annuity options"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Scenario file (section.key = value lines)");
    app.add_option("--out", g.out_prefix, "Output path prefix");
    auto* seed_opt = app.add_option("--seed", seed, "Simulation seed");
    app.add_option("--l12-mode", g.l12_mode, "l12 convention")->check(CLI::IsMember({"table", "text"}));
    app.add_option("--set", g.overrides, "Override a config key (key=value)");

    std::string table_path, weighting = "none";
    double base_age = 35.0;
    auto* fit = app.add_subcommand("fit", "Fit Gompertz parameters to an age,lx table");
    fit->add_option("table", table_path, "Mortality table CSV")->required();
    fit->add_option("--base-age", base_age, "Conditioning age");
    fit->add_option("--weighting", weighting, "none or relative");

    std::vector<std::string> rh_models;
    std::optional<double> rh_age;
    std::vector<double> h_values;
    double h_min = 0.05, h_max = 0.2;
    std::size_t h_steps = 31;
    auto* rh = app.add_subcommand("rh", "Implicit technical rate r_h over a grid of h");
    rh->add_option("--model", rh_models, "Mortality reference (repeatable)");
    rh->add_option("--age", rh_age, "Age at conversion (default: policy age at T)");
    rh->add_option("--h-value", h_values, "Conversion rates (repeatable)");
    rh->add_option("--h-min", h_min);
    rh->add_option("--h-max", h_max);
    rh->add_option("--h-steps", h_steps);

    std::size_t curve_points = 200;
    auto* value = app.add_subcommand("value", "Valuation report for the configured scenario");
    value->add_option("--curve-points", curve_points, "Points in the U/V wealth curves");

    std::vector<double> r_values, sweep_h;
    double r_min = 0.01, r_max = 0.15, sh_min = 0.05, sh_max = 0.15;
    std::size_t r_steps = 29, sh_steps = 21;
    auto* sweep = app.add_subcommand("sweep", "Grid of L* over (r, h)");
    sweep->add_option("--r-value", r_values, "Interest rates (repeatable)");
    sweep->add_option("--r-min", r_min);
    sweep->add_option("--r-max", r_max);
    sweep->add_option("--r-steps", r_steps);
    sweep->add_option("--h-value", sweep_h, "Conversion rates (repeatable)");
    sweep->add_option("--h-min", sh_min);
    sweep->add_option("--h-max", sh_max);
    sweep->add_option("--h-steps", sh_steps);

    std::string model_a = "ON-female-1970", model_b = "ON-female-2004";
    double density_span = 90.0;
    std::size_t density_points = 181, scenario_points = 200;
    auto* scenarios = app.add_subcommand("scenarios", "Compare two subjective mortality laws");
    scenarios->add_option("--model-a", model_a);
    scenarios->add_option("--model-b", model_b);
    scenarios->add_option("--curve-points", scenario_points);
    scenarios->add_option("--density-span", density_span, "Years after the policy age");
    scenarios->add_option("--density-points", density_points);

    double perturb_phi = 0.0;
    auto* verify = app.add_subcommand("verify", "Monte Carlo and HJB checks of the closed forms");
    verify->add_option("--perturb-phi", perturb_phi, "Relative perturbation of phi (negative control)");

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) g.seed = seed;

    try {
        if (*fit) return cmd_fit(g, table_path, base_age, weighting);
        if (*rh) return cmd_rh(g, rh_models, rh_age, h_values, h_min, h_max, h_steps);
        if (*value) return cmd_value(g, curve_points);
        if (*sweep) return cmd_sweep(g, r_values, r_min, r_max, r_steps, sweep_h, sh_min, sh_max, sh_steps);
        if (*scenarios) return cmd_scenarios(g, model_a, model_b, scenario_points, density_span, density_points);
        if (*verify) return cmd_verify(g, perturb_phi);
    } catch (const gao::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const gao::IllPosedError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const gao::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const gao::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
