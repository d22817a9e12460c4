#include "gao/mortality.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace gao;

namespace {

const GompertzParams f1970{85.3758, 10.5098};
const GompertzParams f2004{89.7615, 9.3216};

double hazard_integral(const MortalityModel& model, double age, double t) {
    return numerics::integrate_semi_infinite(
        [&](double s) { return s <= t ? model.hazard(age + s) : 0.0; },
        numerics::QuadratureSpec{1e-12, 1e-15, t, 25});
}

}  // namespace

TEST(Hazard, ModalAge) {
    const MortalityModel model(f1970);
    EXPECT_NEAR(force_of_mortality(model, f1970.m), 1.0 / 10.5098, 1e-15);
    EXPECT_NEAR(force_of_mortality(model, f1970.m), 0.095150, 1e-6);
}

TEST(Hazard, OneDispersionPastMode) {
    const MortalityModel model(f1970);
    EXPECT_NEAR(force_of_mortality(model, f1970.m + f1970.varsigma), std::exp(1.0) / f1970.varsigma, 1e-14);
}

TEST(Hazard, Female2004AtSixtyFive) {
    const MortalityModel model(f2004);
    EXPECT_NEAR(force_of_mortality(model, 65.0), (1.0 / 9.3216) * std::exp((65.0 - 89.7615) / 9.3216), 1e-15);
}

TEST(Hazard, NegativeAgeRejected) {
    EXPECT_THROW(force_of_mortality(MortalityModel(f1970), -1.0), DomainError);
}

TEST(Gompertz, InvalidParameters) {
    EXPECT_THROW(MortalityModel(GompertzParams{85.0, 0.0}), DomainError);
    EXPECT_THROW(MortalityModel(GompertzParams{-1.0, 10.0}), DomainError);
    EXPECT_THROW(MortalityModel(ConstantHazard{-0.1}), DomainError);
}

TEST(Survival, ZeroElapsed) {
    EXPECT_EQ(survival_probability(MortalityModel(f1970), 50.0, 0.0), 1.0);
    EXPECT_EQ(survival_probability(MortalityModel(ConstantHazard{0.2}), 50.0, 0.0), 1.0);
}

TEST(Survival, MatchesHazardQuadrature) {
    const MortalityModel model(f1970);
    EXPECT_NEAR(survival_probability(model, 35.0, 30.0), std::exp(-hazard_integral(model, 35.0, 30.0)), 1e-10);
}

TEST(Survival, VanishesAfterNinetyYears) {
    for (const auto& law : bundled::laws) {
        const MortalityModel model(law.params);
        EXPECT_LT(survival_probability(model, 35.0, 90.0), 1e-6) << law.label;
    }
}

TEST(Survival, NegativeElapsedRejected) {
    EXPECT_THROW(survival_probability(MortalityModel(f1970), 35.0, -0.5), DomainError);
}

TEST(Survival, SemigroupGompertz) {
    const MortalityModel model(f2004);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    const double chi = 35.0;
    for (int k = 0; k < 200; ++k) {
        double a = u(rng), b = u(rng), c = u(rng);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const double lhs = survival_probability(model, chi + a, b - a) * survival_probability(model, chi + b, c - b);
        EXPECT_NEAR(lhs, survival_probability(model, chi + a, c - a), 1e-10);
    }
}

TEST(Survival, SemigroupTabularAtKnotsAndBetween) {
    const MortalityModel table(synthesize_table(f1970, 35, 110), "synthetic");
    for (double t : {0.0, 3.0, 7.5}) {
        for (double s : {10.0, 12.25}) {
            for (double u : {20.0, 41.7}) {
                const double lhs =
                    survival_probability(table, 35.0 + t, s - t) * survival_probability(table, 35.0 + s, u - s);
                EXPECT_NEAR(lhs, survival_probability(table, 35.0 + t, u - t), 1e-12);
            }
        }
    }
}

TEST(Survival, TabularMatchesLawAtKnots) {
    const MortalityModel law(f1970);
    const MortalityModel table(synthesize_table(f1970, 35, 110));
    for (int age = 35; age <= 100; age += 5)
        EXPECT_NEAR(survival_probability(table, 35.0, age - 35.0), survival_probability(law, 35.0, age - 35.0),
                    1e-13);
}

TEST(Survival, TabularOutOfRange) {
    const MortalityModel table(synthesize_table(f1970, 35, 110));
    EXPECT_THROW(survival_probability(table, 30.0, 1.0), OutOfRangeError);
    EXPECT_THROW(survival_probability(table, 100.0, 20.0), OutOfRangeError);
    EXPECT_THROW(force_of_mortality(table, 111.0), OutOfRangeError);
}

TEST(Survival, ConstantHazardClosedForm) {
    const MortalityModel model(ConstantHazard{0.03});
    EXPECT_NEAR(survival_probability(model, 40.0, 12.0), std::exp(-0.36), 1e-15);
}

TEST(Density, AtZeroIsHazard) {
    const MortalityModel model(f1970);
    EXPECT_DOUBLE_EQ(death_density(model, 65.0, 0.0), force_of_mortality(model, 65.0));
}

TEST(Density, IntegratesToOne) {
    for (const auto& law : bundled::laws) {
        const MortalityModel model(law.params);
        const double mass = numerics::integrate_semi_infinite([&](double t) { return death_density(model, 35.0, t); },
                                                              numerics::QuadratureSpec{1e-12, 1e-15, 120.0, 20});
        EXPECT_NEAR(mass, 1.0, 1e-8) << law.label;
    }
}

TEST(Table, ParsesAndNormalizes) {
    std::istringstream in("\xEF\xBB\xBF" "age,lx\r\n60,1000\r\n61,990\r\n62,975\r\n");
    const auto table = parse_mortality_table(in);
    EXPECT_EQ(table.base_age(), 60.0);
    ASSERT_EQ(table.rows().size(), 3u);
    EXPECT_DOUBLE_EQ(table.rows()[2].survivors, 0.975);
}

TEST(Table, ExplicitBaseAge) {
    std::istringstream in("age,lx\n60,1000\n61,990\n62,975\n");
    const auto table = parse_mortality_table(in, 61.0);
    EXPECT_DOUBLE_EQ(table.rows()[1].survivors, 1.0);
}

TEST(Table, EmptyFileIsParseError) {
    std::istringstream in("");
    EXPECT_THROW(parse_mortality_table(in), ParseError);
}

TEST(Table, MalformedRowReportsLine) {
    std::istringstream in("age,lx\n60,1000\n61,abc\n");
    try {
        parse_mortality_table(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Table, WrongHeader) {
    std::istringstream in("x,y\n60,1000\n");
    EXPECT_THROW(parse_mortality_table(in), ParseError);
}

TEST(Table, IncreasingSurvivorshipRejected) {
    std::istringstream in("age,lx\n60,1000\n61,1001\n");
    EXPECT_THROW(parse_mortality_table(in), Error);
}

TEST(Table, WriteReadRoundTrip) {
    const auto table = synthesize_table(f2004, 35, 60, 100000.0);
    std::stringstream io;
    write_mortality_table(io, table);
    const auto back = parse_mortality_table(io);
    ASSERT_EQ(back.rows().size(), table.rows().size());
    for (std::size_t i = 0; i < back.rows().size(); ++i)
        EXPECT_NEAR(back.rows()[i].survivors, table.rows()[i].survivors, 1e-15);
}

TEST(Fit, RoundTripAllBundledLaws) {
    for (const auto& law : bundled::laws) {
        const auto fitted = fit_gompertz(synthesize_table(law.params, 35, 110), 35.0);
        EXPECT_NEAR(fitted.m, law.params.m, 1e-3) << law.label;
        EXPECT_NEAR(fitted.varsigma, law.params.varsigma, 1e-3) << law.label;
    }
}

TEST(Fit, RelativeWeightingRoundTrip) {
    FitOptions options;
    options.weighting = FitWeighting::relative;
    const auto fitted = fit_gompertz(synthesize_table(f1970, 35, 110), 35.0, options);
    EXPECT_NEAR(fitted.m, f1970.m, 1e-3);
    EXPECT_NEAR(fitted.varsigma, f1970.varsigma, 1e-3);
}

TEST(Fit, InvariantToRadix) {
    const auto a = fit_gompertz(synthesize_table(f2004, 35, 110, 1.0), 35.0);
    const auto b = fit_gompertz(synthesize_table(f2004, 35, 110, 100000.0), 35.0);
    EXPECT_NEAR(a.m, b.m, 1e-6);
    EXPECT_NEAR(a.varsigma, b.varsigma, 1e-6);
}

TEST(Fit, BundledFemale1970File) {
    const auto table = read_mortality_table(std::string(GAO_DEFAULT_DATA_DIR) + "/ON-female-1970.csv");
    const auto fitted = fit_gompertz(table, 35.0);
    EXPECT_NEAR(fitted.m, 85.3758, 1e-3);
    EXPECT_NEAR(fitted.varsigma, 10.5098, 1e-3);
}

TEST(Fit, SinglePostBaseRow) {
    const MortalityTable table(35.0, {{35.0, 1.0}, {36.0, 0.99}});
    EXPECT_THROW(fit_gompertz(table, 35.0), FittingError);
}

TEST(Fit, ConstantSurvivorship) {
    std::vector<TableRow> rows;
    for (int a = 35; a <= 60; ++a) rows.push_back({double(a), 1000.0});
    EXPECT_THROW(fit_gompertz(MortalityTable(35.0, rows), 35.0), FittingError);
}

TEST(Bundled, Lookup) {
    ASSERT_TRUE(bundled::find("ON-female-2004").has_value());
    EXPECT_NEAR(bundled::find("ON-female-2004")->gompertz()->m, 89.7615, 0.0);
    EXPECT_FALSE(bundled::find("nope").has_value());
}
