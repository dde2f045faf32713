#include "ppcheck/dsl.hpp"

#include "ppcheck/stats.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ppc;
using test::grouped;
using test::vec;
using test::y_only;

namespace {

Dataset radon_schema() {
    return Dataset("radon",
                   {Column::integer("floor", vec({0, 1, 0, 1, 0, 1})),
                    Column::real("uppm", vec({0.2, 0.5, 0.9, 1.3, 1.7, 1.9})),
                    Column::categorical("soil", {"clay", "loam", "sand", "clay", "loam", "clay"}),
                    Column::real("radon", vec({1.0, 2.0, 1.5, 2.5, 1.2, 2.2}))},
                   "radon");
}

// Random spec generator over the full grammar, for round-trip properties.
struct SpecGen {
    std::mt19937 gen;
    explicit SpecGen(unsigned seed) : gen(seed) {}

    int pick(int n) { return static_cast<int>(gen() % static_cast<unsigned>(n)); }

    Literal literal() {
        switch (pick(3)) {
            case 0: return Literal{static_cast<double>(pick(7)) - 2.0};
            case 1: return Literal{std::string(pick(2) ? "clay" : "loam")};
            default: return Literal{pick(2) == 0};
        }
    }

    PredicateAtom atom() {
        switch (pick(3)) {
            case 0: {
                static constexpr CmpOp ops[] = {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt,
                                                CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
                return CmpAtom{"x" + std::to_string(pick(3)), ops[pick(6)],
                               Literal{static_cast<double>(pick(9)) / 2.0 - 2.0}};
            }
            case 1: {
                InSetAtom a;
                a.column = "c" + std::to_string(pick(2));
                a.labels.push_back("clay");
                if (pick(2)) a.labels.push_back("loam");
                return a;
            }
            default: {
                const int k = 2 + pick(3);
                return QuantileBinAtom{"x" + std::to_string(pick(3)), k, pick(k)};
            }
        }
    }

    ExprPtr aggregate() {
        AggExpr a;
        static constexpr AggKind kinds[] = {
            AggKind::Mean,     AggKind::Variance,       AggKind::Std,
            AggKind::Min,      AggKind::Max,            AggKind::Range,
            AggKind::Quantile, AggKind::Count,          AggKind::Skewness,
            AggKind::ExcessKurtosis, AggKind::DispersionRatio, AggKind::ProportionOutside,
        };
        a.kind = kinds[pick(12)];
        if (a.kind == AggKind::Quantile) a.q = 0.05 + 0.9 * (pick(19) / 19.0);
        if (a.kind == AggKind::ProportionOutside) {
            a.lo = static_cast<double>(pick(5)) - 4.0;
            a.hi = a.lo + pick(6);
        }
        if (pick(2)) {
            Predicate p;
            const int n_atoms = 1 + pick(2);
            for (int i = 0; i < n_atoms; ++i) p.atoms.push_back(atom());
            a.slice = std::move(p);
        }
        return make_agg(std::move(a));
    }

    ExprPtr expr(int depth) {
        if (depth >= 4 || pick(3) == 0) return aggregate();
        static constexpr CombineOp ops[] = {CombineOp::Sub, CombineOp::AbsSub, CombineOp::Ratio};
        return make_combine(ops[pick(3)], expr(depth + 1), expr(depth + 1));
    }

    StatisticSpec spec() { return StatisticSpec{expr(1)}; }
};

} // namespace

TEST_CASE("parses the sliced std difference from the radon listing") {
    const auto spec = parse_spec("std(where floor == 0) - std(where floor == 1)");
    REQUIRE(spec.depth() == 2);
    const auto& combine = std::get<CombineExpr>(spec.root->value);
    CHECK(combine.op == CombineOp::Sub);
    const auto& lhs = std::get<AggExpr>(combine.lhs->value);
    const auto& rhs = std::get<AggExpr>(combine.rhs->value);
    CHECK(lhs.kind == AggKind::Std);
    CHECK(rhs.kind == AggKind::Std);
    REQUIRE(lhs.slice.has_value());
    const auto& atom = std::get<CmpAtom>(lhs.slice->atoms.at(0));
    CHECK(atom.column == "floor");
    CHECK(atom.op == CmpOp::Eq);
    CHECK(std::get<double>(atom.value) == 0.0);
}

TEST_CASE("smallest program and canonical prints") {
    const auto spec = parse_spec("mean()");
    const auto& agg = std::get<AggExpr>(spec.root->value);
    CHECK(agg.kind == AggKind::Mean);
    CHECK(!agg.slice.has_value());
    CHECK(print_spec(spec) == "mean()");
    CHECK(print_spec(parse_spec("excess_kurtosis()")) == "excess_kurtosis()");
    CHECK(print_spec(parse_spec("mean() - std() - variance()")) ==
          "((mean() - std()) - variance())");
    CHECK(print_spec(parse_spec("quantile(0.25, where uppm > 1)")) ==
          "quantile(0.25, where uppm > 1)");
    CHECK(print_spec(parse_spec("abs(mean() - mean(where floor == 1))")) ==
          "abs(mean() - mean(where floor == 1))");
}

TEST_CASE("parse errors") {
    CHECK_ERRC(parse_spec("bogus()"), Errc::SyntaxError);
    CHECK_ERRC(parse_spec("mean("), Errc::SyntaxError);
    CHECK_ERRC(parse_spec("mean() +"), Errc::SyntaxError);
    CHECK_ERRC(parse_spec("mean() mean()"), Errc::SyntaxError);
    CHECK_ERRC(parse_spec("quantile(1.5)"), Errc::InvalidParameter);
    CHECK_ERRC(parse_spec("quantile(0.5, where x in quantile_bin(3, 4))"),
               Errc::BinIndexOutOfRange);
    CHECK_ERRC(parse_spec("variance(where uppm in quantile_bin(3, 4)) / mean()"),
               Errc::BinIndexOutOfRange);
    CHECK_ERRC(parse_spec("proportion_outside(5, 1)"), Errc::InvalidParameter);
    // syntax errors carry a position
    try {
        parse_spec("mean() - ???");
        FAIL("expected a syntax error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("offset 9") != std::string::npos);
    }
}

TEST_CASE("depth guard rejects degenerate nesting") {
    std::string text = "mean()";
    for (int i = 0; i < 7; ++i) text = "(" + text + " - mean())";
    CHECK(parse_spec(text).depth() == 8);
    CHECK_ERRC(parse_spec("(" + text + " - mean())"), Errc::DepthExceeded);
}

TEST_CASE("parse-print-parse is the identity over a generated corpus") {
    SpecGen gen(20240518);
    for (int i = 0; i < 200; ++i) {
        const StatisticSpec spec = gen.spec();
        const std::string text = print_spec(spec);
        const StatisticSpec reparsed = parse_spec(text);
        CHECK(reparsed == spec);
        CHECK(print_spec(reparsed) == text);
    }
}

TEST_CASE("json AST round-trips and matches the documented shape") {
    const auto spec = parse_spec("std(where floor == 0) - std(where floor == 1)");
    const auto doc = spec_to_json(spec);
    CHECK(doc["op"] == "sub");
    CHECK(doc["lhs"]["agg"] == "std");
    CHECK(doc["lhs"]["where"][0]["col"] == "floor");
    CHECK(doc["lhs"]["where"][0]["op"] == "==");
    CHECK(doc["lhs"]["where"][0]["value"] == 0.0);
    CHECK(spec_from_json(doc) == spec);

    SpecGen gen(77);
    for (int i = 0; i < 100; ++i) {
        const StatisticSpec s = gen.spec();
        CHECK(spec_from_json(spec_to_json(s)) == s);
    }
}

TEST_CASE("schema validation") {
    const Dataset d = radon_schema();
    CHECK_NOTHROW(parse_spec("std(where floor == 0) - std(where floor == 1)", d));
    CHECK_ERRC(parse_spec("mean(where soil2 == \"clay\")", d), Errc::UnknownColumn);
    CHECK_ERRC(parse_spec("mean(where radon > 1)", d), Errc::TargetInPredicate);
    CHECK_ERRC(parse_spec("mean(where soil > 1)", d), Errc::TypeMismatch);
    CHECK_ERRC(parse_spec("mean(where soil == 1)", d), Errc::TypeMismatch);
    CHECK_ERRC(parse_spec("mean(where floor == \"a\")", d), Errc::TypeMismatch);
    CHECK_ERRC(parse_spec("mean(where floor in {\"a\"})", d), Errc::TypeMismatch);
    CHECK_ERRC(parse_spec("mean(where soil in quantile_bin(3, 1))", d), Errc::TypeMismatch);
}

TEST_CASE("evaluates the hand-computed sliced std difference") {
    // slices {1,3} and {1,3}: population std 1.0 each, difference 0
    const Dataset d = grouped(vec({0, 0, 1, 1}), vec({1, 3, 1, 3}));
    const auto spec = parse_spec("std(where g == 0) - std(where g == 1)");
    CHECK(evaluate(spec, d, d.target_values()) == doctest::Approx(0.0).epsilon(1e-15));

    // unequal slice spreads: std {0,4} = 2, std {1,2} = 0.5
    const Dataset d2 = grouped(vec({0, 0, 1, 1}), vec({0, 4, 1, 2}));
    CHECK(evaluate(spec, d2, d2.target_values()) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("dispersion ratio conventions through the DSL") {
    const Dataset d = y_only(vec({2, 2, 2, 2}));
    CHECK(evaluate(parse_spec("dispersion_ratio()"), d, d.target_values()) == 0.0);
    const Dataset zero_mean = y_only(vec({-1, 1, -2, 2}));
    CHECK(std::isinf(
        evaluate(parse_spec("dispersion_ratio()"), zero_mean, zero_mean.target_values())));
}

TEST_CASE("empty slice on the observed data rejects the spec") {
    const Dataset d = grouped(vec({1, 1, 1, 1}), vec({1, 2, 3, 4}));
    CHECK_ERRC(validate_spec(parse_spec("mean(where g == 0)"), d), Errc::EmptySlice);
    CHECK_NOTHROW(validate_spec(parse_spec("mean(where g == 1)"), d));
}

TEST_CASE("slices come from the dataset, never from y") {
    // rows matching g==0 stay fixed even when y changes drastically
    const Dataset d = grouped(vec({0, 0, 1, 1}), vec({5, 5, 100, 100}));
    const auto bound = BoundStatistic::bind(parse_spec("mean(where g == 0)"), d);
    CHECK(bound.evaluate(vec({1, 2, 3, 4})) == doctest::Approx(1.5));
    CHECK(bound.evaluate(vec({100, 200, 0, 0})) == doctest::Approx(150.0));
}

TEST_CASE("quantile-bin edges are fixed by the observed column") {
    Eigen::VectorXd x(9), y(9);
    for (int i = 0; i < 9; ++i) {
        x[i] = i + 1; // 1..9: tertile edges at 3.666 and 6.333
        y[i] = 10.0 * (i + 1);
    }
    Dataset d("d", {Column::real("x", x), Column::real("y", y)}, "y");
    const auto bound = BoundStatistic::bind(parse_spec("count(where x in quantile_bin(3, 0))"), d);
    CHECK(bound.evaluate(d.target_values()) == 3.0);
    // same row set regardless of the target vector under evaluation
    CHECK(bound.evaluate(Eigen::VectorXd::Zero(9)) == 3.0);
    const auto top = BoundStatistic::bind(parse_spec("count(where x in quantile_bin(3, 2))"), d);
    CHECK(top.evaluate(d.target_values()) == 3.0);
}

TEST_CASE("slice additivity: counts over a categorical partition sum to n_rows") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(gen() % 40);
        std::vector<std::string> labels(static_cast<std::size_t>(n));
        static const char* pool[] = {"a", "b", "c"};
        for (auto& l : labels) l = pool[gen() % 3];
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = static_cast<double>(gen() % 100);
        Dataset d("d", {Column::categorical("c", labels), Column::real("y", y)}, "y");
        double total = 0;
        for (const char* l : pool) {
            const auto spec = parse_spec(std::string("count(where c == \"") + l + "\")");
            try {
                total += evaluate(spec, d, d.target_values());
            } catch (const Error& e) {
                CHECK(e.code() == Errc::EmptySlice); // label absent in this draw
            }
        }
        CHECK(total == static_cast<double>(n));
    }
}

TEST_CASE("evaluation is deterministic and pure") {
    const Dataset d = radon_schema();
    const auto spec = parse_spec("variance(where uppm in quantile_bin(3, 2)) / variance()");
    const double a = evaluate(spec, d, d.target_values());
    const double b = evaluate(spec, d, d.target_values());
    CHECK(a == b);
}

TEST_CASE("combine guards never let NaN escape") {
    const Dataset d = y_only(vec({-1, 1})); // mean 0 -> dispersion_ratio +inf
    CHECK_ERRC(
        evaluate(parse_spec("dispersion_ratio() - dispersion_ratio()"), d, d.target_values()),
        Errc::IndeterminateForm);
    CHECK_ERRC(
        evaluate(parse_spec("dispersion_ratio() / dispersion_ratio()"), d, d.target_values()),
        Errc::IndeterminateForm);
    CHECK_ERRC(evaluate(parse_spec("mean() / mean()"), d, d.target_values()),
               Errc::DivisionByZero);
    // finite - inf is a legitimate extended real
    CHECK(std::isinf(evaluate(parse_spec("mean() - dispersion_ratio()"), d, d.target_values())));
}

TEST_CASE("validate forwards evaluation errors as rejection reasons") {
    const Dataset d = y_only(vec({3, 3, 3, 3}));
    CHECK_ERRC(validate_spec(parse_spec("skewness()"), d), Errc::DegenerateMoment);
}
