#pragma once

#include "ppcheck/dataset.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ppc {

// A test statistic is a small declarative program over the dataset: slice
// rows by feature predicates, aggregate the target over the slice, optionally
// combine two aggregates. Grammar (full EBNF in docs/dsl.md):
//
//   expr      := operand { ("-" | "/") operand }
//   operand   := "(" expr ")" | "abs" "(" expr "-" expr ")" | aggregate
//   aggregate := kind "(" [numbers] [[","] "where" atom {"and" atom}] ")"
//   atom      := column cmp literal
//              | column "in" "{" label {"," label} "}"
//              | column "in" "quantile_bin" "(" k "," index ")"
//
// Predicates read feature columns only, never the target, so slice row sets
// are fixed across replicates.

enum class AggKind {
    Mean,
    Variance,
    Std,
    Min,
    Max,
    Range,
    Quantile,
    Count,
    Skewness,
    ExcessKurtosis,
    DispersionRatio,
    ProportionOutside,
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class CombineOp { Sub, AbsSub, Ratio };

std::string_view agg_kind_name(AggKind k);
std::string_view cmp_op_name(CmpOp op);

using Literal = std::variant<double, std::string, bool>;

struct CmpAtom {
    std::string column;
    CmpOp op = CmpOp::Eq;
    Literal value;
    bool operator==(const CmpAtom&) const = default;
};

struct InSetAtom {
    std::string column;
    std::vector<std::string> labels;
    bool operator==(const InSetAtom&) const = default;
};

/// Membership in quantile bin `bin_index` of `k_bins` equally-probable bins.
/// Bin edges come from the observed dataset column and are fixed at bind
/// time, before any replicate is evaluated.
struct QuantileBinAtom {
    std::string column;
    int k_bins = 0;
    int bin_index = 0;
    bool operator==(const QuantileBinAtom&) const = default;
};

using PredicateAtom = std::variant<CmpAtom, InSetAtom, QuantileBinAtom>;

/// Conjunction of atoms.
struct Predicate {
    std::vector<PredicateAtom> atoms;
    bool operator==(const Predicate&) const = default;
};

struct AggExpr {
    AggKind kind = AggKind::Mean;
    double q = 0.0;  // Quantile
    double lo = 0.0; // ProportionOutside
    double hi = 0.0;
    std::optional<Predicate> slice;
    bool operator==(const AggExpr&) const = default;
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct CombineExpr {
    CombineOp op = CombineOp::Sub;
    ExprPtr lhs;
    ExprPtr rhs;
    bool operator==(const CombineExpr& o) const;
};

struct ExprNode {
    std::variant<AggExpr, CombineExpr> value;
    bool operator==(const ExprNode& o) const { return value == o.value; }
};

ExprPtr make_agg(AggExpr agg);
ExprPtr make_combine(CombineOp op, ExprPtr lhs, ExprPtr rhs);

constexpr int kMaxSpecDepth = 8;

/// Parsed test statistic. Sharing immutable nodes keeps copies cheap and
/// concurrent evaluation safe.
struct StatisticSpec {
    ExprPtr root;

    int depth() const;
    bool operator==(const StatisticSpec& o) const;
};

/// Evaluation result domain: finite or +/-inf, never NaN.
using StatisticValue = double;

// parse / print ------------------------------------------------------------

/// Text -> AST. Reports syntax errors with a byte offset. Local semantic
/// checks (quantile range, bin indices, depth) run here; column checks need
/// a schema and run in check_against_schema / bind.
StatisticSpec parse_spec(const std::string& text);
StatisticSpec parse_spec(const std::string& text, const Dataset& schema);

/// Canonical text. parse_spec(print_spec(s)) == s.
std::string print_spec(const StatisticSpec& spec);

nlohmann::ordered_json spec_to_json(const StatisticSpec& spec);
StatisticSpec spec_from_json(const nlohmann::ordered_json& doc);

/// Static checks against a dataset schema: columns exist, predicate literal
/// types match column types, the target never appears in a predicate.
void check_against_schema(const StatisticSpec& spec, const Dataset& d);

// evaluation ----------------------------------------------------------------

/// A spec bound to one dataset: slice row sets and quantile-bin edges are
/// resolved once, then evaluate() is pure arithmetic over any y vector.
/// Empty slices are detected here, so they can never surface mid-replicate.
class BoundStatistic {
  public:
    struct Node; // opaque resolved form

    static BoundStatistic bind(const StatisticSpec& spec, const Dataset& d);

    StatisticValue evaluate(const Eigen::Ref<const Eigen::VectorXd>& y) const;

    const StatisticSpec& spec() const { return spec_; }
    Eigen::Index n_rows() const { return n_rows_; }

  private:
    BoundStatistic(StatisticSpec spec, std::shared_ptr<const Node> root, Eigen::Index n_rows);

    StatisticSpec spec_;
    std::shared_ptr<const Node> root_;
    Eigen::Index n_rows_ = 0;
};

/// One-shot convenience: bind to d and evaluate against y.
StatisticValue evaluate(const StatisticSpec& spec, const Dataset& d,
                        const Eigen::Ref<const Eigen::VectorXd>& y);

/// Dry-run vetting: succeeds iff evaluating the spec on the observed target
/// completes. Failures carry the rejection reason.
void validate_spec(const StatisticSpec& spec, const Dataset& d);

/// A proposal that did not survive parsing/validation, kept for family-size
/// accounting.
struct RejectedSpec {
    std::string text;
    std::string reason;
};

} // namespace ppc
