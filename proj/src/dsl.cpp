#include "ppcheck/dsl.hpp"

#include "ppcheck/stats.hpp"
#include "ppcheck/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

std::string_view agg_kind_name(AggKind k) {
    switch (k) {
        case AggKind::Mean: return "mean";
        case AggKind::Variance: return "variance";
        case AggKind::Std: return "std";
        case AggKind::Min: return "min";
        case AggKind::Max: return "max";
        case AggKind::Range: return "range";
        case AggKind::Quantile: return "quantile";
        case AggKind::Count: return "count";
        case AggKind::Skewness: return "skewness";
        case AggKind::ExcessKurtosis: return "excess_kurtosis";
        case AggKind::DispersionRatio: return "dispersion_ratio";
        case AggKind::ProportionOutside: return "proportion_outside";
    }
    return "?";
}

std::string_view cmp_op_name(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

namespace {

std::optional<AggKind> agg_kind_from_name(std::string_view s) {
    static constexpr AggKind kAll[] = {
        AggKind::Mean,     AggKind::Variance,       AggKind::Std,
        AggKind::Min,      AggKind::Max,            AggKind::Range,
        AggKind::Quantile, AggKind::Count,          AggKind::Skewness,
        AggKind::ExcessKurtosis, AggKind::DispersionRatio, AggKind::ProportionOutside,
    };
    for (AggKind k : kAll)
        if (agg_kind_name(k) == s) return k;
    return std::nullopt;
}

int agg_param_count(AggKind k) {
    if (k == AggKind::Quantile) return 1;
    if (k == AggKind::ProportionOutside) return 2;
    return 0;
}

void check_agg_params(const AggExpr& a) {
    if (a.kind == AggKind::Quantile && !(a.q > 0.0 && a.q < 1.0))
        raise(Errc::InvalidParameter, "quantile q must lie in (0,1), got " + format_double(a.q));
    if (a.kind == AggKind::ProportionOutside && !(a.lo <= a.hi))
        raise(Errc::InvalidParameter, "proportion_outside needs lo <= hi");
}

void check_quantile_bin(const QuantileBinAtom& a) {
    if (a.k_bins < 2)
        raise(Errc::InvalidParameter,
              "quantile_bin needs at least 2 bins, got " + std::to_string(a.k_bins));
    if (a.bin_index < 0 || a.bin_index >= a.k_bins)
        raise(Errc::BinIndexOutOfRange, "bin " + std::to_string(a.bin_index) + " of " +
                                            std::to_string(a.k_bins) + " bins");
}

int node_depth(const ExprPtr& e) {
    if (std::holds_alternative<AggExpr>(e->value)) return 1;
    const auto& c = std::get<CombineExpr>(e->value);
    return 1 + std::max(node_depth(c.lhs), node_depth(c.rhs));
}

void check_depth(const ExprPtr& root) {
    if (node_depth(root) > kMaxSpecDepth)
        raise(Errc::DepthExceeded, "statistic nests deeper than " + std::to_string(kMaxSpecDepth));
}

} // namespace

bool CombineExpr::operator==(const CombineExpr& o) const {
    return op == o.op && *lhs == *o.lhs && *rhs == *o.rhs;
}

ExprPtr make_agg(AggExpr agg) {
    check_agg_params(agg);
    if (agg.slice)
        for (const auto& atom : agg.slice->atoms)
            if (const auto* qb = std::get_if<QuantileBinAtom>(&atom)) check_quantile_bin(*qb);
    return std::make_shared<const ExprNode>(ExprNode{std::move(agg)});
}

ExprPtr make_combine(CombineOp op, ExprPtr lhs, ExprPtr rhs) {
    auto node = std::make_shared<const ExprNode>(ExprNode{CombineExpr{op, std::move(lhs), std::move(rhs)}});
    check_depth(node);
    return node;
}

int StatisticSpec::depth() const { return root ? node_depth(root) : 0; }

bool StatisticSpec::operator==(const StatisticSpec& o) const {
    if (!root || !o.root) return root == o.root;
    return *root == *o.root;
}

// --- parser -----------------------------------------------------------------

namespace {

enum class Tok {
    End,
    Ident,
    Number,
    String,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Minus,
    Slash,
    Cmp, // ==, !=, <, <=, >, >=
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    CmpOp cmp = CmpOp::Eq;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& what) const {
        raise(Errc::SyntaxError, what + " at offset " + std::to_string(cur_.pos));
    }

  private:
    void advance() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        cur_ = Token{};
        cur_.pos = i_;
        if (i_ >= src_.size()) {
            cur_.kind = Tok::End;
            return;
        }
        const char c = src_[i_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            cur_.kind = Tok::Ident;
            cur_.text = src_.substr(i_, j - i_);
            i_ = j;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_ + 1])))) {
            char* end = nullptr;
            cur_.number = std::strtod(src_.c_str() + i_, &end);
            cur_.kind = Tok::Number;
            cur_.text = src_.substr(i_, static_cast<std::size_t>(end - (src_.c_str() + i_)));
            i_ = static_cast<std::size_t>(end - src_.c_str());
            return;
        }
        if (c == '"') {
            std::string out;
            std::size_t j = i_ + 1;
            while (j < src_.size() && src_[j] != '"') {
                if (src_[j] == '\\' && j + 1 < src_.size()) {
                    out += src_[j + 1];
                    j += 2;
                } else {
                    out += src_[j];
                    ++j;
                }
            }
            if (j >= src_.size())
                raise(Errc::SyntaxError, "unterminated string at offset " + std::to_string(i_));
            cur_.kind = Tok::String;
            cur_.text = std::move(out);
            i_ = j + 1;
            return;
        }
        auto two = [&](char a, char b) {
            return c == a && i_ + 1 < src_.size() && src_[i_ + 1] == b;
        };
        if (two('=', '=')) { cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Eq; i_ += 2; return; }
        if (two('!', '=')) { cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Ne; i_ += 2; return; }
        if (two('<', '=')) { cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Le; i_ += 2; return; }
        if (two('>', '=')) { cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Ge; i_ += 2; return; }
        switch (c) {
            case '<': cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Lt; ++i_; return;
            case '>': cur_.kind = Tok::Cmp; cur_.cmp = CmpOp::Gt; ++i_; return;
            case '(': cur_.kind = Tok::LParen; ++i_; return;
            case ')': cur_.kind = Tok::RParen; ++i_; return;
            case '{': cur_.kind = Tok::LBrace; ++i_; return;
            case '}': cur_.kind = Tok::RBrace; ++i_; return;
            case ',': cur_.kind = Tok::Comma; ++i_; return;
            case '-': cur_.kind = Tok::Minus; ++i_; return;
            case '/': cur_.kind = Tok::Slash; ++i_; return;
            default:
                raise(Errc::SyntaxError,
                      std::string("unexpected character '") + c + "' at offset " + std::to_string(i_));
        }
    }

    const std::string& src_;
    std::size_t i_ = 0;
    Token cur_;
};

class Parser {
  public:
    explicit Parser(const std::string& src) : lex_(src) {}

    StatisticSpec parse() {
        ExprPtr e = parse_expr();
        if (lex_.peek().kind != Tok::End) lex_.fail("trailing input");
        check_depth(e);
        return StatisticSpec{std::move(e)};
    }

  private:
    ExprPtr parse_expr() {
        ExprPtr lhs = parse_operand();
        for (;;) {
            const Tok k = lex_.peek().kind;
            if (k == Tok::Minus) {
                lex_.take();
                lhs = make_combine(CombineOp::Sub, std::move(lhs), parse_operand());
            } else if (k == Tok::Slash) {
                lex_.take();
                lhs = make_combine(CombineOp::Ratio, std::move(lhs), parse_operand());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_operand() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::LParen) {
            lex_.take();
            ExprPtr inner = parse_expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (t.kind == Tok::Ident && t.text == "abs") {
            lex_.take();
            expect(Tok::LParen, "'(' after abs");
            ExprPtr lhs = parse_expr_no_top_minus();
            expect(Tok::Minus, "'-' inside abs(...)");
            ExprPtr rhs = parse_expr_no_top_minus();
            expect(Tok::RParen, "')'");
            return make_combine(CombineOp::AbsSub, std::move(lhs), std::move(rhs));
        }
        if (t.kind == Tok::Ident) return parse_agg();
        lex_.fail("expected an aggregate, 'abs', or '('");
    }

    // Inside abs(a - b) the top-level '-' belongs to abs itself; ratios and
    // parenthesized subtractions still parse normally.
    ExprPtr parse_expr_no_top_minus() {
        ExprPtr lhs = parse_operand();
        while (lex_.peek().kind == Tok::Slash) {
            lex_.take();
            lhs = make_combine(CombineOp::Ratio, std::move(lhs), parse_operand());
        }
        return lhs;
    }

    ExprPtr parse_agg() {
        Token name = lex_.take();
        auto kind = agg_kind_from_name(name.text);
        if (!kind)
            raise(Errc::SyntaxError, "unknown aggregate '" + name.text + "' at offset " +
                                         std::to_string(name.pos));
        expect(Tok::LParen, "'('");
        AggExpr agg;
        agg.kind = *kind;
        const int nparams = agg_param_count(*kind);
        std::vector<double> params;
        for (int p = 0; p < nparams; ++p) {
            if (p > 0) expect(Tok::Comma, "','");
            params.push_back(parse_signed_number());
        }
        if (*kind == AggKind::Quantile) agg.q = params[0];
        if (*kind == AggKind::ProportionOutside) {
            agg.lo = params[0];
            agg.hi = params[1];
        }
        if (nparams > 0 && lex_.peek().kind == Tok::Comma) lex_.take(); // before 'where'
        if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "where") {
            lex_.take();
            agg.slice = parse_predicate();
        }
        expect(Tok::RParen, "')'");
        return make_agg(std::move(agg));
    }

    Predicate parse_predicate() {
        Predicate pred;
        pred.atoms.push_back(parse_atom());
        while (lex_.peek().kind == Tok::Ident && lex_.peek().text == "and") {
            lex_.take();
            pred.atoms.push_back(parse_atom());
        }
        return pred;
    }

    PredicateAtom parse_atom() {
        Token col = lex_.take();
        if (col.kind != Tok::Ident) lex_.fail("expected a column name");
        const Token& t = lex_.peek();
        if (t.kind == Tok::Cmp) {
            CmpOp op = lex_.take().cmp;
            return CmpAtom{col.text, op, parse_literal()};
        }
        if (t.kind == Tok::Ident && t.text == "in") {
            lex_.take();
            if (lex_.peek().kind == Tok::LBrace) {
                lex_.take();
                InSetAtom atom;
                atom.column = col.text;
                atom.labels.push_back(parse_label());
                while (lex_.peek().kind == Tok::Comma) {
                    lex_.take();
                    atom.labels.push_back(parse_label());
                }
                expect(Tok::RBrace, "'}'");
                return atom;
            }
            if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "quantile_bin") {
                lex_.take();
                expect(Tok::LParen, "'('");
                const int k = parse_int("bin count");
                expect(Tok::Comma, "','");
                const int idx = parse_int("bin index");
                expect(Tok::RParen, "')'");
                QuantileBinAtom atom{col.text, k, idx};
                check_quantile_bin(atom);
                return atom;
            }
            lex_.fail("expected '{' or 'quantile_bin' after 'in'");
        }
        lex_.fail("expected a comparison or 'in'");
    }

    Literal parse_literal() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Number || t.kind == Tok::Minus) return Literal{parse_signed_number()};
        if (t.kind == Tok::String) return Literal{lex_.take().text};
        if (t.kind == Tok::Ident && (t.text == "true" || t.text == "false"))
            return Literal{lex_.take().text == "true"};
        lex_.fail("expected a number, string, or boolean literal");
    }

    std::string parse_label() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::String) return lex_.take().text;
        lex_.fail("expected a quoted label");
    }

    double parse_signed_number() {
        bool neg = false;
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            neg = true;
        }
        if (lex_.peek().kind != Tok::Number) lex_.fail("expected a number");
        double v = lex_.take().number;
        return neg ? -v : v;
    }

    int parse_int(const std::string& what) {
        double v = parse_signed_number();
        if (v != std::floor(v) || std::abs(v) > 1e9) lex_.fail(what + " must be an integer");
        return static_cast<int>(v);
    }

    void expect(Tok kind, const std::string& what) {
        if (lex_.peek().kind != kind) lex_.fail("expected " + what);
        lex_.take();
    }

    Lexer lex_;
};

} // namespace

StatisticSpec parse_spec(const std::string& text) { return Parser(text).parse(); }

StatisticSpec parse_spec(const std::string& text, const Dataset& schema) {
    StatisticSpec spec = parse_spec(text);
    check_against_schema(spec, schema);
    return spec;
}

// --- printer ----------------------------------------------------------------

namespace {

std::string print_literal(const Literal& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    const auto& s = std::get<std::string>(v);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

std::string print_atom(const PredicateAtom& atom) {
    if (const auto* c = std::get_if<CmpAtom>(&atom))
        return c->column + " " + std::string(cmp_op_name(c->op)) + " " + print_literal(c->value);
    if (const auto* s = std::get_if<InSetAtom>(&atom)) {
        std::string out = s->column + " in {";
        for (std::size_t i = 0; i < s->labels.size(); ++i) {
            if (i) out += ", ";
            out += print_literal(Literal{s->labels[i]});
        }
        return out + "}";
    }
    const auto& q = std::get<QuantileBinAtom>(atom);
    return q.column + " in quantile_bin(" + std::to_string(q.k_bins) + ", " +
           std::to_string(q.bin_index) + ")";
}

std::string print_expr(const ExprPtr& e) {
    if (const auto* agg = std::get_if<AggExpr>(&e->value)) {
        std::string out(agg_kind_name(agg->kind));
        out += '(';
        bool have_params = false;
        if (agg->kind == AggKind::Quantile) {
            out += format_double(agg->q);
            have_params = true;
        } else if (agg->kind == AggKind::ProportionOutside) {
            out += format_double(agg->lo) + ", " + format_double(agg->hi);
            have_params = true;
        }
        if (agg->slice) {
            if (have_params) out += ", ";
            out += "where ";
            for (std::size_t i = 0; i < agg->slice->atoms.size(); ++i) {
                if (i) out += " and ";
                out += print_atom(agg->slice->atoms[i]);
            }
        }
        out += ')';
        return out;
    }
    const auto& c = std::get<CombineExpr>(e->value);
    switch (c.op) {
        case CombineOp::Sub: return "(" + print_expr(c.lhs) + " - " + print_expr(c.rhs) + ")";
        case CombineOp::Ratio: return "(" + print_expr(c.lhs) + " / " + print_expr(c.rhs) + ")";
        case CombineOp::AbsSub: return "abs(" + print_expr(c.lhs) + " - " + print_expr(c.rhs) + ")";
    }
    return {};
}

} // namespace

std::string print_spec(const StatisticSpec& spec) {
    if (!spec.root) raise(Errc::InvalidParameter, "empty statistic");
    return print_expr(spec.root);
}

// --- json AST ----------------------------------------------------------------

namespace {

json literal_to_json(const Literal& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    return std::get<std::string>(v);
}

Literal literal_from_json(const json& j) {
    if (j.is_boolean()) return Literal{j.get<bool>()};
    if (j.is_number()) return Literal{j.get<double>()};
    if (j.is_string()) return Literal{j.get<std::string>()};
    raise(Errc::SyntaxError, "predicate literal must be a number, string, or boolean");
}

json expr_to_json(const ExprPtr& e) {
    if (const auto* agg = std::get_if<AggExpr>(&e->value)) {
        ordered_json out;
        out["agg"] = std::string(agg_kind_name(agg->kind));
        if (agg->kind == AggKind::Quantile) out["q"] = agg->q;
        if (agg->kind == AggKind::ProportionOutside) {
            out["lo"] = agg->lo;
            out["hi"] = agg->hi;
        }
        if (agg->slice) {
            json atoms = json::array();
            for (const auto& atom : agg->slice->atoms) {
                ordered_json ja;
                if (const auto* c = std::get_if<CmpAtom>(&atom)) {
                    ja["col"] = c->column;
                    ja["op"] = std::string(cmp_op_name(c->op));
                    ja["value"] = literal_to_json(c->value);
                } else if (const auto* s = std::get_if<InSetAtom>(&atom)) {
                    ja["col"] = s->column;
                    ja["op"] = "in";
                    ja["values"] = s->labels;
                } else {
                    const auto& q = std::get<QuantileBinAtom>(atom);
                    ja["col"] = q.column;
                    ja["op"] = "quantile_bin";
                    ja["k_bins"] = q.k_bins;
                    ja["bin_index"] = q.bin_index;
                }
                atoms.push_back(std::move(ja));
            }
            out["where"] = std::move(atoms);
        }
        return out;
    }
    const auto& c = std::get<CombineExpr>(e->value);
    ordered_json out;
    out["op"] = c.op == CombineOp::Sub ? "sub" : (c.op == CombineOp::Ratio ? "ratio" : "abs_sub");
    out["lhs"] = expr_to_json(c.lhs);
    out["rhs"] = expr_to_json(c.rhs);
    return out;
}

ExprPtr expr_from_json(const json& j) {
    if (!j.is_object()) raise(Errc::SyntaxError, "statistic node must be an object");
    if (j.contains("op") && !j.contains("agg")) {
        const std::string op = j.at("op").get<std::string>();
        CombineOp cop;
        if (op == "sub") cop = CombineOp::Sub;
        else if (op == "abs_sub") cop = CombineOp::AbsSub;
        else if (op == "ratio") cop = CombineOp::Ratio;
        else raise(Errc::SyntaxError, "unknown combine op '" + op + "'");
        return make_combine(cop, expr_from_json(j.at("lhs")), expr_from_json(j.at("rhs")));
    }
    const std::string name = j.value("agg", "");
    auto kind = agg_kind_from_name(name);
    if (!kind) raise(Errc::SyntaxError, "unknown aggregate '" + name + "'");
    AggExpr agg;
    agg.kind = *kind;
    if (agg.kind == AggKind::Quantile) agg.q = j.value("q", 0.0);
    if (agg.kind == AggKind::ProportionOutside) {
        agg.lo = j.value("lo", 0.0);
        agg.hi = j.value("hi", 0.0);
    }
    if (j.contains("where")) {
        Predicate pred;
        for (const auto& ja : j.at("where")) {
            const std::string col = ja.at("col").get<std::string>();
            const std::string op = ja.at("op").get<std::string>();
            if (op == "in") {
                InSetAtom atom;
                atom.column = col;
                for (const auto& l : ja.at("values")) atom.labels.push_back(l.get<std::string>());
                pred.atoms.push_back(std::move(atom));
            } else if (op == "quantile_bin") {
                pred.atoms.push_back(QuantileBinAtom{col, ja.at("k_bins").get<int>(),
                                                     ja.at("bin_index").get<int>()});
            } else {
                CmpOp cmp;
                if (op == "==") cmp = CmpOp::Eq;
                else if (op == "!=") cmp = CmpOp::Ne;
                else if (op == "<") cmp = CmpOp::Lt;
                else if (op == "<=") cmp = CmpOp::Le;
                else if (op == ">") cmp = CmpOp::Gt;
                else if (op == ">=") cmp = CmpOp::Ge;
                else raise(Errc::SyntaxError, "unknown predicate op '" + op + "'");
                pred.atoms.push_back(CmpAtom{col, cmp, literal_from_json(ja.at("value"))});
            }
        }
        agg.slice = std::move(pred);
    }
    return make_agg(std::move(agg));
}

} // namespace

nlohmann::ordered_json spec_to_json(const StatisticSpec& spec) { return expr_to_json(spec.root); }

StatisticSpec spec_from_json(const nlohmann::ordered_json& doc) {
    ExprPtr root = expr_from_json(doc);
    check_depth(root);
    return StatisticSpec{std::move(root)};
}

// --- schema checks -------------------------------------------------------------

namespace {

void check_atom_schema(const PredicateAtom& atom, const Dataset& d) {
    const std::string* col_name = nullptr;
    if (const auto* c = std::get_if<CmpAtom>(&atom)) col_name = &c->column;
    else if (const auto* s = std::get_if<InSetAtom>(&atom)) col_name = &s->column;
    else col_name = &std::get<QuantileBinAtom>(atom).column;

    const Column* col = d.find(*col_name);
    if (col == nullptr) raise(Errc::UnknownColumn, "column '" + *col_name + "'");
    if (*col_name == d.target())
        raise(Errc::TargetInPredicate, "predicates may not read the target column '" +
                                           *col_name + "'");

    if (const auto* c = std::get_if<CmpAtom>(&atom)) {
        const bool ordering = c->op != CmpOp::Eq && c->op != CmpOp::Ne;
        switch (col->type) {
            case ColumnType::Real:
            case ColumnType::Integer:
                if (!std::holds_alternative<double>(c->value))
                    raise(Errc::TypeMismatch,
                          "numeric column '" + *col_name + "' compared with a non-numeric literal");
                break;
            case ColumnType::Categorical:
                if (ordering)
                    raise(Errc::TypeMismatch,
                          "categorical column '" + *col_name + "' has no ordering");
                if (!std::holds_alternative<std::string>(c->value))
                    raise(Errc::TypeMismatch,
                          "categorical column '" + *col_name + "' compared with a non-string literal");
                break;
            case ColumnType::Boolean:
                if (ordering)
                    raise(Errc::TypeMismatch, "boolean column '" + *col_name + "' has no ordering");
                if (!std::holds_alternative<bool>(c->value))
                    raise(Errc::TypeMismatch,
                          "boolean column '" + *col_name + "' compared with a non-boolean literal");
                break;
        }
    } else if (std::holds_alternative<InSetAtom>(atom)) {
        if (col->type != ColumnType::Categorical)
            raise(Errc::TypeMismatch, "'in {...}' needs a categorical column, '" + *col_name +
                                          "' is " + std::string(column_type_name(col->type)));
    } else {
        if (!col->is_numeric())
            raise(Errc::TypeMismatch, "quantile_bin needs a numeric column, '" + *col_name +
                                          "' is " + std::string(column_type_name(col->type)));
    }
}

void check_expr_schema(const ExprPtr& e, const Dataset& d) {
    if (const auto* agg = std::get_if<AggExpr>(&e->value)) {
        if (agg->slice)
            for (const auto& atom : agg->slice->atoms) check_atom_schema(atom, d);
        return;
    }
    const auto& c = std::get<CombineExpr>(e->value);
    check_expr_schema(c.lhs, d);
    check_expr_schema(c.rhs, d);
}

} // namespace

void check_against_schema(const StatisticSpec& spec, const Dataset& d) {
    check_depth(spec.root);
    check_expr_schema(spec.root, d);
}

// --- bind + evaluate -------------------------------------------------------------

struct BoundStatistic::Node {
    // exactly one of the two shapes is active
    bool is_agg = true;
    // aggregate
    AggKind kind = AggKind::Mean;
    double q = 0.0, lo = 0.0, hi = 0.0;
    bool whole = true;
    std::vector<Eigen::Index> rows;
    // combine
    CombineOp op = CombineOp::Sub;
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

std::vector<double> quantile_bin_edges(const Eigen::VectorXd& column, int k_bins) {
    std::vector<double> edges;
    edges.reserve(static_cast<std::size_t>(k_bins) - 1);
    for (int j = 1; j < k_bins; ++j)
        edges.push_back(stats::quantile(column, static_cast<double>(j) / k_bins));
    return edges;
}

void apply_atom(const PredicateAtom& atom, const Dataset& d, std::vector<char>& keep) {
    const auto n = d.n_rows();
    if (const auto* c = std::get_if<CmpAtom>(&atom)) {
        const Column& col = d.column(c->column);
        if (col.is_numeric()) {
            const double lit = std::get<double>(c->value);
            for (Eigen::Index r = 0; r < n; ++r) {
                const double v = col.values[r];
                bool ok = false;
                switch (c->op) {
                    case CmpOp::Eq: ok = v == lit; break;
                    case CmpOp::Ne: ok = v != lit; break;
                    case CmpOp::Lt: ok = v < lit; break;
                    case CmpOp::Le: ok = v <= lit; break;
                    case CmpOp::Gt: ok = v > lit; break;
                    case CmpOp::Ge: ok = v >= lit; break;
                }
                if (!ok) keep[static_cast<std::size_t>(r)] = 0;
            }
        } else if (col.type == ColumnType::Categorical) {
            const auto code = col.code_of(std::get<std::string>(c->value));
            for (Eigen::Index r = 0; r < n; ++r) {
                const bool match = code && col.codes[static_cast<std::size_t>(r)] == *code;
                const bool ok = (c->op == CmpOp::Eq) ? match : !match;
                if (!ok) keep[static_cast<std::size_t>(r)] = 0;
            }
        } else {
            const bool lit = std::get<bool>(c->value);
            for (Eigen::Index r = 0; r < n; ++r) {
                const bool v = col.flags[static_cast<std::size_t>(r)] != 0;
                const bool ok = (c->op == CmpOp::Eq) ? v == lit : v != lit;
                if (!ok) keep[static_cast<std::size_t>(r)] = 0;
            }
        }
    } else if (const auto* s = std::get_if<InSetAtom>(&atom)) {
        const Column& col = d.column(s->column);
        std::vector<char> member(col.labels.size(), 0);
        for (const auto& label : s->labels)
            if (auto code = col.code_of(label)) member[static_cast<std::size_t>(*code)] = 1;
        for (Eigen::Index r = 0; r < n; ++r)
            if (!member[static_cast<std::size_t>(col.codes[static_cast<std::size_t>(r)])])
                keep[static_cast<std::size_t>(r)] = 0;
    } else {
        const auto& qb = std::get<QuantileBinAtom>(atom);
        const Column& col = d.column(qb.column);
        const auto edges = quantile_bin_edges(col.values, qb.k_bins);
        const int i = qb.bin_index;
        for (Eigen::Index r = 0; r < n; ++r) {
            const double v = col.values[r];
            const bool in_bin = (i == 0 || v >= edges[static_cast<std::size_t>(i - 1)]) &&
                                (i == qb.k_bins - 1 || v < edges[static_cast<std::size_t>(i)]);
            if (!in_bin) keep[static_cast<std::size_t>(r)] = 0;
        }
    }
}

std::shared_ptr<const BoundStatistic::Node> bind_expr(const ExprPtr& e, const Dataset& d) {
    auto node = std::make_shared<BoundStatistic::Node>();
    if (const auto* agg = std::get_if<AggExpr>(&e->value)) {
        node->is_agg = true;
        node->kind = agg->kind;
        node->q = agg->q;
        node->lo = agg->lo;
        node->hi = agg->hi;
        if (!agg->slice) {
            node->whole = true;
        } else {
            node->whole = false;
            std::vector<char> keep(static_cast<std::size_t>(d.n_rows()), 1);
            for (const auto& atom : agg->slice->atoms) apply_atom(atom, d, keep);
            for (Eigen::Index r = 0; r < d.n_rows(); ++r)
                if (keep[static_cast<std::size_t>(r)]) node->rows.push_back(r);
            if (node->rows.empty())
                raise(Errc::EmptySlice, "predicate of '" + print_expr(e) + "' matches zero rows");
        }
    } else {
        const auto& c = std::get<CombineExpr>(e->value);
        node->is_agg = false;
        node->op = c.op;
        node->lhs = bind_expr(c.lhs, d);
        node->rhs = bind_expr(c.rhs, d);
    }
    return node;
}

double dispatch_agg(const BoundStatistic::Node& node, const Eigen::Ref<const Eigen::VectorXd>& v) {
    switch (node.kind) {
        case AggKind::Mean: return stats::mean(v);
        case AggKind::Variance: return stats::variance(v);
        case AggKind::Std: return stats::stddev(v);
        case AggKind::Min: return stats::min(v);
        case AggKind::Max: return stats::max(v);
        case AggKind::Range: return stats::range(v);
        case AggKind::Quantile: return stats::quantile(v, node.q);
        case AggKind::Count: return static_cast<double>(v.size());
        case AggKind::Skewness: return stats::skewness(v);
        case AggKind::ExcessKurtosis: return stats::excess_kurtosis(v);
        case AggKind::DispersionRatio: return stats::dispersion_ratio(v);
        case AggKind::ProportionOutside: return stats::proportion_outside(v, node.lo, node.hi);
    }
    raise(Errc::InvalidParameter, "unreachable aggregate kind");
}

double eval_agg(const BoundStatistic::Node& node, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (node.whole) return dispatch_agg(node, y);
    Eigen::VectorXd scratch(static_cast<Eigen::Index>(node.rows.size()));
    for (std::size_t i = 0; i < node.rows.size(); ++i)
        scratch[static_cast<Eigen::Index>(i)] = y[node.rows[i]];
    return dispatch_agg(node, scratch);
}

double combine_values(CombineOp op, double l, double r) {
    switch (op) {
        case CombineOp::Sub:
        case CombineOp::AbsSub: {
            if (std::isinf(l) && std::isinf(r) && l == r)
                raise(Errc::IndeterminateForm, "inf - inf");
            const double v = l - r;
            return op == CombineOp::AbsSub ? std::abs(v) : v;
        }
        case CombineOp::Ratio: {
            if (r == 0.0) raise(Errc::DivisionByZero, "statistic denominator is zero");
            if (std::isinf(l) && std::isinf(r)) raise(Errc::IndeterminateForm, "inf / inf");
            return l / r;
        }
    }
    raise(Errc::InvalidParameter, "unreachable combine op");
}

double eval_node(const BoundStatistic::Node& node, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (node.is_agg) return eval_agg(node, y);
    return combine_values(node.op, eval_node(*node.lhs, y), eval_node(*node.rhs, y));
}

} // namespace

BoundStatistic::BoundStatistic(StatisticSpec spec, std::shared_ptr<const Node> root,
                               Eigen::Index n_rows)
    : spec_(std::move(spec)), root_(std::move(root)), n_rows_(n_rows) {}

BoundStatistic BoundStatistic::bind(const StatisticSpec& spec, const Dataset& d) {
    check_against_schema(spec, d);
    return BoundStatistic(spec, bind_expr(spec.root, d), d.n_rows());
}

StatisticValue BoundStatistic::evaluate(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (y.size() != n_rows_)
        raise(Errc::AlignmentError, "target vector has length " + std::to_string(y.size()) +
                                        ", statistic is bound to " + std::to_string(n_rows_) +
                                        " rows");
    const double v = eval_node(*root_, y);
    if (std::isnan(v)) raise(Errc::IndeterminateForm, "statistic evaluated to NaN");
    return v;
}

StatisticValue evaluate(const StatisticSpec& spec, const Dataset& d,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
    return BoundStatistic::bind(spec, d).evaluate(y);
}

void validate_spec(const StatisticSpec& spec, const Dataset& d) {
    BoundStatistic bound = BoundStatistic::bind(spec, d);
    bound.evaluate(d.target_values());
}

} // namespace ppc
