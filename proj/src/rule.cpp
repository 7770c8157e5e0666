#include "xpomcp/rule.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "xpomcp/errors.hpp"

namespace xpomcp {

const char* op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "==";
    }
    return "?";
}

namespace {

struct Token {
    enum Kind { Ident, Number, Integer, Punct, End } kind = End;
    std::string text;
    double number = 0.0;
    int line = 1, column = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                col_ = 1;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++pos_;
            } else if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        current_ = Token{};
        current_.line = line_;
        current_.column = col_;
        if (pos_ >= text_.size()) {
            current_.kind = Token::End;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_'))
                ++pos_;
            current_.kind = Token::Ident;
            current_.text = text_.substr(start, pos_ - start);
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = pos_;
            bool is_float = false;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.')) {
                is_float |= text_[pos_] == '.';
                ++pos_;
            }
            current_.kind = is_float ? Token::Number : Token::Integer;
            current_.text = text_.substr(start, pos_ - start);
            current_.number = std::stod(current_.text);
        } else {
            static const char* two[] = {">=", "<=", "==", "||", "&&"};
            current_.kind = Token::Punct;
            for (const char* op : two) {
                if (text_.compare(pos_, 2, op) == 0) {
                    current_.text = op;
                    pos_ += 2;
                    break;
                }
            }
            if (current_.text.empty()) {
                current_.text = std::string(1, c);
                ++pos_;
            }
        }
        col_ += static_cast<int>(current_.text.size());
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token current_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    RuleTemplate parse() {
        RuleTemplate tmpl;
        while (lex_.peek().kind == Token::Ident && lex_.peek().text == "rule")
            tmpl.rules.push_back(parse_rule());
        if (tmpl.rules.empty()) fail("expected at least one 'rule' block");
        if (lex_.peek().kind == Token::Ident && lex_.peek().text == "where")
            parse_where(tmpl);
        if (lex_.peek().kind != Token::End) fail("unexpected trailing input");
        check_free_vars(tmpl);
        return tmpl;
    }

private:
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("rule template: " + msg, lex_.peek().line,
                         lex_.peek().column);
    }

    void expect_punct(const std::string& p) {
        if (lex_.peek().kind != Token::Punct || lex_.peek().text != p)
            fail("expected '" + p + "'");
        lex_.next();
    }

    void expect_keyword(const std::string& k) {
        if (lex_.peek().kind != Token::Ident || lex_.peek().text != k)
            fail("expected '" + k + "'");
        lex_.next();
    }

    std::string expect_ident() {
        if (lex_.peek().kind != Token::Ident) fail("expected identifier");
        return lex_.next().text;
    }

    ActionRule parse_rule() {
        expect_keyword("rule");
        ActionRule rule;
        rule.name = expect_ident();
        expect_punct("{");
        expect_keyword("action");
        expect_punct(":");
        if (lex_.peek().kind != Token::Integer) fail("expected action index");
        rule.action = static_cast<int>(lex_.next().number);
        expect_keyword("when");
        expect_punct(":");
        rule.body = parse_disjunction();
        expect_punct("}");
        return rule;
    }

    std::vector<Subformula> parse_disjunction() {
        std::vector<Subformula> body;
        body.push_back(parse_term());
        while (lex_.peek().kind == Token::Punct && lex_.peek().text == "||") {
            lex_.next();
            body.push_back(parse_term());
        }
        return body;
    }

    Subformula parse_term() {
        Subformula sub;
        if (lex_.peek().kind == Token::Punct && lex_.peek().text == "(") {
            lex_.next();
            sub.literals.push_back(parse_literal());
            while (lex_.peek().kind == Token::Punct && lex_.peek().text == "&&") {
                lex_.next();
                sub.literals.push_back(parse_literal());
            }
            expect_punct(")");
        } else {
            sub.literals.push_back(parse_literal());
            while (lex_.peek().kind == Token::Punct && lex_.peek().text == "&&") {
                lex_.next();
                sub.literals.push_back(parse_literal());
            }
        }
        return sub;
    }

    CmpOp parse_op(bool allow_eq) {
        if (lex_.peek().kind != Token::Punct) fail("expected comparison operator");
        const std::string op = lex_.next().text;
        if (op == "<") return CmpOp::Lt;
        if (op == ">") return CmpOp::Gt;
        if (op == "<=") return CmpOp::Le;
        if (op == ">=") return CmpOp::Ge;
        if (op == "==" && allow_eq) return CmpOp::Eq;
        fail("unknown operator '" + op + "'");
    }

    Literal parse_literal() {
        Literal lit;
        lit.prob_var = expect_ident();
        lit.op = parse_op(/*allow_eq=*/false);
        if (lex_.peek().kind == Token::Ident) {
            lit.rhs = lex_.next().text;
        } else if (lex_.peek().kind == Token::Number ||
                   lex_.peek().kind == Token::Integer) {
            const double c = lex_.next().number;
            if (c < 0.0 || c > 1.0)
                fail("constant " + std::to_string(c) +
                     " outside [0,1]: thresholds are probabilities");
            lit.rhs = c;
        } else {
            fail("expected free variable or constant");
        }
        return lit;
    }

    void parse_where(RuleTemplate& tmpl) {
        expect_keyword("where");
        expect_punct("{");
        while (!(lex_.peek().kind == Token::Punct && lex_.peek().text == "}")) {
            HardConstraint hc;
            hc.lhs = expect_ident();
            hc.op = parse_op(/*allow_eq=*/true);
            if (lex_.peek().kind == Token::Ident) {
                if (hc.op != CmpOp::Eq)
                    fail("only equality is allowed between two free variables");
                hc.rhs = lex_.next().text;
            } else if (lex_.peek().kind == Token::Number ||
                       lex_.peek().kind == Token::Integer) {
                const double c = lex_.next().number;
                if (c < 0.0 || c > 1.0) fail("constraint constant outside [0,1]");
                hc.rhs = c;
            } else {
                fail("expected free variable or constant");
            }
            tmpl.constraints.push_back(std::move(hc));
            if (lex_.peek().kind == Token::Punct && lex_.peek().text == ";")
                lex_.next();
            else
                break;
        }
        expect_punct("}");
    }

    void check_free_vars(const RuleTemplate& tmpl) {
        std::set<std::string> seen;
        for (const ActionRule& rule : tmpl.rules)
            for (const Subformula& sub : rule.body)
                for (const Literal& lit : sub.literals)
                    if (auto* var = std::get_if<std::string>(&lit.rhs)) {
                        if (!seen.insert(*var).second)
                            fail("duplicate free variable '" + *var +
                                 "' (use a where-equality to couple literals)");
                    }
        for (const HardConstraint& hc : tmpl.constraints) {
            if (!seen.count(hc.lhs))
                fail("where-constraint references undeclared free variable '" +
                     hc.lhs + "'");
            if (auto* var = std::get_if<std::string>(&hc.rhs))
                if (!seen.count(*var))
                    fail("where-constraint references undeclared free variable '" +
                         *var + "'");
        }
    }

    Lexer lex_;
};

}  // namespace

RuleTemplate parse_template(const std::string& text) {
    return Parser(text).parse();
}

std::vector<std::string> RuleTemplate::free_variables() const {
    std::vector<std::string> vars;
    for (const ActionRule& rule : rules)
        for (const Subformula& sub : rule.body)
            for (const Literal& lit : sub.literals)
                if (auto* var = std::get_if<std::string>(&lit.rhs))
                    if (std::find(vars.begin(), vars.end(), *var) == vars.end())
                        vars.push_back(*var);
    return vars;
}

std::vector<std::string> RuleTemplate::prob_variables() const {
    std::vector<std::string> vars;
    for (const ActionRule& rule : rules)
        for (const Subformula& sub : rule.body)
            for (const Literal& lit : sub.literals)
                if (std::find(vars.begin(), vars.end(), lit.prob_var) ==
                    vars.end())
                    vars.push_back(lit.prob_var);
    return vars;
}

void validate_against(const RuleTemplate& tmpl,
                      const std::vector<std::string>& belief_names) {
    for (const std::string& var : tmpl.prob_variables())
        if (std::find(belief_names.begin(), belief_names.end(), var) ==
            belief_names.end())
            throw ValidationError("unknown probability variable '" + var +
                                  "': not a trace belief name");
}

namespace {

std::string number_text(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void print_literal(std::ostream& os, const Literal& lit) {
    os << lit.prob_var << " " << op_text(lit.op) << " ";
    if (auto* var = std::get_if<std::string>(&lit.rhs))
        os << *var;
    else
        os << number_text(std::get<double>(lit.rhs));
}

}  // namespace

std::string pretty_print(const RuleTemplate& tmpl) {
    std::ostringstream os;
    for (const ActionRule& rule : tmpl.rules) {
        os << "rule " << rule.name << " { action: " << rule.action << " when: ";
        for (std::size_t i = 0; i < rule.body.size(); ++i) {
            if (i) os << " || ";
            const Subformula& sub = rule.body[i];
            const bool paren = sub.literals.size() > 1 && rule.body.size() > 1;
            if (paren) os << "(";
            for (std::size_t k = 0; k < sub.literals.size(); ++k) {
                if (k) os << " && ";
                print_literal(os, sub.literals[k]);
            }
            if (paren) os << ")";
        }
        os << " }\n";
    }
    if (!tmpl.constraints.empty()) {
        os << "where { ";
        for (const HardConstraint& hc : tmpl.constraints) {
            os << hc.lhs << " " << op_text(hc.op) << " ";
            if (auto* var = std::get_if<std::string>(&hc.rhs))
                os << *var;
            else
                os << number_text(std::get<double>(hc.rhs));
            os << "; ";
        }
        os << "}\n";
    }
    return os.str();
}

std::string pretty_print(const LearnedRule& rule) {
    std::ostringstream os;
    for (const ActionRule& ar : rule.tmpl.rules) {
        os << "select action " << ar.action << " when: ";
        for (std::size_t i = 0; i < ar.body.size(); ++i) {
            if (i) os << " OR ";
            const Subformula& sub = ar.body[i];
            const bool paren = sub.literals.size() > 1 && ar.body.size() > 1;
            if (paren) os << "(";
            for (std::size_t k = 0; k < sub.literals.size(); ++k) {
                if (k) os << " AND ";
                const Literal& lit = sub.literals[k];
                double value;
                if (auto* var = std::get_if<std::string>(&lit.rhs))
                    value = rule.assignment.at(*var);
                else
                    value = std::get<double>(lit.rhs);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%s %s %.3f",
                              lit.prob_var.c_str(), op_text(lit.op), value);
                os << buf;
            }
            if (paren) os << ")";
        }
        os << "\n";
    }
    return os.str();
}

namespace {

bool eval_literal(const Literal& lit, const BeliefProjection& belief,
                  const std::map<std::string, double>& assignment) {
    auto it = belief.find(lit.prob_var);
    if (it == belief.end())
        throw ValidationError("step belief lacks variable '" + lit.prob_var +
                              "'");
    const double p = it->second;
    double rhs;
    if (auto* var = std::get_if<std::string>(&lit.rhs)) {
        auto a = assignment.find(*var);
        if (a == assignment.end())
            throw ValidationError("free variable '" + *var +
                                  "' is not instantiated");
        rhs = a->second;
    } else {
        rhs = std::get<double>(lit.rhs);
    }
    switch (lit.op) {
        case CmpOp::Lt: return p < rhs;
        case CmpOp::Gt: return p > rhs;
        case CmpOp::Le: return p <= rhs;
        case CmpOp::Ge: return p >= rhs;
        case CmpOp::Eq: return p == rhs;
    }
    return false;
}

}  // namespace

bool eval_body(const std::vector<Subformula>& body, const BeliefProjection& belief,
               const std::map<std::string, double>& assignment) {
    for (const Subformula& sub : body) {
        bool all = true;
        for (const Literal& lit : sub.literals)
            all = all && eval_literal(lit, belief, assignment);
        if (all) return true;
    }
    return false;
}

bool evaluate_rule(const LearnedRule& rule, const TraceStep& step) {
    for (const ActionRule& ar : rule.tmpl.rules) {
        const bool body_true = eval_body(ar.body, step.belief, rule.assignment);
        const bool action_taken = (step.action == ar.action);
        if (body_true != action_taken) return false;
    }
    return true;
}

}  // namespace xpomcp
