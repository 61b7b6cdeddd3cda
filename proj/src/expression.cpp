#include "geocaustic/expression.hpp"

#include <cctype>
#include <stdexcept>

#include "geocaustic/types.hpp"

namespace geocaustic {

struct Expression::Node {
    enum class Op { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call } op;
    double number = 0.0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, std::vector<NodePtr> args = {}, double number = 0.0, std::string name = {}) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->args = std::move(args);
    n->number = number;
    n->name = std::move(name);
    return n;
}

bool is_function(const std::string& s) {
    return s == "sin" || s == "cos" || s == "tan" || s == "exp" || s == "log" || s == "sqrt" ||
           s == "cosh" || s == "sinh";
}

// Recursive descent: expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | power; power := primary ('^' unary)?
class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::Parse,
                    "expression '" + s_ + "': " + msg + " at column " + std::to_string(pos_ + 1),
                    static_cast<double>(pos_ + 1));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, {lhs, term()});
            else if (accept('-')) lhs = make(Op::Sub, {lhs, term()});
            else return lhs;
        }
    }
    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Op::Div, {lhs, unary()});
            else return lhs;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Op::Pow, {base, unary()});
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (accept('(')) {
            auto n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("malformed number");
            }
            pos_ += used;
            return make(Op::Number, {}, value);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            if (is_function(id)) {
                if (!accept('(')) fail("expected '(' after " + id);
                auto arg = expr();
                if (!accept(')')) fail("expected ')'");
                return make(Op::Call, {arg}, 0.0, id);
            }
            if (id == "pi") return make(Op::Number, {}, kPi);
            if (id == "e") return make(Op::Number, {}, std::exp(1.0));
            return make(Op::Variable, {}, 0.0, id);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

double apply(const std::string& f, double x) {
    if (f == "sin") return std::sin(x);
    if (f == "cos") return std::cos(x);
    if (f == "tan") return std::tan(x);
    if (f == "exp") return std::exp(x);
    if (f == "log") return std::log(x);
    if (f == "sqrt") return std::sqrt(x);
    if (f == "cosh") return std::cosh(x);
    return std::sinh(x);
}

Jet apply(const std::string& f, Jet a) {
    const double x = a.v;
    if (f == "sin") return chain(a, std::sin(x), std::cos(x), -std::sin(x));
    if (f == "cos") return chain(a, std::cos(x), -std::sin(x), -std::cos(x));
    if (f == "tan") {
        const double t = std::tan(x), s2 = 1.0 + t * t;
        return chain(a, t, s2, 2.0 * t * s2);
    }
    if (f == "exp") {
        const double ex = std::exp(x);
        return chain(a, ex, ex, ex);
    }
    if (f == "log") return chain(a, std::log(x), 1.0 / x, -1.0 / (x * x));
    if (f == "sqrt") {
        const double r = std::sqrt(x);
        return chain(a, r, 0.5 / r, -0.25 / (r * x));
    }
    if (f == "cosh") return chain(a, std::cosh(x), std::sinh(x), std::cosh(x));
    return chain(a, std::sinh(x), std::cosh(x), std::sinh(x));
}

Jet power(Jet a, Jet b) {
    // Integer exponents keep negative bases valid.
    if (b.d == 0.0 && b.dd == 0.0) {
        const double n = b.v;
        const double f = std::pow(a.v, n);
        const double f1 = n == 0.0 ? 0.0 : n * std::pow(a.v, n - 1.0);
        const double f2 = (n == 0.0 || n == 1.0) ? 0.0 : n * (n - 1.0) * std::pow(a.v, n - 2.0);
        return chain(a, f, f1, f2);
    }
    return apply("exp", b * apply("log", a));
}

double eval_node(const Expression::Node& n, const std::map<std::string, double>& vars) {
    switch (n.op) {
        case Op::Number: return n.number;
        case Op::Variable: {
            auto it = vars.find(n.name);
            if (it == vars.end())
                throw Error(ErrorKind::Parse, "unknown variable '" + n.name + "'");
            return it->second;
        }
        case Op::Add: return eval_node(*n.args[0], vars) + eval_node(*n.args[1], vars);
        case Op::Sub: return eval_node(*n.args[0], vars) - eval_node(*n.args[1], vars);
        case Op::Mul: return eval_node(*n.args[0], vars) * eval_node(*n.args[1], vars);
        case Op::Div: return eval_node(*n.args[0], vars) / eval_node(*n.args[1], vars);
        case Op::Pow: return std::pow(eval_node(*n.args[0], vars), eval_node(*n.args[1], vars));
        case Op::Neg: return -eval_node(*n.args[0], vars);
        case Op::Call: return apply(n.name, eval_node(*n.args[0], vars));
    }
    return 0.0;
}

Jet eval_jet_node(const Expression::Node& n, const std::string& var, double x) {
    switch (n.op) {
        case Op::Number: return Jet::constant(n.number);
        case Op::Variable:
            if (n.name != var) throw Error(ErrorKind::Parse, "unknown variable '" + n.name + "'");
            return Jet::variable(x);
        case Op::Add: return eval_jet_node(*n.args[0], var, x) + eval_jet_node(*n.args[1], var, x);
        case Op::Sub: return eval_jet_node(*n.args[0], var, x) - eval_jet_node(*n.args[1], var, x);
        case Op::Mul: return eval_jet_node(*n.args[0], var, x) * eval_jet_node(*n.args[1], var, x);
        case Op::Div: return eval_jet_node(*n.args[0], var, x) / eval_jet_node(*n.args[1], var, x);
        case Op::Pow:
            return power(eval_jet_node(*n.args[0], var, x), eval_jet_node(*n.args[1], var, x));
        case Op::Neg: return -eval_jet_node(*n.args[0], var, x);
        case Op::Call: return apply(n.name, eval_jet_node(*n.args[0], var, x));
    }
    return {};
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

double Expression::eval(const std::map<std::string, double>& vars) const {
    return eval_node(*root_, vars);
}

Jet Expression::eval_jet(const std::string& var, double x) const {
    return eval_jet_node(*root_, var, x);
}

}  // namespace geocaustic
