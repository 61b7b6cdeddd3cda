#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace geocaustic {

/// Value with first and second derivative in one variable.
struct Jet {
    double v = 0.0, d = 0.0, dd = 0.0;

    static Jet constant(double c) { return {c, 0.0, 0.0}; }
    static Jet variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d, -a.dd}; }
inline Jet operator*(Jet a, Jet b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
inline Jet operator/(Jet a, Jet b) {
    const double q = a.v / b.v;
    const double qd = (a.d - q * b.d) / b.v;
    const double qdd = (a.dd - 2.0 * qd * b.d - q * b.dd) / b.v;
    return {q, qd, qdd};
}
/// Chain rule with f(x), f'(x), f''(x) at x = a.v.
inline Jet chain(Jet a, double f, double f1, double f2) {
    return {f, f1 * a.d, f2 * a.d * a.d + f1 * a.dd};
}

/// Arithmetic expression over named variables: + - * / ^, unary minus, parentheses,
/// sin cos tan exp log sqrt cosh sinh, constants pi and e.
class Expression {
public:
    /// Throws Error(ErrorKind::Parse) with the offending column.
    static Expression parse(const std::string& text);

    double eval(const std::map<std::string, double>& vars) const;
    /// Evaluates with `var` as the differentiation variable at `x`.
    Jet eval_jet(const std::string& var, double x) const;

    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace geocaustic
