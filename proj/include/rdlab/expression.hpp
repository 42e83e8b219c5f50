#pragma once

// Closed-form fields in one variable x:
//   numbers, pi, e, x, + - * / ^ (right associative), unary minus,
//   sin cos exp sqrt log tanh abs.

#include <boost/spirit/home/x3.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace rdlab {

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(std::string msg, std::size_t column)
      : std::runtime_error(std::move(msg)), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class Expression {
 public:
  using Fn = std::function<double(double)>;

  Expression() = default;
  Expression(std::string source, Fn fn, bool varying)
      : source_(std::move(source)), fn_(std::move(fn)), varying_(varying) {}

  double operator()(double x) const { return fn_(x); }
  const std::string& source() const { return source_; }
  /// false when the expression does not mention x.
  bool depends_on_x() const { return varying_; }
  Fn function() const { return fn_; }

 private:
  std::string source_;
  Fn fn_ = [](double) { return 0.0; };
  bool varying_ = false;
};

namespace detail::expr {

namespace x3 = boost::spirit::x3;

struct Node {
  Expression::Fn f = [](double) { return 0.0; };
  bool varying = false;
};

inline Node binary(const Node& a, const Node& b, double (*op)(double, double)) {
  return {[fa = a.f, fb = b.f, op](double x) { return op(fa(x), fb(x)); }, a.varying || b.varying};
}

inline Node unary(const Node& a, double (*op)(double)) {
  return {[fa = a.f, op](double x) { return op(fa(x)); }, a.varying};
}

inline double add(double a, double b) { return a + b; }
inline double sub(double a, double b) { return a - b; }
inline double mul(double a, double b) { return a * b; }
inline double divide(double a, double b) { return a / b; }
inline double power(double a, double b) { return std::pow(a, b); }
inline double negate(double a) { return -a; }

inline double f_sin(double a) { return std::sin(a); }
inline double f_cos(double a) { return std::cos(a); }
inline double f_exp(double a) { return std::exp(a); }
inline double f_sqrt(double a) { return std::sqrt(a); }
inline double f_log(double a) { return std::log(a); }
inline double f_tanh(double a) { return std::tanh(a); }
inline double f_abs(double a) { return std::abs(a); }

inline Node constant(double c) {
  return {[c](double) { return c; }, false};
}

struct expr_class;
struct term_class;
struct factor_class;
struct power_class;
struct primary_class;

const x3::rule<expr_class, Node> expression = "expression";
const x3::rule<term_class, Node> term = "term";
const x3::rule<factor_class, Node> factor = "factor";
const x3::rule<power_class, Node> power_rule = "power";
const x3::rule<primary_class, Node> primary = "primary";

const auto keyword = [](const char* k) { return x3::lexeme[x3::lit(k) >> !(x3::alnum | '_')]; };

const auto set_val = [](auto& ctx) { x3::_val(ctx) = x3::_attr(ctx); };
template <double (*Op)(double, double)>
const auto fold = [](auto& ctx) { x3::_val(ctx) = binary(x3::_val(ctx), x3::_attr(ctx), Op); };
template <double (*Op)(double)>
const auto apply = [](auto& ctx) { x3::_val(ctx) = unary(x3::_attr(ctx), Op); };

const auto number = x3::double_[([](auto& ctx) { x3::_val(ctx) = constant(x3::_attr(ctx)); })];
const auto variable = keyword("x")[([](auto& ctx) {
  x3::_val(ctx) = Node{[](double x) { return x; }, true};
})];
const auto named_constant =
    keyword("pi")[([](auto& ctx) { x3::_val(ctx) = constant(std::numbers::pi); })] |
    keyword("e")[([](auto& ctx) { x3::_val(ctx) = constant(std::numbers::e); })];

template <double (*Op)(double)>
auto call(const char* name) {
  return (keyword(name) >> '(' >> expression >> ')')[apply<Op>];
}

const auto term_def = factor[set_val] >> *(('*' >> factor)[fold<mul>] | ('/' >> factor)[fold<divide>]);

const auto expression_def =
    term[set_val] >> *(('+' >> term)[fold<add>] | ('-' >> term)[fold<sub>]);
const auto factor_def = ('-' >> factor)[apply<negate>] | ('+' >> factor)[set_val] | power_rule[set_val];
const auto power_rule_def = primary[set_val] >> -('^' >> factor)[fold<power>];
const auto primary_def = call<f_sin>("sin") | call<f_cos>("cos") | call<f_exp>("exp") |
                         call<f_sqrt>("sqrt") | call<f_log>("log") | call<f_tanh>("tanh") |
                         call<f_abs>("abs") | named_constant | variable | number |
                         ('(' >> expression >> ')')[set_val];

BOOST_SPIRIT_DEFINE(expression, term, factor, power_rule, primary)

}  // namespace detail::expr

/// Parses an expression in x; throws ExpressionError with the failing column (1-based).
inline Expression parse_expression(const std::string& text) {
  namespace x3 = boost::spirit::x3;
  auto first = text.begin();
  const auto last = text.end();
  detail::expr::Node node;
  bool ok = false;
  try {
    ok = x3::phrase_parse(first, last, detail::expr::expression, x3::space, node);
  } catch (const x3::expectation_failure<std::string::const_iterator>& e) {
    first = e.where();
    ok = false;
  }
  if (text.find_first_not_of(" \t") == std::string::npos)
    throw ExpressionError("empty expression", 1);
  if (!ok || first != last) {
    const auto col = static_cast<std::size_t>(first - text.begin()) + 1;
    throw ExpressionError("cannot parse '" + text + "' at column " + std::to_string(col), col);
  }
  return Expression(text, std::move(node.f), node.varying);
}

}  // namespace rdlab
