#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "hheat/cli.hpp"
#include "hheat/errors.hpp"

namespace hheat::cli {

namespace {

using Op = Expression::Node::Op;

class Parser {
 public:
  Parser(const std::string& s, std::vector<Expression::Node>& nodes) : s_(s), nodes_(nodes) {}

  int parse() {
    const int root = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_, 1) + "'");
    return root;
  }

 private:
  int sum() {
    int lhs = product();
    for (;;) {
      if (eat("+")) {
        lhs = add(Op::Add, lhs, product());
      } else if (eat("-") || eat("−")) {
        lhs = add(Op::Sub, lhs, product());
      } else {
        return lhs;
      }
    }
  }

  int product() {
    int lhs = unary();
    for (;;) {
      if (eat("*") || eat("×")) {
        lhs = add(Op::Mul, lhs, unary());
      } else if (eat("/") || eat("÷")) {
        lhs = add(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (eat("-") || eat("−")) return add(Op::Neg, unary(), -1);
    if (eat("+")) return unary();
    return power();
  }

  // Right associative; -x^2 parses as -(x^2).
  int power() {
    const int base = primary();
    if (eat("^")) return add(Op::Pow, base, unary());
    return base;
  }

  int primary() {
    skip();
    if (eat("(")) {
      const int e = sum();
      expect(")");
      return e;
    }
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      Expression::Node n;
      n.value = v;
      return push(n);
    }
    std::string id;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) id += s_[pos_++];
    if (id.empty()) fail(pos_ < s_.size() ? "unexpected '" + s_.substr(pos_, 1) + "'" : "unexpected end");
    if (id == "x1" || id == "x2" || id == "x3") {
      Expression::Node n;
      n.op = Op::Var;
      n.lhs = id[1] - '1';
      return push(n);
    }
    Op f;
    if (id == "sin") {
      f = Op::Sin;
    } else if (id == "cos") {
      f = Op::Cos;
    } else if (id == "exp") {
      f = Op::Exp;
    } else if (id == "sqrt") {
      f = Op::Sqrt;
    } else {
      fail("unknown name '" + id + "'");
    }
    expect("(");
    const int arg = sum();
    expect(")");
    return add(f, arg, -1);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(const std::string& tok) {
    if (!eat(tok)) fail("expected '" + tok + "'");
  }

  int add(Op op, int lhs, int rhs) {
    Expression::Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    return push(n);
  }

  int push(const Expression::Node& n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "' at offset " + std::to_string(pos_) + ": " + what);
  }

  const std::string& s_;
  std::vector<Expression::Node>& nodes_;
  std::size_t pos_ = 0;
};

double eval(const std::vector<Expression::Node>& nodes, int i, const double* x) {
  const auto& n = nodes[static_cast<std::size_t>(i)];
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[n.lhs];
    case Op::Neg: return -eval(nodes, n.lhs, x);
    case Op::Add: return eval(nodes, n.lhs, x) + eval(nodes, n.rhs, x);
    case Op::Sub: return eval(nodes, n.lhs, x) - eval(nodes, n.rhs, x);
    case Op::Mul: return eval(nodes, n.lhs, x) * eval(nodes, n.rhs, x);
    case Op::Div: return eval(nodes, n.lhs, x) / eval(nodes, n.rhs, x);
    case Op::Pow: return std::pow(eval(nodes, n.lhs, x), eval(nodes, n.rhs, x));
    case Op::Sin: return std::sin(eval(nodes, n.lhs, x));
    case Op::Cos: return std::cos(eval(nodes, n.lhs, x));
    case Op::Exp: return std::exp(eval(nodes, n.lhs, x));
    case Op::Sqrt: return std::sqrt(eval(nodes, n.lhs, x));
  }
  return 0.0;
}

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
  root_ = Parser(text_, nodes_).parse();
}

double Expression::operator()(double x1, double x2, double x3) const {
  const double x[3] = {x1, x2, x3};
  return eval(nodes_, root_, x);
}

ExpressionDomain::ExpressionDomain(const std::string& f, const std::vector<std::string>& grad,
                                   const std::vector<std::string>& hess, const Box& box, const Vec3& periods)
    : f_(f), box_(box), periods_(periods) {
  if (grad.size() != 3) throw ConfigError("gradient needs 3 components, got " + std::to_string(grad.size()));
  for (const auto& g : grad) grad_.emplace_back(g);
  // Six entries are the upper triangle h11 h12 h13 h22 h23 h33.
  if (hess.size() == 6) {
    const int idx[9] = {0, 1, 2, 1, 3, 4, 2, 4, 5};
    for (int k : idx) hess_.emplace_back(hess[static_cast<std::size_t>(k)]);
  } else if (hess.size() == 9) {
    for (const auto& h : hess) hess_.emplace_back(h);
  } else {
    throw ConfigError("hessian needs 6 or 9 entries, got " + std::to_string(hess.size()));
  }
  if (!((box.hi.array() > box.lo.array()).all())) throw ConfigError("empty bbox");
}

double ExpressionDomain::value(const HPoint& p) const { return f_(p.x1, p.x2, p.x3); }

Vec3 ExpressionDomain::gradient(const HPoint& p) const {
  return {grad_[0](p.x1, p.x2, p.x3), grad_[1](p.x1, p.x2, p.x3), grad_[2](p.x1, p.x2, p.x3)};
}

Mat3 ExpressionDomain::hessian(const HPoint& p) const {
  Mat3 h;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) h(i, j) = hess_[static_cast<std::size_t>(3 * i + j)](p.x1, p.x2, p.x3);
  }
  return h;
}

void validate_derivatives(const ImplicitDomain& dom, int n_points, double rel_tol, std::uint64_t seed) {
  const Box box = dom.bbox();
  const double h = 1e-3 * box.diameter();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Fourth-order central difference of g along axis k.
  auto diff = [h](const auto& g, Vec3 x, int k) {
    auto at = [&](double s) {
      Vec3 y = x;
      y[k] += s * h;
      return g(HPoint{y[0], y[1], y[2]});
    };
    return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
  };
  for (int i = 0; i < n_points; ++i) {
    Vec3 x;
    for (int k = 0; k < 3; ++k) x[k] = box.lo[k] + u(rng) * (box.hi[k] - box.lo[k]);
    const HPoint p{x[0], x[1], x[2]};
    const Vec3 g = dom.gradient(p);
    const Mat3 hs = dom.hessian(p);
    Vec3 fd_g;
    Mat3 fd_h;
    for (int k = 0; k < 3; ++k) {
      fd_g[k] = diff([&](const HPoint& q) { return dom.value(q); }, x, k);
      for (int j = 0; j < 3; ++j) fd_h(j, k) = diff([&](const HPoint& q) { return dom.gradient(q)[j]; }, x, k);
    }
    const double gerr = (g - fd_g).lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    const double herr = (hs - fd_h).lpNorm<Eigen::Infinity>() / std::max(1.0, hs.lpNorm<Eigen::Infinity>());
    if (gerr > rel_tol || herr > rel_tol || !std::isfinite(gerr) || !std::isfinite(herr)) {
      std::ostringstream os;
      os.precision(17);
      os << (gerr > rel_tol || !std::isfinite(gerr) ? "gradient" : "hessian") << " disagrees with finite differences at ("
         << x[0] << ", " << x[1] << ", " << x[2] << "): relative error "
         << std::max(gerr, herr);
      throw ValidationError(os.str());
    }
  }
}

}  // namespace hheat::cli
