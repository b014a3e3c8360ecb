#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hheat/domain.hpp"

namespace hheat::cli {

/// Compiled arithmetic expression in x1, x2, x3 with + - * / ^, parentheses
/// and sin, cos, exp, sqrt.
class Expression {
 public:
  explicit Expression(const std::string& text);
  double operator()(double x1, double x2, double x3) const;
  const std::string& text() const { return text_; }

  struct Node {
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt } op = Op::Const;
    double value = 0.0;
    int lhs = -1, rhs = -1;  // operand node indices; Var stores the axis in lhs
  };

 private:
  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Omega = {F < 0} from expression strings for F, its gradient and Hessian.
class ExpressionDomain final : public ImplicitDomain {
 public:
  ExpressionDomain(const std::string& f, const std::vector<std::string>& grad,
                   const std::vector<std::string>& hess, const Box& box, const Vec3& periods);
  double value(const HPoint& p) const override;
  Vec3 gradient(const HPoint& p) const override;
  Mat3 hessian(const HPoint& p) const override;
  Box bbox() const override { return box_; }
  std::string name() const override { return "custom"; }
  Vec3 periods() const override { return periods_; }

 private:
  Expression f_;
  std::vector<Expression> grad_;
  std::vector<Expression> hess_;  // row-major 3x3
  Box box_;
  Vec3 periods_;
};

/// Compares the gradient and Hessian strings against finite differences at
/// n random bbox points. Throws ValidationError naming the first failing point.
void validate_derivatives(const ImplicitDomain& dom, int n_points = 100, double rel_tol = 1e-5,
                          std::uint64_t seed = 1);

struct RunConfig {
  std::map<std::string, std::string> domain;  // [domain] section, "name" selects the catalog entry
  std::vector<double> t_grid{0.0025, 0.005, 0.01, 0.02, 0.04};
  int n_paths = 10000;
  int n_steps = 64;
  int n_substeps = 8;
  std::optional<double> shell_eps;  // empty selects the automatic width
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
  int quadrature_level = 3;
  int surface_nodes = 8;
  double delta = 0.0;  // event window for diag, <= 0 uses the shell width
  std::string heat_csv;
  std::string filter;
  bool timing = true;
};

/// Reads an INI file with [domain] and [run] sections. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Parses "a,b,c" into reals. Throws ConfigError.
std::vector<double> parse_list(const std::string& text);

/// Checks the RunConfig invariants for the given command. Throws ConfigError.
void check_config(const RunConfig& cfg, const std::string& command);

DomainPtr make_domain(const std::map<std::string, std::string>& spec);

/// Fixed 17-significant-digit formatting, independent of locale.
std::string format_number(double v);

struct HeatRow {
  double t = 0.0, q_hat = 0.0, std_err = 0.0;
};

/// Reads t, q_hat and std_err columns. Throws SchemaError naming a missing column.
std::vector<HeatRow> read_heat_csv(const std::filesystem::path& path);

/// Runs one command and writes its CSV and manifest into cfg.output_dir.
/// Returns the process exit code: 0 ok, 2 validation, 3 numerical, 4 config.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace hheat::cli
