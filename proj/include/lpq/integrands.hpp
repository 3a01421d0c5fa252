#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lpq/model.hpp"
#include "lpq/polynomial.hpp"

namespace lpq {

class IntegrandSpec;

/// z -> (mu^2 + |z|^2)^{p/2}
struct PowerNorm {
  double mu = 0.0;
  double p = 2.0;
};

/// z -> |z e_axis|^q, the q-th power of the norm of column `axis` (0-based).
struct AxisPower {
  int axis = 0;
  double q = 2.0;
};

/// Even polynomial in the row-major flattened entries of z.
struct EvenPolynomial {
  std::shared_ptr<const Polynomial> poly;
};

struct SumOf {
  std::vector<IntegrandSpec> terms;
};

struct ScaledBy {
  double coeff = 1.0;
  std::shared_ptr<const IntegrandSpec> inner;
};

/// Tagged-union description of an autonomous integrand F(z).
class IntegrandSpec {
 public:
  using Node = std::variant<PowerNorm, AxisPower, EvenPolynomial, SumOf, ScaledBy>;

  static IntegrandSpec power(double mu, double p);
  static IntegrandSpec axis(int axis, double q);
  /// Throws Errc::not_even if any odd-degree component is nonzero.
  static IntegrandSpec polynomial(Polynomial poly);
  static IntegrandSpec sum(std::vector<IntegrandSpec> terms);
  static IntegrandSpec scaled(double coeff, IntegrandSpec inner);

  const Node& node() const { return node_; }
  std::string describe() const;

  /// Smallest / largest growth exponent over the leaves (polynomials count
  /// their lowest nonconstant and top degrees).
  double lower_exponent() const;
  double upper_exponent() const;

  /// Throws Errc::shape_mismatch if F cannot be evaluated on N x n inputs.
  void check_shape(int rows, int cols) const;

 private:
  explicit IntegrandSpec(Node node) : node_(std::move(node)) {}
  Node node_;
};

IntegrandSpec operator+(const IntegrandSpec& a, const IntegrandSpec& b);
IntegrandSpec operator*(double coeff, const IntegrandSpec& f);

/// Value, flat gradient (length N*n, row-major) and flat hessian.
struct Derivs {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// order 0: value only; 1: + gradient; 2: + hessian.
Derivs evaluate(const IntegrandSpec& f, const GradMat& z, int order);

double ell_mu(double mu, const GradMat& z);
GradMat v_map(double mu, double gamma, const GradMat& z);

double eval(const IntegrandSpec& f, const GradMat& z);
GradMat gradient(const IntegrandSpec& f, const GradMat& z);
/// Hessian as a symmetric (N*n) x (N*n) matrix in row-major flat coordinates.
Eigen::MatrixXd hessian(const IntegrandSpec& f, const GradMat& z);

struct FdCheck {
  double grad_err = 0.0;
  double hess_err = 0.0;
};

/// Max-norm gap between analytic derivatives and central differences.
FdCheck fd_check(const IntegrandSpec& f, const GradMat& z, double h);

struct MoserWeight {
  Regime regime;
  double alpha = -1.0;
};

struct MoserWeightValue {
  double L = 0.0;
  double l_alpha = 0.0;
  /// d_s l_alpha = grad_factor * <z, d_s z>
  double grad_factor = 0.0;
};

MoserWeightValue moser_weight_eval(const MoserWeight& w, const GradMat& z);

/// Built-in example integrand with its registered structural constant.
struct BuiltinExample {
  std::string name;
  IntegrandSpec integrand;
  Regime regime;
};

const std::vector<BuiltinExample>& builtin_examples();
const BuiltinExample& builtin_example(const std::string& name);

/// |z|^2 + sum_i z_i^4 in n variables as an even polynomial.
Polynomial marcellini_polynomial(int n, int q);

}  // namespace lpq
