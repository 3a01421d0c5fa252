#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace lpq {

/// Monomial coeff * prod_k x_k^{exponents[k]}.
struct Monomial {
  double coeff = 0.0;
  std::vector<int> exponents;
  int degree() const;
};

inline constexpr int kMaxPolynomialDegree = 10;

/// Homogeneous form of degree s in `dim` variables, stored as a dense
/// symmetric coefficient tensor T with P_s(x) = T[x, ..., x].
class HomogeneousForm {
 public:
  HomogeneousForm(int dim, int degree, std::vector<double> tensor);

  /// Symmetrizes the monomials (all of degree `degree`) into a tensor.
  static HomogeneousForm from_monomials(int dim, int degree, std::span<const Monomial> terms);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  const std::vector<double>& tensor() const { return tensor_; }
  bool is_zero() const;

  double eval(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

  /// Value, gradient and hessian from a single contraction pass.
  void evaluate(const Eigen::VectorXd& x, int order, double& value, Eigen::VectorXd* grad,
                Eigen::MatrixXd* hess) const;

 private:
  int dim_;
  int degree_;
  std::vector<double> tensor_;
};

/// Sum of homogeneous components, at most one per degree, sorted by degree.
class Polynomial {
 public:
  Polynomial(int dim, std::vector<HomogeneousForm> components);
  static Polynomial from_monomials(int dim, std::span<const Monomial> terms);

  int dim() const { return dim_; }
  int degree() const;
  const std::vector<HomogeneousForm>& components() const { return components_; }

  double eval(const Eigen::VectorXd& x) const;
  void evaluate(const Eigen::VectorXd& x, int order, double& value, Eigen::VectorXd* grad,
                Eigen::MatrixXd* hess) const;

 private:
  int dim_;
  std::vector<HomogeneousForm> components_;
};

}  // namespace lpq
