#include "lpq/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lpq/errors.hpp"

namespace lpq {

namespace {

constexpr std::size_t kMaxTensorEntries = std::size_t{1} << 24;

std::size_t tensor_size(int dim, int degree) {
  std::size_t out = 1;
  for (int i = 0; i < degree; ++i) {
    out *= static_cast<std::size_t>(dim);
    if (out > kMaxTensorEntries) throw Error(Errc::degree_too_large, "coefficient tensor too large");
  }
  return out;
}

double factorial(int k) {
  double out = 1.0;
  for (int i = 2; i <= k; ++i) out *= i;
  return out;
}

}  // namespace

int Monomial::degree() const {
  int s = 0;
  for (const int e : exponents) s += e;
  return s;
}

HomogeneousForm::HomogeneousForm(int dim, int degree, std::vector<double> tensor)
    : dim_(dim), degree_(degree), tensor_(std::move(tensor)) {
  if (dim < 1 || degree < 0) throw Error(Errc::shape_mismatch, "invalid homogeneous form shape");
  if (degree > kMaxPolynomialDegree) throw Error(Errc::degree_too_large, "degree above cap of 10");
  if (tensor_.size() != tensor_size(dim, degree))
    throw Error(Errc::shape_mismatch, "tensor size does not match dim^degree");
  for (const double t : tensor_)
    if (!std::isfinite(t)) throw Error(Errc::non_finite, "non-finite polynomial coefficient");
}

HomogeneousForm HomogeneousForm::from_monomials(int dim, int degree,
                                                std::span<const Monomial> terms) {
  if (degree > kMaxPolynomialDegree) throw Error(Errc::degree_too_large, "degree above cap of 10");
  std::map<std::vector<int>, double> coeffs;
  for (const auto& m : terms) {
    if (static_cast<int>(m.exponents.size()) != dim)
      throw Error(Errc::shape_mismatch, "monomial exponent count differs from variable count");
    if (m.degree() != degree) throw Error(Errc::shape_mismatch, "monomial degree mismatch");
    coeffs[m.exponents] += m.coeff;
  }
  const std::size_t size = tensor_size(dim, degree);
  std::vector<double> tensor(size, 0.0);
  std::vector<int> exps(static_cast<std::size_t>(dim));
  for (std::size_t flat = 0; flat < size; ++flat) {
    std::fill(exps.begin(), exps.end(), 0);
    std::size_t rest = flat;
    for (int k = 0; k < degree; ++k) {
      ++exps[rest % static_cast<std::size_t>(dim)];
      rest /= static_cast<std::size_t>(dim);
    }
    const auto it = coeffs.find(exps);
    if (it == coeffs.end()) continue;
    double multiplicity = factorial(degree);
    for (const int e : exps) multiplicity /= factorial(e);
    tensor[flat] = it->second / multiplicity;
  }
  return HomogeneousForm(dim, degree, std::move(tensor));
}

bool HomogeneousForm::is_zero() const {
  return std::all_of(tensor_.begin(), tensor_.end(), [](double t) { return t == 0.0; });
}

void HomogeneousForm::evaluate(const Eigen::VectorXd& x, int order, double& value,
                               Eigen::VectorXd* grad, Eigen::MatrixXd* hess) const {
  if (x.size() != dim_) throw Error(Errc::shape_mismatch, "polynomial variable count mismatch");
  const auto d = static_cast<std::size_t>(dim_);
  if (degree_ == 0) {
    value = tensor_[0];
    if (order >= 1 && grad) *grad = Eigen::VectorXd::Zero(dim_);
    if (order >= 2 && hess) *hess = Eigen::MatrixXd::Zero(dim_, dim_);
    return;
  }
  if (degree_ == 1) {
    Eigen::VectorXd t(dim_);
    for (int i = 0; i < dim_; ++i) t[i] = tensor_[static_cast<std::size_t>(i)];
    value = t.dot(x);
    if (order >= 1 && grad) *grad = t;
    if (order >= 2 && hess) *hess = Eigen::MatrixXd::Zero(dim_, dim_);
    return;
  }
  // Contract trailing indices down to a dim x dim matrix M = T[., ., x, ..., x].
  std::vector<double> work(tensor_);
  std::size_t len = work.size();
  for (int level = degree_; level > 2; --level) {
    const std::size_t out_len = len / d;
    for (std::size_t i = 0; i < out_len; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += work[i * d + j] * x[static_cast<Eigen::Index>(j)];
      work[i] = acc;
    }
    len = out_len;
  }
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = work[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
  const Eigen::VectorXd mx = m * x;
  value = x.dot(mx);
  if (order >= 1 && grad) *grad = degree_ * mx;
  if (order >= 2 && hess) *hess = static_cast<double>(degree_) * (degree_ - 1) * m;
}

double HomogeneousForm::eval(const Eigen::VectorXd& x) const {
  double v = 0.0;
  evaluate(x, 0, v, nullptr, nullptr);
  return v;
}

Eigen::VectorXd HomogeneousForm::gradient(const Eigen::VectorXd& x) const {
  double v = 0.0;
  Eigen::VectorXd g;
  evaluate(x, 1, v, &g, nullptr);
  return g;
}

Eigen::MatrixXd HomogeneousForm::hessian(const Eigen::VectorXd& x) const {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  evaluate(x, 2, v, &g, &h);
  return h;
}

Polynomial::Polynomial(int dim, std::vector<HomogeneousForm> components)
    : dim_(dim), components_(std::move(components)) {
  std::sort(components_.begin(), components_.end(),
            [](const auto& a, const auto& b) { return a.degree() < b.degree(); });
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].dim() != dim_) throw Error(Errc::shape_mismatch, "component dimension mismatch");
    if (i > 0 && components_[i].degree() == components_[i - 1].degree())
      throw Error(Errc::shape_mismatch, "duplicate homogeneous degree");
  }
}

Polynomial Polynomial::from_monomials(int dim, std::span<const Monomial> terms) {
  std::map<int, std::vector<Monomial>> by_degree;
  for (const auto& m : terms) {
    if (static_cast<int>(m.exponents.size()) != dim)
      throw Error(Errc::shape_mismatch, "monomial exponent count differs from variable count");
    for (const int e : m.exponents)
      if (e < 0) throw Error(Errc::shape_mismatch, "negative exponent");
    by_degree[m.degree()].push_back(m);
  }
  std::vector<HomogeneousForm> comps;
  for (const auto& [deg, list] : by_degree) {
    auto form = HomogeneousForm::from_monomials(dim, deg, list);
    if (!form.is_zero()) comps.push_back(std::move(form));
  }
  return Polynomial(dim, std::move(comps));
}

int Polynomial::degree() const { return components_.empty() ? 0 : components_.back().degree(); }

double Polynomial::eval(const Eigen::VectorXd& x) const {
  double v = 0.0;
  evaluate(x, 0, v, nullptr, nullptr);
  return v;
}

void Polynomial::evaluate(const Eigen::VectorXd& x, int order, double& value, Eigen::VectorXd* grad,
                          Eigen::MatrixXd* hess) const {
  if (x.size() != dim_) throw Error(Errc::shape_mismatch, "polynomial variable count mismatch");
  value = 0.0;
  if (order >= 1 && grad) *grad = Eigen::VectorXd::Zero(dim_);
  if (order >= 2 && hess) *hess = Eigen::MatrixXd::Zero(dim_, dim_);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (const auto& c : components_) {
    double v = 0.0;
    c.evaluate(x, order, v, order >= 1 ? &g : nullptr, order >= 2 ? &h : nullptr);
    value += v;
    if (order >= 1 && grad) *grad += g;
    if (order >= 2 && hess) *hess += h;
  }
}

}  // namespace lpq
