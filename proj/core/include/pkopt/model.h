#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "pkopt/polynomial.h"

namespace pkopt {

/// Index bookkeeping for the two variable spaces used throughout.
///
/// The "full" space orders variables as (x, u, lambda) and hosts the problem
/// data and the Hamiltonian. The lifted space y = (x, lambda) hosts the
/// Pontryagin field, basis functions and eigenfunctions.
struct VariableLayout {
  int n_x = 0;
  int n_u = 0;

  int full_size() const { return 2 * n_x + n_u; }
  int y_size() const { return 2 * n_x; }
  int x(int i) const { return i; }
  int u(int i) const { return n_x + i; }
  int lambda(int i) const { return n_x + n_u + i; }

  /// Maps full-space indices into y-space; controls map to -1.
  std::vector<int> FullToY() const;
  /// Maps y-space indices into the full space.
  std::vector<int> YToFull() const;

  std::vector<std::string> FullNames() const;
  std::vector<std::string> YNames() const;
  std::vector<std::string> XUNames() const;
};

/// Polynomial infinite-horizon optimal control problem
///   min ∫ l(x,u) - l_star dt  s.t.  x' = f(x,u).
/// f and l are stored over the full (x, u, lambda) space and may not depend
/// on lambda.
class OcpModel {
 public:
  OcpModel(std::string name, int n_x, int n_u, std::vector<PolyExpr> f,
           PolyExpr l, double l_star = 0.0);

  const std::string& name() const { return name_; }
  const VariableLayout& layout() const { return layout_; }
  int n_x() const { return layout_.n_x; }
  int n_u() const { return layout_.n_u; }
  const std::vector<PolyExpr>& f() const { return f_; }
  const PolyExpr& l() const { return l_; }
  double l_star() const { return l_star_; }

  /// Every component of f has degree at most one in u.
  bool affine_in_u() const { return affine_in_u_; }
  /// l has degree at most two in u with a constant positive definite
  /// u-Hessian (vacuously true without controls).
  bool quadratic_in_u() const { return quadratic_in_u_; }

  /// Running cost l(x,u) at a point.
  double RunningCost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd Dynamics(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u) const;

  /// Packs (x, u, lambda) into a full-space point.
  Eigen::VectorXd FullPoint(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& lambda) const;

 private:
  std::string name_;
  VariableLayout layout_;
  std::vector<PolyExpr> f_;
  PolyExpr l_;
  double l_star_ = 0.0;
  bool affine_in_u_ = false;
  bool quadratic_in_u_ = false;
};

/// H(x,u,lambda) = lambda' f(x,u) + l(x,u) over the full space.
PolyExpr Hamiltonian(const OcpModel& model);

struct NewtonSettings {
  double tol = 1e-12;
  int max_iter = 50;
};

/// Parametric minimizer u*(x, lambda) of the Hamiltonian.
class UStar {
 public:
  /// u* as explicit polynomials in (x, lambda), stored over the full space.
  struct ClosedForm {
    std::vector<PolyExpr> u_expr;
  };
  /// u* defined implicitly by H_u = 0 and solved by damped Newton.
  struct NewtonImplicit {
    std::vector<PolyExpr> h_u;
    PolyMatrix h_uu;
    NewtonSettings settings;
  };

  UStar(VariableLayout layout, ClosedForm form)
      : layout_(layout), kind_(std::move(form)) {}
  UStar(VariableLayout layout, NewtonImplicit form)
      : layout_(layout), kind_(std::move(form)) {}

  bool is_closed_form() const {
    return std::holds_alternative<ClosedForm>(kind_);
  }
  const ClosedForm& closed_form() const { return std::get<ClosedForm>(kind_); }
  const NewtonImplicit& newton() const {
    return std::get<NewtonImplicit>(kind_);
  }
  const VariableLayout& layout() const { return layout_; }

  /// Evaluates u*(x, lambda). For the implicit form throws CheckError when
  /// H_uu is not positive definite at the solution (second order sufficient
  /// condition violated) and SolverError on Newton failure.
  Eigen::VectorXd Evaluate(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& lambda) const;

 private:
  VariableLayout layout_;
  std::variant<ClosedForm, NewtonImplicit> kind_;
};

UStar MinimizeHamiltonianControl(const OcpModel& model,
                                 NewtonSettings settings = {});

/// Pontryagin vector field F(y) = (f(x,u*), -grad_x H(x,u*,lambda)) over
/// y = (x, lambda) together with its symbolic Jacobian.
class PontryaginField {
 public:
  /// Builds a field from explicit components. With verify set, throws
  /// CheckError unless div F and Omega F_y - (Omega F_y)' vanish identically.
  static PontryaginField FromComponents(int n_x, std::vector<PolyExpr> F,
                                        bool verify = true);

  int n_x() const { return n_x_; }
  int dim() const { return 2 * n_x_; }
  const std::vector<PolyExpr>& components() const { return F_; }
  const PolyMatrix& jacobian() const { return F_y_; }
  /// Maximal total degree over the components.
  int degree() const;

  Eigen::VectorXd Evaluate(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd EvaluateJacobian(const Eigen::VectorXd& y) const;

  /// Symbolic divergence sum_k dF_k/dy_k.
  PolyExpr Divergence() const;
  /// Symbolic Omega F_y - (Omega F_y)'.
  PolyMatrix SymmetryDefect() const;

  /// Stable identifier derived from the component coefficients.
  std::string fingerprint() const;

 private:
  PontryaginField(int n_x, std::vector<PolyExpr> F);

  int n_x_ = 0;
  std::vector<PolyExpr> F_;
  PolyMatrix F_y_;
};

/// Lifts the problem to (x, lambda) space. Requires a closed-form u*.
PontryaginField MakePontryaginField(const OcpModel& model, const UStar& ustar);

}  // namespace pkopt
