#include "pkopt/model.h"

#include <cstdint>
#include <cstdio>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "pkopt/error.h"

namespace pkopt {

std::vector<int> VariableLayout::FullToY() const {
  std::vector<int> map(full_size(), -1);
  for (int i = 0; i < n_x; ++i) {
    map[x(i)] = i;
    map[lambda(i)] = n_x + i;
  }
  return map;
}

std::vector<int> VariableLayout::YToFull() const {
  std::vector<int> map(y_size());
  for (int i = 0; i < n_x; ++i) {
    map[i] = x(i);
    map[n_x + i] = lambda(i);
  }
  return map;
}

std::vector<std::string> VariableLayout::FullNames() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_x; ++i) names.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < n_u; ++i) names.push_back("u" + std::to_string(i + 1));
  for (int i = 0; i < n_x; ++i) {
    names.push_back("lambda" + std::to_string(i + 1));
  }
  return names;
}

std::vector<std::string> VariableLayout::YNames() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_x; ++i) names.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < n_x; ++i) {
    names.push_back("lambda" + std::to_string(i + 1));
  }
  return names;
}

std::vector<std::string> VariableLayout::XUNames() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_x; ++i) names.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < n_u; ++i) names.push_back("u" + std::to_string(i + 1));
  return names;
}

namespace {

void RequireNoLambda(const PolyExpr& p, const VariableLayout& layout,
                     const std::string& what) {
  if (p.num_vars() != layout.full_size()) {
    throw std::invalid_argument(what + " is not over the (x, u, lambda) space");
  }
  for (int i = 0; i < layout.n_x; ++i) {
    if (p.degree_in(layout.lambda(i)) > 0) {
      throw std::invalid_argument(what + " may only depend on x and u");
    }
  }
}

// d2 l / du_i du_j as polynomials.
PolyMatrix ControlHessian(const PolyExpr& p, const VariableLayout& layout) {
  PolyMatrix h(layout.n_u, std::vector<PolyExpr>(layout.n_u));
  for (int i = 0; i < layout.n_u; ++i) {
    const PolyExpr di = p.Differentiate(layout.u(i));
    for (int j = 0; j < layout.n_u; ++j) {
      h[i][j] = di.Differentiate(layout.u(j));
    }
  }
  return h;
}

bool IsConstant(const PolyExpr& p) { return p.degree() == 0; }

double ConstantValue(const PolyExpr& p) {
  return p.coefficient(Exponent(p.num_vars(), 0));
}

}  // namespace

OcpModel::OcpModel(std::string name, int n_x, int n_u, std::vector<PolyExpr> f,
                   PolyExpr l, double l_star)
    : name_(std::move(name)),
      layout_{n_x, n_u},
      f_(std::move(f)),
      l_(std::move(l)),
      l_star_(l_star) {
  if (n_x < 1 || n_u < 0) {
    throw std::invalid_argument("need n_x >= 1 and n_u >= 0");
  }
  if (static_cast<int>(f_.size()) != n_x) {
    throw std::invalid_argument("f must have n_x components");
  }
  for (std::size_t i = 0; i < f_.size(); ++i) {
    RequireNoLambda(f_[i], layout_, "f[" + std::to_string(i) + "]");
  }
  RequireNoLambda(l_, layout_, "l");

  affine_in_u_ = true;
  for (const auto& fi : f_) {
    for (int j = 0; j < n_u; ++j) {
      if (fi.degree_in(layout_.u(j)) > 1) affine_in_u_ = false;
    }
  }

  quadratic_in_u_ = true;
  for (int j = 0; j < n_u; ++j) {
    if (l_.degree_in(layout_.u(j)) > 2) quadratic_in_u_ = false;
  }
  if (quadratic_in_u_) {
    const PolyMatrix h = ControlHessian(l_, layout_);
    Eigen::MatrixXd R(n_u, n_u);
    for (int i = 0; i < n_u; ++i) {
      for (int j = 0; j < n_u; ++j) {
        if (!IsConstant(h[i][j])) quadratic_in_u_ = false;
        R(i, j) = ConstantValue(h[i][j]);
      }
    }
    if (quadratic_in_u_) {
      Eigen::LLT<Eigen::MatrixXd> llt(R);
      if (llt.info() != Eigen::Success) quadratic_in_u_ = false;
    }
  }
}

Eigen::VectorXd OcpModel::FullPoint(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& lambda) const {
  Eigen::VectorXd p(layout_.full_size());
  p << x, u, lambda;
  return p;
}

double OcpModel::RunningCost(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) const {
  return l_.Evaluate(FullPoint(x, u, Eigen::VectorXd::Zero(n_x())));
}

Eigen::VectorXd OcpModel::Dynamics(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u) const {
  const Eigen::VectorXd p = FullPoint(x, u, Eigen::VectorXd::Zero(n_x()));
  Eigen::VectorXd dx(n_x());
  for (int i = 0; i < n_x(); ++i) dx[i] = f_[i].Evaluate(p);
  return dx;
}

PolyExpr Hamiltonian(const OcpModel& model) {
  const VariableLayout& layout = model.layout();
  PolyExpr h = model.l();
  for (int i = 0; i < model.n_x(); ++i) {
    h += PolyExpr::Variable(layout.full_size(), layout.lambda(i)) *
         model.f()[i];
  }
  return h;
}

UStar MinimizeHamiltonianControl(const OcpModel& model,
                                 NewtonSettings settings) {
  const VariableLayout& layout = model.layout();
  const int n = layout.full_size();
  const PolyExpr h = Hamiltonian(model);

  std::vector<PolyExpr> h_u;
  for (int j = 0; j < layout.n_u; ++j) h_u.push_back(h.Differentiate(layout.u(j)));
  const PolyMatrix h_uu = ControlHessian(h, layout);

  if (model.affine_in_u() && model.quadratic_in_u()) {
    // H_u = R u + g(x, lambda) with constant R.
    Eigen::MatrixXd R(layout.n_u, layout.n_u);
    for (int i = 0; i < layout.n_u; ++i) {
      for (int j = 0; j < layout.n_u; ++j) R(i, j) = ConstantValue(h_uu[i][j]);
    }
    const Eigen::MatrixXd R_inv = R.llt().solve(
        Eigen::MatrixXd::Identity(layout.n_u, layout.n_u));

    std::vector<PolyExpr> zero_u;
    for (int k = 0; k < n; ++k) {
      const bool is_u = k >= layout.n_x && k < layout.n_x + layout.n_u;
      zero_u.push_back(is_u ? PolyExpr(n) : PolyExpr::Variable(n, k));
    }
    std::vector<PolyExpr> g;
    for (const auto& hu : h_u) g.push_back(hu.Compose(zero_u));

    std::vector<PolyExpr> u_expr;
    for (int i = 0; i < layout.n_u; ++i) {
      PolyExpr ui(n);
      for (int j = 0; j < layout.n_u; ++j) ui -= R_inv(i, j) * g[j];
      u_expr.push_back(ui);
    }
    return UStar(layout, UStar::ClosedForm{std::move(u_expr)});
  }
  return UStar(layout, UStar::NewtonImplicit{h_u, h_uu, settings});
}

Eigen::VectorXd UStar::Evaluate(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& lambda) const {
  const int n_u = layout_.n_u;
  Eigen::VectorXd point(layout_.full_size());
  point << x, Eigen::VectorXd::Zero(n_u), lambda;

  if (const auto* cf = std::get_if<ClosedForm>(&kind_)) {
    Eigen::VectorXd u(n_u);
    for (int i = 0; i < n_u; ++i) u[i] = cf->u_expr[i].Evaluate(point);
    return u;
  }

  const auto& nw = std::get<NewtonImplicit>(kind_);
  auto residual = [&](const Eigen::VectorXd& u) {
    point.segment(layout_.n_x, n_u) = u;
    Eigen::VectorXd r(n_u);
    for (int i = 0; i < n_u; ++i) r[i] = nw.h_u[i].Evaluate(point);
    return r;
  };
  auto hessian = [&](const Eigen::VectorXd& u) {
    point.segment(layout_.n_x, n_u) = u;
    Eigen::MatrixXd m(n_u, n_u);
    for (int i = 0; i < n_u; ++i) {
      for (int j = 0; j < n_u; ++j) m(i, j) = nw.h_uu[i][j].Evaluate(point);
    }
    return m;
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n_u);
  Eigen::VectorXd r = residual(u);
  for (int iter = 0; iter < nw.settings.max_iter && r.norm() > nw.settings.tol;
       ++iter) {
    Eigen::LLT<Eigen::MatrixXd> llt(hessian(u));
    if (llt.info() != Eigen::Success) {
      throw CheckError("H_uu is not positive definite during u* solve");
    }
    const Eigen::VectorXd step = -llt.solve(r);
    double alpha = 1.0;
    Eigen::VectorXd trial = u + step;
    Eigen::VectorXd r_trial = residual(trial);
    for (int halving = 0; halving < 20 && r_trial.norm() >= r.norm();
         ++halving) {
      alpha *= 0.5;
      trial = u + alpha * step;
      r_trial = residual(trial);
    }
    u = trial;
    r = r_trial;
  }
  if (r.norm() > nw.settings.tol) {
    throw SolverError("u* Newton iteration did not converge");
  }
  if (hessian(u).llt().info() != Eigen::Success) {
    throw CheckError("H_uu is not positive definite at u*");
  }
  return u;
}

PontryaginField::PontryaginField(int n_x, std::vector<PolyExpr> F)
    : n_x_(n_x), F_(std::move(F)) {
  const int d = 2 * n_x_;
  F_y_.assign(d, std::vector<PolyExpr>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) F_y_[i][j] = F_[i].Differentiate(j);
  }
}

PontryaginField PontryaginField::FromComponents(int n_x, std::vector<PolyExpr> F,
                                                bool verify) {
  if (n_x < 1 || static_cast<int>(F.size()) != 2 * n_x) {
    throw std::invalid_argument("field needs 2*n_x components");
  }
  for (const auto& c : F) {
    if (c.num_vars() != 2 * n_x) {
      throw std::invalid_argument("field components must be over y = (x, lambda)");
    }
  }
  PontryaginField field(n_x, std::move(F));
  if (verify) {
    if (!field.Divergence().is_zero()) {
      throw CheckError("divergence of the Pontryagin field is not zero");
    }
    for (const auto& row : field.SymmetryDefect()) {
      for (const auto& entry : row) {
        if (!entry.is_zero()) {
          throw CheckError("Omega*F_y is not symmetric");
        }
      }
    }
  }
  return field;
}

int PontryaginField::degree() const {
  int d = 0;
  for (const auto& c : F_) d = std::max(d, c.degree());
  return d;
}

Eigen::VectorXd PontryaginField::Evaluate(const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(dim());
  for (int i = 0; i < dim(); ++i) out[i] = F_[i].Evaluate(y);
  return out;
}

Eigen::MatrixXd PontryaginField::EvaluateJacobian(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd out(dim(), dim());
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) out(i, j) = F_y_[i][j].Evaluate(y);
  }
  return out;
}

PolyExpr PontryaginField::Divergence() const {
  PolyExpr div(dim());
  for (int k = 0; k < dim(); ++k) div += F_y_[k][k];
  return div;
}

PolyMatrix PontryaginField::SymmetryDefect() const {
  // (Omega F_y)_{ij}: rows i < n_x take F_y row n_x+i, rows i >= n_x take
  // -F_y row i-n_x.
  const int d = dim();
  auto omega_fy = [&](int i, int j) {
    return i < n_x_ ? F_y_[n_x_ + i][j] : -F_y_[i - n_x_][j];
  };
  PolyMatrix out(d, std::vector<PolyExpr>(d, PolyExpr(d)));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out[i][j] = omega_fy(i, j) - omega_fy(j, i);
  }
  return out;
}

std::string PontryaginField::fingerprint() const {
  // FNV-1a over exponents and coefficient bit patterns.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& c : F_) {
    for (const auto& [e, coeff] : c.terms()) {
      mix(e.data(), e.size() * sizeof(int));
      mix(&coeff, sizeof(coeff));
    }
    const char sep = ';';
    mix(&sep, 1);
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PontryaginField MakePontryaginField(const OcpModel& model, const UStar& ustar) {
  if (!ustar.is_closed_form()) {
    throw std::invalid_argument(
        "symbolic lift needs a closed-form u*; implicit u* is unsupported");
  }
  const VariableLayout& layout = model.layout();
  const int n = layout.full_size();
  const auto& u_expr = ustar.closed_form().u_expr;

  std::vector<PolyExpr> subst;
  for (int k = 0; k < n; ++k) {
    const bool is_u = k >= layout.n_x && k < layout.n_x + layout.n_u;
    subst.push_back(is_u ? u_expr[k - layout.n_x] : PolyExpr::Variable(n, k));
  }
  const std::vector<int> to_y = layout.FullToY();
  const int ny = layout.y_size();

  // Reduced Hamiltonian H(x, u*(x, lambda), lambda).
  const PolyExpr h_reduced = Hamiltonian(model).Compose(subst).Reindexed(to_y, ny);

  std::vector<PolyExpr> F;
  for (int i = 0; i < layout.n_x; ++i) {
    F.push_back(model.f()[i].Compose(subst).Reindexed(to_y, ny));
  }
  for (int i = 0; i < layout.n_x; ++i) {
    F.push_back(-h_reduced.Differentiate(i));
  }
  return PontryaginField::FromComponents(layout.n_x, std::move(F), true);
}

}  // namespace pkopt
