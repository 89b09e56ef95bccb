#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pkopt {

/// Exponents of one monomial, one entry per variable.
using Exponent = std::vector<int>;

/// Graded ordering of exponents: lower total degree first; within one degree
/// the larger power of the earlier variable comes first, so for two variables
/// the order is 1, x, y, x², xy, y², ...
struct GradedLexLess {
  bool operator()(const Exponent& a, const Exponent& b) const {
    int da = 0;
    int db = 0;
    for (int e : a) da += e;
    for (int e : b) db += e;
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(),
                                        a.end());
  }
};

/// Relative magnitude below which a coefficient is treated as cancelled.
inline constexpr double kDropTolerance = 1e-14;

/// Sparse multivariate polynomial with coefficients of type T (double or
/// std::complex<double>) over a fixed number of variables.
///
/// Terms are kept in canonical graded order. After every arithmetic operation
/// coefficients with |c| <= kDropTolerance * (largest operand coefficient)
/// are removed, so that
/// identities which hold exactly in rational arithmetic (for instance a
/// vanishing divergence) produce the zero polynomial in double precision.
template <typename T>
class Polynomial {
 public:
  using Coefficient = T;
  using TermMap = std::map<Exponent, T, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(int num_vars) : num_vars_(num_vars) {
    if (num_vars < 0) throw std::invalid_argument("negative variable count");
  }

  static Polynomial Constant(int num_vars, T value) {
    Polynomial p(num_vars);
    p.AddTerm(Exponent(num_vars, 0), value);
    return p;
  }

  /// The polynomial scale * z_index.
  static Polynomial Variable(int num_vars, int index, T scale = T(1)) {
    Polynomial p(num_vars);
    p.CheckVariable(index);
    Exponent e(num_vars, 0);
    e[index] = 1;
    p.AddTerm(e, scale);
    return p;
  }

  static Polynomial Monomial(const Exponent& exponent, T coefficient) {
    Polynomial p(static_cast<int>(exponent.size()));
    p.AddTerm(exponent, coefficient);
    return p;
  }

  int num_vars() const { return num_vars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Adds c * z^exponent, merging with an existing term. No pruning beyond
  /// removal of exact zeros.
  void AddTerm(const Exponent& exponent, T coefficient) {
    if (static_cast<int>(exponent.size()) != num_vars_) {
      throw std::invalid_argument("exponent length does not match variables");
    }
    for (int e : exponent) {
      if (e < 0) throw std::invalid_argument("negative exponent");
    }
    if (coefficient == T(0)) return;
    auto [it, inserted] = terms_.try_emplace(exponent, coefficient);
    if (!inserted) {
      it->second += coefficient;
      if (it->second == T(0)) terms_.erase(it);
    }
  }

  T coefficient(const Exponent& exponent) const {
    auto it = terms_.find(exponent);
    return it == terms_.end() ? T(0) : it->second;
  }

  /// Total degree; zero for the zero polynomial.
  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int v : e) s += v;
      d = std::max(d, s);
    }
    return d;
  }

  int degree_in(int var) const {
    CheckVariable(var);
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
    return d;
  }

  /// Per-variable maximal exponents.
  std::vector<int> degrees() const {
    std::vector<int> d(num_vars_, 0);
    for (const auto& [e, c] : terms_) {
      for (int k = 0; k < num_vars_; ++k) d[k] = std::max(d[k], e[k]);
    }
    return d;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  T Evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const {
    if (point.size() != num_vars_) {
      throw std::invalid_argument("evaluation point has wrong dimension");
    }
    T sum(0);
    for (const auto& [e, c] : terms_) {
      double m = 1.0;
      for (int k = 0; k < num_vars_; ++k) {
        for (int r = 0; r < e[k]; ++r) m *= point[k];
      }
      sum += c * m;
    }
    return sum;
  }

  Polynomial Differentiate(int var) const {
    CheckVariable(var);
    Polynomial out(num_vars_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponent d = e;
      d[var] -= 1;
      out.AddTerm(d, c * static_cast<double>(e[var]));
    }
    return out;
  }

  std::vector<Polynomial> Gradient() const {
    std::vector<Polynomial> g;
    g.reserve(num_vars_);
    for (int k = 0; k < num_vars_; ++k) g.push_back(Differentiate(k));
    return g;
  }

  /// Replaces every variable z_k by values[k]. All values must share one
  /// variable count, which becomes the variable count of the result.
  Polynomial Compose(const std::vector<Polynomial>& values) const {
    if (static_cast<int>(values.size()) != num_vars_) {
      throw std::invalid_argument("compose needs one value per variable");
    }
    const int out_vars = values.empty() ? 0 : values.front().num_vars();
    for (const auto& v : values) {
      if (v.num_vars() != out_vars) {
        throw std::invalid_argument("compose values disagree on variables");
      }
    }
    // Cache powers of each substituted value.
    std::vector<std::vector<Polynomial>> powers(num_vars_);
    const std::vector<int> max_deg = degrees();
    for (int k = 0; k < num_vars_; ++k) {
      powers[k].push_back(Constant(out_vars, T(1)));
      for (int r = 1; r <= max_deg[k]; ++r) {
        powers[k].push_back(powers[k].back() * values[k]);
      }
    }
    Polynomial out(out_vars);
    double scale = 0.0;
    for (const auto& [e, c] : terms_) {
      Polynomial term = Constant(out_vars, c);
      for (int k = 0; k < num_vars_; ++k) {
        if (e[k] > 0) term = term * powers[k][e[k]];
      }
      scale = std::max(scale, term.max_abs_coefficient());
      out.AccumulateRaw(term);
    }
    out.PruneBelow(kDropTolerance * scale);
    return out;
  }

  /// Substitutes a single variable by a polynomial over the same variables.
  Polynomial Substitute(int var, const Polynomial& value) const {
    CheckVariable(var);
    if (value.num_vars() != num_vars_) {
      throw std::invalid_argument("substitution changes variable count");
    }
    std::vector<Polynomial> values;
    values.reserve(num_vars_);
    for (int k = 0; k < num_vars_; ++k) {
      values.push_back(k == var ? value : Variable(num_vars_, k));
    }
    return Compose(values);
  }

  /// Moves variable k to position new_index[k] in a space of new_num_vars
  /// variables. Variables mapped to -1 must not occur in the polynomial.
  Polynomial Reindexed(const std::vector<int>& new_index,
                       int new_num_vars) const {
    if (static_cast<int>(new_index.size()) != num_vars_) {
      throw std::invalid_argument("reindex map has wrong length");
    }
    Polynomial out(new_num_vars);
    for (const auto& [e, c] : terms_) {
      Exponent ne(new_num_vars, 0);
      for (int k = 0; k < num_vars_; ++k) {
        if (e[k] == 0) continue;
        if (new_index[k] < 0 || new_index[k] >= new_num_vars) {
          throw std::invalid_argument(
              "reindex drops a variable that occurs in the polynomial");
        }
        ne[new_index[k]] += e[k];
      }
      out.AddTerm(ne, c);
    }
    return out;
  }

  /// Removes coefficients with |c| <= rel_tol * max|c|.
  void Prune(double rel_tol = kDropTolerance) {
    PruneBelow(rel_tol * max_abs_coefficient());
  }

  /// Removes coefficients with |c| <= cutoff.
  void PruneBelow(double cutoff) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= cutoff) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
  }

  Polynomial<std::complex<double>> ToComplex() const {
    Polynomial<std::complex<double>> out(num_vars_);
    for (const auto& [e, c] : terms_) out.AddTerm(e, std::complex<double>(c));
    return out;
  }

  Polynomial operator-() const {
    Polynomial out = *this;
    for (auto& [e, c] : out.terms_) c = -c;
    return out;
  }

  // Sums and products prune relative to the operands' largest coefficient,
  // so complete cancellation leaves the zero polynomial.
  Polynomial& operator+=(const Polynomial& other) {
    CheckCompatible(other);
    const double scale =
        std::max(max_abs_coefficient(), other.max_abs_coefficient());
    for (const auto& [e, c] : other.terms_) AddTerm(e, c);
    PruneBelow(kDropTolerance * scale);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& other) {
    CheckCompatible(other);
    const double scale =
        std::max(max_abs_coefficient(), other.max_abs_coefficient());
    for (const auto& [e, c] : other.terms_) AddTerm(e, -c);
    PruneBelow(kDropTolerance * scale);
    return *this;
  }

  Polynomial& operator*=(T scalar) {
    if (scalar == T(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= scalar;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    return a += b;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    return a -= b;
  }
  friend Polynomial operator*(Polynomial a, T s) { return a *= s; }
  friend Polynomial operator*(T s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.CheckCompatible(b);
    Polynomial out(a.num_vars_);
    Exponent e(a.num_vars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (int k = 0; k < a.num_vars_; ++k) e[k] = ea[k] + eb[k];
        out.AddTerm(e, ca * cb);
      }
    }
    out.PruneBelow(kDropTolerance * a.max_abs_coefficient() *
                   b.max_abs_coefficient());
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.num_vars_ == b.num_vars_ && a.terms_ == b.terms_;
  }

  /// Largest coefficient magnitude of a - b, relative to the larger of the
  /// two operands' largest coefficient (absolute when both are zero).
  friend double RelativeDistance(const Polynomial& a, const Polynomial& b) {
    Polynomial d = a;
    for (const auto& [e, c] : b.terms_) d.AddTerm(e, -c);
    const double scale =
        std::max({a.max_abs_coefficient(), b.max_abs_coefficient(), 1e-300});
    return d.max_abs_coefficient() / scale;
  }

 private:
  template <typename U>
  friend class Polynomial;

  void CheckVariable(int var) const {
    if (var < 0 || var >= num_vars_) {
      throw std::invalid_argument("unknown variable index " +
                                  std::to_string(var));
    }
  }

  void CheckCompatible(const Polynomial& other) const {
    if (other.num_vars_ != num_vars_) {
      throw std::invalid_argument("polynomials over different variable sets");
    }
  }

  void AccumulateRaw(const Polynomial& other) {
    for (const auto& [e, c] : other.terms_) AddTerm(e, c);
  }

  int num_vars_ = 0;
  TermMap terms_;
};

using PolyExpr = Polynomial<double>;
using ComplexPoly = Polynomial<std::complex<double>>;

PolyExpr RealPart(const ComplexPoly& p);
PolyExpr ImagPart(const ComplexPoly& p);

/// Human-readable rendering, e.g. "0.5*x1^2*x2 - lambda1".
std::string ToString(const PolyExpr& p, const std::vector<std::string>& names);

/// Matrix of polynomials, row-major.
using PolyMatrix = std::vector<std::vector<PolyExpr>>;

}  // namespace pkopt
