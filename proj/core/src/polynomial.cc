#include "pkopt/polynomial.h"

#include <cstdio>
#include <sstream>

namespace pkopt {

PolyExpr RealPart(const ComplexPoly& p) {
  PolyExpr out(p.num_vars());
  for (const auto& [e, c] : p.terms()) out.AddTerm(e, c.real());
  out.Prune();
  return out;
}

PolyExpr ImagPart(const ComplexPoly& p) {
  PolyExpr out(p.num_vars());
  for (const auto& [e, c] : p.terms()) out.AddTerm(e, c.imag());
  out.Prune();
  return out;
}

std::string ToString(const PolyExpr& p, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != p.num_vars()) {
    throw std::invalid_argument("one name per variable required");
  }
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    const bool constant =
        std::all_of(e.begin(), e.end(), [](int v) { return v == 0; });
    double mag = std::abs(c);
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    bool need_star = false;
    if (constant || mag != 1.0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", mag);
      os << buf;
      need_star = true;
    }
    for (int k = 0; k < p.num_vars(); ++k) {
      if (e[k] == 0) continue;
      if (need_star) os << "*";
      os << names[k];
      if (e[k] > 1) os << "^" << e[k];
      need_star = true;
    }
  }
  return os.str();
}

}  // namespace pkopt
