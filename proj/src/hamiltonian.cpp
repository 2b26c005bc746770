#include "wormqmc/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "wormqmc/errors.hpp"

namespace wormqmc {

double XYHamiltonian::field_on(int q) const {
  double d = 0.0;
  for (const auto& f : fields)
    if (f.i == q) d += f.d;
  return d;
}

double XYHamiltonian::norm_bound() const {
  double s = 0.0;
  for (const auto& p : pairs) s += std::abs(p.a) + std::abs(p.b);
  for (const auto& f : fields) s += std::abs(f.d);
  return s;
}

std::optional<double> XYHamiltonian::c_min() const {
  if (pairs.empty()) return std::nullopt;
  double c = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) c = std::min({c, p.a - p.b, p.a + p.b});
  return c;
}

ValidationReport validate(const XYHamiltonian& h) {
  ValidationReport r;
  auto term = [](const char* kind, std::size_t idx) {
    std::ostringstream os;
    os << kind << "[" << idx << "]";
    return os.str();
  };
  if (h.n <= 0) r.violations.push_back("n must be a positive qubit count");

  std::set<std::pair<int, int>> seen_pairs;
  for (std::size_t k = 0; k < h.pairs.size(); ++k) {
    const auto& p = h.pairs[k];
    const auto name = term("pairs", k);
    if (p.i < 0 || p.j < 0 || p.i >= h.n || p.j >= h.n) {
      r.violations.push_back(name + ": qubit index out of range [0, n)");
      continue;
    }
    if (p.i >= p.j) r.violations.push_back(name + ": requires i < j");
    if (!seen_pairs.insert({std::min(p.i, p.j), std::max(p.i, p.j)}).second)
      r.violations.push_back(name + ": duplicate pair (" + std::to_string(p.i) + ", " +
                             std::to_string(p.j) + ")");
    if (!std::isfinite(p.a) || !std::isfinite(p.b)) {
      r.violations.push_back(name + ": non-finite coefficient");
      continue;
    }
    if (std::abs(p.b) > p.a) r.violations.push_back(name + ": |b| > a violates |b| <= a <= 1/2");
    if (p.a > 0.5) r.violations.push_back(name + ": a > 1/2 violates |b| <= a <= 1/2");
  }

  std::set<int> seen_fields;
  for (std::size_t k = 0; k < h.fields.size(); ++k) {
    const auto& f = h.fields[k];
    const auto name = term("fields", k);
    if (f.i < 0 || f.i >= h.n) {
      r.violations.push_back(name + ": qubit index out of range [0, n)");
      continue;
    }
    if (!seen_fields.insert(f.i).second)
      r.violations.push_back(name + ": duplicate field on qubit " + std::to_string(f.i));
    if (!std::isfinite(f.d) || std::abs(f.d) > 1.0)
      r.violations.push_back(name + ": |d| > 1 violates |d_i| <= 1");
  }

  if (r.ok()) {
    if (auto c = h.c_min(); c && *c == 0.0)
      r.warnings.push_back(
          "c_min = min(a - b, a + b) = 0: a hopping channel is closed and the rigorous mixing "
          "bound does not apply");
  }
  return r;
}

void require_valid(const XYHamiltonian& h) {
  const auto r = validate(h);
  if (r.ok()) return;
  std::string msg = "invalid Hamiltonian:";
  for (const auto& v : r.violations) msg += "\n  " + v;
  throw ValidationError(msg);
}

int choose_trotter_number(const XYHamiltonian& h, double beta, double eps, double c_L) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(c_L > 0.0)) throw ValidationError("Trotter constant c_L must be positive");
  if (!(beta >= 0.0)) throw ValidationError("beta must be non-negative");
  const double n = h.n;
  const double raw = c_L * n * n * beta * beta / eps;
  // Values like 4 / 0.1 land a few ulps above an integer; don't round those up.
  const double L = std::ceil(raw * (1.0 - 1e-12));
  if (L > 1e9) throw ValidationError("Trotter number exceeds 1e9");
  return std::max(1, static_cast<int>(L));
}

double matrix_element(const OperatorDescriptor& op, double delta, unsigned in_bits,
                      unsigned out_bits) {
  if (op.kind == OpKind::Field) {
    if (in_bits != out_bits) return 0.0;
    return in_bits == 0 ? 1.0 - delta * op.d : 1.0 + delta * op.d;
  }
  if (in_bits == out_bits) return 1.0;
  if ((std::popcount(in_bits) & 1) != (std::popcount(out_bits) & 1)) return 0.0;
  // Same parity, different state: out is the complement of in.
  if (in_bits == 0b00 || in_bits == 0b11) return delta * (op.a + op.b);
  return delta * (op.a - op.b);
}

std::vector<OperatorDescriptor> trotter_factors(const XYHamiltonian& h) {
  std::vector<PairTerm> pairs = h.pairs;
  std::sort(pairs.begin(), pairs.end(),
            [](const PairTerm& x, const PairTerm& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  std::vector<OperatorDescriptor> c;
  c.reserve(pairs.size() + static_cast<std::size_t>(h.n));
  for (const auto& p : pairs)
    c.push_back({OpKind::Pair, p.i, p.j, p.a, p.b, 0.0});
  for (int q = 0; q < h.n; ++q)
    c.push_back({OpKind::Field, q, -1, 0.0, 0.0, h.field_on(q)});
  return c;
}

OperatorSchedule::OperatorSchedule(const XYHamiltonian& h, double beta, int L)
    : h_(h), n_(h.n), L_(L), beta_(beta) {
  require_valid(h);
  if (L < 1) throw ValidationError("Trotter number must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  delta_ = beta / (2.0 * L);
  for (int q = 0; q < h.n; ++q)
    if (delta_ * std::abs(h.field_on(q)) > 1.0)
      throw ValidationError("delta * |d| > 1 gives a negative weight; increase L");

  const auto c = trotter_factors(h);
  ops_.reserve(c.size() * 2 * static_cast<std::size_t>(L));
  for (int half = 0; half < 2 * L; ++half) {
    if (half % 2 == 0)
      ops_.insert(ops_.end(), c.begin(), c.end());
    else
      ops_.insert(ops_.end(), c.rbegin(), c.rend());
  }
  for (const auto& op : ops_) (op.kind == OpKind::Pair ? M2_ : M1_) += 1;
}

}  // namespace wormqmc
