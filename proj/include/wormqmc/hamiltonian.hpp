#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wormqmc {

/// -a X_i X_j + b Y_i Y_j coupling, i < j.
struct PairTerm {
  int i = 0;
  int j = 0;
  double a = 0.0;
  double b = 0.0;
};

/// d Z_i field.
struct FieldTerm {
  int i = 0;
  double d = 0.0;
};

/// H = sum_{i<j} (-a_ij X_i X_j + b_ij Y_i Y_j) + sum_i d_i Z_i
/// with |b_ij| <= a_ij <= 1/2 and |d_i| <= 1.
struct XYHamiltonian {
  int n = 0;
  std::vector<PairTerm> pairs;
  std::vector<FieldTerm> fields;

  /// Field on qubit q (0 when no field term is listed).
  double field_on(int q) const;

  /// Triangle-inequality bound on the operator norm.
  double norm_bound() const;

  /// min over pairs of (a - b, a + b); empty when there are no pairs.
  std::optional<double> c_min() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const XYHamiltonian& h);

/// Throws ValidationError listing every violation.
void require_valid(const XYHamiltonian& h);

inline constexpr double kDefaultTrotterConstant = 4.0;

/// L = ceil(c_L n^2 beta^2 / eps), at least 1.
int choose_trotter_number(const XYHamiltonian& h, double beta, double eps,
                          double c_L = kDefaultTrotterConstant);

enum class OpKind : std::uint8_t { Pair, Field };

/// One factor of C: I + delta (a XX - b YY) or I - delta d Z.
///
/// Leg numbering. Pair: 0 = in(q0), 1 = in(q1), 2 = out(q0), 3 = out(q1).
/// Field: 0 = in, 1 = out. "in" is the bra side (earlier imaginary time,
/// above the box in the diagram), "out" the ket side. A local state packs
/// leg k into bit k.
struct OperatorDescriptor {
  OpKind kind = OpKind::Field;
  int q0 = 0;
  int q1 = -1;
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;

  int arity() const { return kind == OpKind::Pair ? 2 : 1; }
  int legs() const { return 2 * arity(); }
  /// Qubit touched by a leg.
  int leg_qubit(int leg) const { return (leg % arity()) == 0 ? q0 : q1; }
  /// True for bra-side legs.
  bool leg_is_in(int leg) const { return leg < arity(); }
};

/// <in|O|out>, in/out packed with bit 0 = q0 and bit 1 = q1.
double matrix_element(const OperatorDescriptor& op, double delta, unsigned in_bits,
                      unsigned out_bits);

/// Same, from a packed local leg state.
inline double local_element(const OperatorDescriptor& op, double delta, unsigned legs) {
  const int k = op.arity();
  const unsigned mask = (1u << k) - 1u;
  return matrix_element(op, delta, legs & mask, (legs >> k) & mask);
}

/// The flattened operator string of (C C^dagger)^L.
///
/// Half-step s uses the factor order of C for even s (pairs in
/// lexicographic (i, j) order, then fields by ascending qubit) and the
/// reversed order for odd s, which is C^dagger since every factor is real
/// symmetric. Fields are emitted for every qubit, including d = 0.
class OperatorSchedule {
 public:
  OperatorSchedule(const XYHamiltonian& h, double beta, int L);

  int n() const { return n_; }
  int trotter_number() const { return L_; }
  double beta() const { return beta_; }
  double delta() const { return delta_; }
  int M() const { return static_cast<int>(ops_.size()); }
  int M1() const { return M1_; }
  int M2() const { return M2_; }
  /// 4 M2 + 2 M1.
  int leg_count() const { return 4 * M2_ + 2 * M1_; }
  std::span<const OperatorDescriptor> ops() const { return ops_; }
  const OperatorDescriptor& op(int m) const { return ops_[static_cast<std::size_t>(m)]; }
  const XYHamiltonian& hamiltonian() const { return h_; }

  /// The same operator string at a different inverse temperature (same L).
  OperatorSchedule at_beta(double beta) const { return OperatorSchedule(h_, beta, L_); }

 private:
  XYHamiltonian h_;
  int n_;
  int L_;
  double beta_;
  double delta_;
  int M1_ = 0;
  int M2_ = 0;
  std::vector<OperatorDescriptor> ops_;
};

/// Factors of one application of C, in C order.
std::vector<OperatorDescriptor> trotter_factors(const XYHamiltonian& h);

}  // namespace wormqmc
