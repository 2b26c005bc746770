#include "wormqmc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "wormqmc/chain.hpp"
#include "wormqmc/errors.hpp"

namespace wormqmc::oracle {

namespace {

void require_dense_size(int n) {
  if (n > kDenseQubitCap)
    throw CapExceeded("dense oracle is limited to n <= " + std::to_string(kDenseQubitCap) + " qubits",
                      std::ldexp(1.0, n));
}

int bit(std::size_t x, int q) { return static_cast<int>((x >> q) & 1u); }

// Adds coeff * P to m where P is a product of single-qubit Paulis.
// xs/ys/zs are bit masks of the qubits carrying X, Y, Z.
void add_pauli(Eigen::MatrixXd& m, double coeff, std::size_t xs, std::size_t ys, std::size_t zs) {
  const auto dim = static_cast<std::size_t>(m.rows());
  const int n = static_cast<int>(std::log2(static_cast<double>(dim)));
  for (std::size_t col = 0; col < dim; ++col) {
    // Acting on |col>: Z gives (-1)^bit, X flips, Y = i X Z flips with phase
    // i for |0> and -i for |1>. The total phase is real for even Y counts.
    double re = 1.0, im = 0.0;
    for (int q = 0; q < n; ++q) {
      const int b = bit(col, q);
      if ((zs >> q) & 1u) {
        re *= b ? -1.0 : 1.0;
        im *= b ? -1.0 : 1.0;
      }
      if ((ys >> q) & 1u) {
        // multiply by (b ? -i : i)
        const double s = b ? -1.0 : 1.0;
        const double nre = -s * im;
        const double nim = s * re;
        re = nre;
        im = nim;
      }
    }
    if (std::abs(im) > 0.0) throw StructureError("Pauli product with imaginary phase");
    const std::size_t row = col ^ xs ^ ys;
    m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += coeff * re;
  }
}

Eigen::MatrixXd matrix_power_trace_input(const Eigen::MatrixXd& a, int power) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd base = a;
  while (power > 0) {
    if (power & 1) result = result * base;
    power >>= 1;
    if (power > 0) base = base * base;
  }
  return result;
}

}  // namespace

Eigen::MatrixXd dense_hamiltonian(const XYHamiltonian& h) {
  require_valid(h);
  require_dense_size(h.n);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << h.n);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& p : h.pairs) {
    const std::size_t mask = (std::size_t{1} << p.i) | (std::size_t{1} << p.j);
    add_pauli(H, -p.a, mask, 0, 0);
    add_pauli(H, p.b, 0, mask, 0);
  }
  for (const auto& f : h.fields) add_pauli(H, f.d, 0, 0, std::size_t{1} << f.i);
  return H;
}

Eigen::MatrixXd dense_factor(const OperatorDescriptor& op, double delta, int n) {
  require_dense_size(n);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(dim, dim);
  if (op.kind == OpKind::Pair) {
    const std::size_t mask = (std::size_t{1} << op.q0) | (std::size_t{1} << op.q1);
    add_pauli(F, delta * op.a, mask, 0, 0);
    add_pauli(F, -delta * op.b, 0, mask, 0);
  } else {
    add_pauli(F, -delta * op.d, 0, 0, std::size_t{1} << op.q0);
  }
  return F;
}

double exact_Z(const XYHamiltonian& h, double beta) {
  const Eigen::MatrixXd H = dense_hamiltonian(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  double z = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) z += std::exp(-beta * es.eigenvalues()(k));
  return z;
}

double exact_Z_series(const XYHamiltonian& h, double beta) {
  const Eigen::MatrixXd A = -beta * dense_hamiltonian(h);
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (std::ldexp(norm, -squarings) > 0.25) ++squarings;
  const Eigen::MatrixXd B = std::ldexp(1.0, -squarings) * A;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * B / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum.trace();
}

double exact_trotterized_Z(const XYHamiltonian& h, double beta, int L) {
  require_valid(h);
  require_dense_size(h.n);
  if (L < 1) throw ValidationError("Trotter number must be >= 1");
  const double delta = beta / (2.0 * L);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << h.n);
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(dim, dim);
  for (const auto& op : trotter_factors(h)) C = C * dense_factor(op, delta, h.n);
  const Eigen::MatrixXd CCt = C * C.transpose();
  return matrix_power_trace_input(CCt, L).trace();
}

double estimate_state_count(const WorldlineLayout& layout) {
  const auto& sched = layout.schedule();
  const int n = sched.n();
  const double G = layout.segment_count();
  const double placements = 1.0 + G * (G - 1.0) / 2.0;
  if (n > 6) {
    // 2^n starting states, at most two nonzero outputs per pair input.
    return std::ldexp(placements, std::min(n + sched.M2(), 4000));
  }
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(dim, dim);
  for (int m = 0; m < sched.M(); ++m) {
    Eigen::MatrixXd A = dense_factor(sched.op(m), 1.0, n);
    A = A.unaryExpr([](double v) { return v != 0.0 ? 1.0 : 0.0; });
    R = R * A;
  }
  return R.trace() * placements;
}

EnumeratedSpace::EnumeratedSpace(LayoutPtr layout, std::vector<WorldlineConfig> states, double c2_factor)
    : layout_(std::move(layout)), states_(std::move(states)), c2_factor_(c2_factor) {
  weights_.reserve(states_.size());
  index_.reserve(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const auto& s = states_[k];
    const double w = s.weight();
    if (!(w > 0.0)) throw StructureError("enumerated configuration with zero weight");
    weights_.push_back(w);
    if (s.head_count() == 0) {
      sum_c0_ += w;
      ++c0_count_;
    } else {
      sum_c2_ += w;
    }
    if (!index_.emplace(s.key(), static_cast<int>(k)).second)
      throw StructureError("duplicate configuration in enumeration");
  }
  const double total = w_total();
  pi_.reserve(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k)
    pi_.push_back((in_c2(k) ? c2_factor_ : 1.0) * weights_[k] / total);
}

int EnumeratedSpace::find(const WorldlineConfig& cfg) const {
  const auto it = index_.find(cfg.key());
  return it == index_.end() ? -1 : it->second;
}

EnumeratedSpace EnumeratedSpace::with_c2_factor(double factor) const {
  return EnumeratedSpace(layout_, states_, factor);
}

EnumeratedSpace enumerate_space(LayoutPtr layout, double cap) {
  const auto& lay = *layout;
  const auto& sched = lay.schedule();
  const int n = sched.n();
  const int M = sched.M();
  const double estimate = estimate_state_count(lay);
  if (estimate > cap)
    throw CapExceeded("enumeration estimate " + std::to_string(estimate) + " exceeds cap " + std::to_string(cap),
                      estimate);

  std::vector<int> first_op(static_cast<std::size_t>(n), -1);
  for (int m = 0; m < M; ++m) {
    const auto& op = sched.op(m);
    for (int slot = 0; slot < op.arity(); ++slot) {
      const int q = slot == 0 ? op.q0 : op.q1;
      if (first_op[static_cast<std::size_t>(q)] < 0) first_op[static_cast<std::size_t>(q)] = m;
    }
  }

  std::vector<WorldlineConfig> states;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(M), 0);
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  std::vector<int> first_in(static_cast<std::size_t>(n), 0);

  // Depth-first over operators. A head appears wherever an in-leg differs
  // from the out-leg of the previous operator on the same qubit; the
  // wrap-around segments are closed at the end.
  std::function<void(int, int)> visit = [&](int m, int heads) {
    if (heads > 2) return;
    if (m == M) {
      int total = heads;
      for (int q = 0; q < n; ++q) total += cur[static_cast<std::size_t>(q)] != first_in[static_cast<std::size_t>(q)];
      if (total != 0 && total != 2) return;
      states.push_back(WorldlineConfig::from_leg_bits(layout, bits));
      if (static_cast<double>(states.size()) > cap)
        throw CapExceeded("enumeration exceeded cap " + std::to_string(cap), static_cast<double>(states.size()));
      return;
    }
    const auto& op = sched.op(m);
    const int k = op.arity();
    const int qs[2] = {op.q0, op.q1};
    const unsigned in_count = 1u << k;
    for (unsigned in = 0; in < in_count; ++in) {
      int extra = 0;
      bool ok = true;
      for (int slot = 0; slot < k; ++slot) {
        const int q = qs[slot];
        const int b = static_cast<int>((in >> slot) & 1u);
        if (first_op[static_cast<std::size_t>(q)] == m) continue;
        extra += b != cur[static_cast<std::size_t>(q)];
      }
      if (!ok || heads + extra > 2) continue;
      int saved_cur[2] = {0, 0};
      int saved_first[2] = {0, 0};
      for (int slot = 0; slot < k; ++slot) {
        saved_cur[slot] = cur[static_cast<std::size_t>(qs[slot])];
        saved_first[slot] = first_in[static_cast<std::size_t>(qs[slot])];
        if (first_op[static_cast<std::size_t>(qs[slot])] == m)
          first_in[static_cast<std::size_t>(qs[slot])] = static_cast<int>((in >> slot) & 1u);
      }
      for (unsigned out = 0; out < in_count; ++out) {
        if (matrix_element(op, sched.delta(), in, out) == 0.0) continue;
        bits[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(in | (out << k));
        for (int slot = 0; slot < k; ++slot)
          cur[static_cast<std::size_t>(qs[slot])] = static_cast<int>((out >> slot) & 1u);
        visit(m + 1, heads + extra);
      }
      for (int slot = 0; slot < k; ++slot) {
        cur[static_cast<std::size_t>(qs[slot])] = saved_cur[slot];
        first_in[static_cast<std::size_t>(qs[slot])] = saved_first[slot];
      }
    }
    bits[static_cast<std::size_t>(m)] = 0;
  };
  visit(0, 0);

  return EnumeratedSpace(layout, std::move(states), EnumeratedSpace::standard_c2_factor(sched));
}

TransitionMatrix TransitionMatrix::from_dense(const std::vector<std::vector<double>>& p) {
  std::vector<Row> rows(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p[i].size(); ++j)
      if (p[i][j] != 0.0) rows[i].push_back({static_cast<int>(j), p[i][j]});
  return TransitionMatrix(std::move(rows));
}

double TransitionMatrix::at(std::size_t i, std::size_t j) const {
  const auto& r = rows_[i];
  const auto it = std::lower_bound(r.begin(), r.end(), static_cast<int>(j),
                                   [](const std::pair<int, double>& e, int col) { return e.first < col; });
  return (it != r.end() && it->first == static_cast<int>(j)) ? it->second : 0.0;
}

std::vector<double> TransitionMatrix::left_multiply(std::span<const double> v) const {
  std::vector<double> out(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (v[i] == 0.0) continue;
    for (const auto& [j, p] : rows_[i]) out[static_cast<std::size_t>(j)] += v[i] * p;
  }
  return out;
}

TransitionMatrix build_transition_matrix(const EnumeratedSpace& space, double laziness) {
  if (!(laziness >= 0.0 && laziness < 1.0)) throw ValidationError("laziness must lie in [0, 1)");
  const auto& lay = space.layout();
  std::vector<TransitionMatrix::Row> rows(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& z = space.state(i);
    std::vector<std::pair<int, double>> entries;
    entries.push_back({static_cast<int>(i), laziness});

    auto resolve = [&](const Junction& j, double pick) {
      const CandidateSet set = candidates(z, j);
      for (const auto& c : set.candidates()) {
        if (c.weight == 0.0) continue;
        const double p = pick * c.weight / set.total;
        if (c.exit_leg == j.entry_leg) {
          entries.push_back({static_cast<int>(i), p});
          continue;
        }
        WorldlineConfig next = z;
        next.pass_through(j.entry_leg, c.exit_leg);
        const int k = space.find(next);
        if (k < 0) throw StructureError("move leaves the enumerated space");
        entries.push_back({k, p});
      }
    };

    if (z.head_count() == 0) {
      const double pick = (1.0 - laziness) / lay.leg_count();
      for (LegId leg = 0; leg < lay.leg_count(); ++leg) resolve(leg_junction(lay, leg), pick);
    } else {
      const double pick = (1.0 - laziness) / 4.0;
      for (int h = 0; h < 2; ++h)
        for (bool up : {true, false}) resolve(head_junction(z, h, up), pick);
    }

    std::sort(entries.begin(), entries.end());
    auto& row = rows[i];
    for (const auto& e : entries) {
      if (!row.empty() && row.back().first == e.first)
        row.back().second += e.second;
      else
        row.push_back(e);
    }
  }
  return TransitionMatrix(std::move(rows));
}

double row_sum_residual(const TransitionMatrix& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double s = 0.0;
    for (const auto& e : p.row(i)) s += e.second;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double stationarity_residual(const TransitionMatrix& p, std::span<const double> pi) {
  const auto next = p.left_multiply(pi);
  double worst = 0.0;
  for (std::size_t j = 0; j < next.size(); ++j) worst = std::max(worst, std::abs(next[j] - pi[j]));
  return worst;
}

double detailed_balance_residual(const TransitionMatrix& p, std::span<const double> pi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (const auto& [j, pij] : p.row(i)) {
      const double fwd = pi[i] * pij;
      const double bwd = pi[static_cast<std::size_t>(j)] * p.at(static_cast<std::size_t>(j), i);
      const double scale = std::max(fwd, bwd);
      if (scale > 0.0) worst = std::max(worst, std::abs(fwd - bwd) / scale);
    }
  }
  return worst;
}

ClassStructure communicating_classes(const TransitionMatrix& p) {
  // Iterative Tarjan.
  const auto N = p.size();
  ClassStructure out;
  out.class_of.assign(N, -1);
  std::vector<int> index(N, -1), low(N, 0);
  std::vector<char> on_stack(N, 0);
  std::vector<std::size_t> stack;
  int counter = 0;
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < N; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      auto& f = frames.back();
      const auto& row = p.row(f.v);
      if (f.edge < row.size()) {
        const auto [wj, pw] = row[f.edge++];
        const auto w = static_cast<std::size_t>(wj);
        if (pw <= 0.0) continue;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      if (low[v] == index[v]) {
        std::size_t size = 0;
        while (true) {
          const auto w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          out.class_of[w] = out.class_count;
          ++size;
          if (w == v) break;
        }
        out.class_sizes.push_back(size);
        ++out.class_count;
      }
    }
  }
  return out;
}

GapResult spectral_gap(const TransitionMatrix& p, std::span<const double> pi) {
  if (p.size() != pi.size()) throw ValidationError("pi and P dimensions differ");
  if (detailed_balance_residual(p, pi) > 1e-9)
    throw ValidationError("transition matrix is not reversible with respect to pi");
  GapResult r;
  r.classes = communicating_classes(p);
  r.irreducible = r.classes.class_count == 1;
  if (!r.irreducible) return r;
  if (p.size() == 1) {
    r.gap = 1.0;
    r.lambda2 = 0.0;
    return r;
  }
  if (p.size() > static_cast<std::size_t>(kGapDimensionCap))
    throw CapExceeded("spectral gap limited to " + std::to_string(kGapDimensionCap) + " states",
                      static_cast<double>(p.size()));
  const auto N = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (const auto& [j, v] : p.row(i))
      S(static_cast<Eigen::Index>(i), j) = std::sqrt(pi[i]) * v / std::sqrt(pi[static_cast<std::size_t>(j)]);
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();  // ascending
  r.lambda2 = ev(N - 2);
  r.gap = 1.0 - r.lambda2;
  return r;
}

}  // namespace wormqmc::oracle
