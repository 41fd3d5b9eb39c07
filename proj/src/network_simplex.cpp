#include "mlsl/errors.hpp"
#include "mlsl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlsl {

namespace {

constexpr std::size_t kMaxAtoms = 4096;

// Spanning-tree basis of the bipartite transportation graph.  Nodes 0..m-1
// are rows, m..m+n-1 columns; basic cells are stored as (row, col, flow).
class TransportSimplex {
 public:
  TransportSimplex(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& C)
      : a_(a), b_(b), C_(C), m_(static_cast<int>(a.size())), n_(static_cast<int>(b.size())) {
    maxc_ = C.size() ? C.cwiseAbs().maxCoeff() : 0.0;
    tol_ = 1e-12 * std::max(1.0, maxc_);
    northwest_corner();
  }

  long solve() {
    const int nodes = m_ + n_;
    const long cap = 200L * nodes * nodes + 10000;
    long pivots = 0;
    int degenerate_run = 0;
    std::size_t cursor = 0;
    for (;;) {
      rebuild_tree();
      const bool bland = degenerate_run > nodes;
      int ei = -1, ej = -1;
      if (bland) {
        find_entering_bland(ei, ej);
      } else {
        find_entering_block(ei, ej, cursor);
      }
      if (ei < 0) break;
      const bool degenerate = pivot(ei, ej);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      if (++pivots > cap) fail(ErrorKind::NotConverged, "transportation simplex exceeded its pivot budget");
    }
    return pivots;
  }

  Eigen::MatrixXd plan() const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m_, n_);
    for (const auto& c : basis_) P(c.i, c.j) += std::max(0.0, c.flow);
    return P;
  }

 private:
  struct Cell {
    int i;
    int j;
    double flow;
  };

  void northwest_corner() {
    std::vector<double> ra(a_), rb(b_);
    int i = 0, j = 0;
    while (i < m_ && j < n_) {
      const double x = std::min(ra[i], rb[j]);
      basis_.push_back({i, j, x});
      ra[i] -= x;
      rb[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      // Advance exactly one index per cell so the basis has m + n - 1 cells.
      if (j == n_ - 1 || (i < m_ - 1 && ra[i] <= rb[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Parent pointers and potentials from a BFS rooted at row 0.
  void rebuild_tree() {
    const int nodes = m_ + n_;
    adj_.assign(static_cast<std::size_t>(nodes), {});
    for (int e = 0; e < static_cast<int>(basis_.size()); ++e) {
      adj_[basis_[e].i].push_back(e);
      adj_[m_ + basis_[e].j].push_back(e);
    }
    parent_edge_.assign(static_cast<std::size_t>(nodes), -1);
    depth_.assign(static_cast<std::size_t>(nodes), -1);
    pot_.assign(static_cast<std::size_t>(nodes), 0.0);
    std::vector<int> queue{0};
    depth_[0] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int v = queue[q];
      for (int e : adj_[v]) {
        const Cell& c = basis_[e];
        const int w = v < m_ ? m_ + c.j : c.i;
        if (depth_[w] >= 0) continue;
        depth_[w] = depth_[v] + 1;
        parent_edge_[w] = e;
        // u_i + v_j = C_ij
        pot_[w] = C_(c.i, c.j) - pot_[v];
        queue.push_back(w);
      }
    }
    if (static_cast<int>(queue.size()) != nodes) fail(ErrorKind::InvariantViolation, "transport basis is not a spanning tree");
  }

  double reduced(int i, int j) const { return C_(i, j) - pot_[i] - pot_[m_ + j]; }

  void find_entering_block(int& ei, int& ej, std::size_t& cursor) const {
    const std::size_t total = static_cast<std::size_t>(m_) * n_;
    const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(total))));
    std::size_t scanned = 0;
    while (scanned < total) {
      double best = -tol_;
      std::size_t best_idx = total;
      const std::size_t len = std::min(block, total - scanned);
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t idx = (cursor + k) % total;
        const double r = reduced(static_cast<int>(idx / n_), static_cast<int>(idx % n_));
        if (r < best || (r == best && best_idx != total && idx < best_idx)) {
          best = r;
          best_idx = idx;
        }
      }
      cursor = (cursor + len) % total;
      scanned += len;
      if (best_idx != total) {
        ei = static_cast<int>(best_idx / n_);
        ej = static_cast<int>(best_idx % n_);
        return;
      }
    }
    ei = ej = -1;
  }

  void find_entering_bland(int& ei, int& ej) const {
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (reduced(i, j) < -tol_) {
          ei = i;
          ej = j;
          return;
        }
      }
    }
    ei = ej = -1;
  }

  // Returns true for a degenerate (zero-step) pivot.
  bool pivot(int ei, int ej) {
    // Tree path between row node ei and column node m + ej.
    std::vector<int> from_row, from_col;
    int u = ei, v = m_ + ej;
    while (depth_[u] > depth_[v]) {
      from_row.push_back(parent_edge_[u]);
      u = other(parent_edge_[u], u);
    }
    while (depth_[v] > depth_[u]) {
      from_col.push_back(parent_edge_[v]);
      v = other(parent_edge_[v], v);
    }
    while (u != v) {
      from_row.push_back(parent_edge_[u]);
      u = other(parent_edge_[u], u);
      from_col.push_back(parent_edge_[v]);
      v = other(parent_edge_[v], v);
    }
    std::vector<int> path(from_row);
    path.insert(path.end(), from_col.rbegin(), from_col.rend());
    // Edges at even positions along the path from the row node lose flow.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const Cell& c = basis_[path[t]];
      const double f = c.flow;
      const bool better = f < theta ||
                          (f == theta && leave >= 0 && cell_index(c) < cell_index(basis_[leave]));
      if (better) {
        theta = f;
        leave = path[t];
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t t = 0; t < path.size(); ++t) {
      basis_[path[t]].flow += (t % 2 == 0) ? -theta : theta;
    }
    basis_[leave] = Cell{ei, ej, theta};
    return theta <= 1e-15;
  }

  int other(int e, int node) const {
    const Cell& c = basis_[e];
    return node < m_ ? m_ + c.j : c.i;
  }

  std::size_t cell_index(const Cell& c) const { return static_cast<std::size_t>(c.i) * n_ + c.j; }

  const std::vector<double>& a_;
  const std::vector<double>& b_;
  const Eigen::MatrixXd& C_;
  int m_;
  int n_;
  double maxc_ = 0.0;
  double tol_ = 0.0;
  std::vector<Cell> basis_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_edge_;
  std::vector<int> depth_;
  std::vector<double> pot_;
};

}  // namespace

ExactTransport solve_transport(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost) {
  if (a.empty() || b.empty()) fail(ErrorKind::InvariantViolation, "empty marginal");
  if (a.size() > kMaxAtoms || b.size() > kMaxAtoms) {
    fail(ErrorKind::SizeExceeded, "exact transport is limited to 4096 atoms per side");
  }
  if (cost.rows() != static_cast<Eigen::Index>(a.size()) || cost.cols() != static_cast<Eigen::Index>(b.size())) {
    fail(ErrorKind::DimensionMismatch, "cost matrix shape does not match the marginals");
  }
  double sa = 0.0, sb = 0.0;
  for (double v : a) sa += v;
  for (double v : b) sb += v;
  if (std::abs(sa - sb) > 1e-9 * std::max(1.0, sa)) fail(ErrorKind::NotNormalized, "marginals carry different mass");
  // Absorb rounding in the total into the last column.
  std::vector<double> bb(b);
  bb.back() += sa - sb;
  TransportSimplex simplex(a, bb, cost);
  ExactTransport out;
  out.pivots = simplex.solve();
  out.plan.row = a;
  out.plan.col = b;
  out.plan.mass = simplex.plan();
  out.cost = (out.plan.mass.array() * cost.array()).sum();
  out.distance = std::sqrt(std::max(0.0, out.cost));
  return out;
}

}  // namespace mlsl
