#include "symphodge/symbols.hpp"

#include <stdexcept>

namespace symphodge {

Eigen::MatrixXd fiber_symbol(const SymplecticModel& m, OpTag tag, int degree, const Eigen::VectorXd& xi) {
  const int n = m.n();
  const int k = degree;
  auto E = [&](int kk) { return wedge_matrix(n, xi, kk); };
  auto I = [&](int kk) { return contraction_matrix(n, xi, kk); };

  switch (tag) {
    case OpTag::d:
      return E(k);
    case OpTag::dstar:
      return -I(k);
    case OpTag::dlam: {
      // sigma(d Lambda - Lambda d)
      if (k == 0) return Eigen::MatrixXd::Zero(0, m.fiber_dim(0));
      Eigen::MatrixXd t1 = (k >= 2) ? Eigen::MatrixXd(E(k - 2) * m.lambda(k))
                                    : Eigen::MatrixXd::Zero(m.fiber_dim(k - 1), m.fiber_dim(k));
      if (k == 2 * n) return t1;  // E(k) has empty range at the top degree
      return t1 - m.lambda(k + 1) * E(k);
    }
    case OpTag::dlamstar: {
      // sigma(L d* - d* L)
      Eigen::MatrixXd t1 = (k >= 1) ? Eigen::MatrixXd(m.L(k - 1) * (-I(k)))
                                    : Eigen::MatrixXd::Zero(m.fiber_dim(k + 1), m.fiber_dim(k));
      if (k + 2 > 2 * n) return t1;  // L vanishes past the top degree
      return t1 - (-I(k + 2)) * m.L(k);
    }
    case OpTag::dplus: {
      if (k > n) throw std::invalid_argument("fiber_symbol: dplus needs k <= n");
      if (k == 0) return E(0);  // Lambda kills 1-forms
      double w = 1.0 / (n - k + 1);
      return E(k) - w * (m.L(k - 1) * Eigen::MatrixXd(m.lambda(k + 1) * E(k)));
    }
    case OpTag::dminus: {
      if (k > n) throw std::invalid_argument("fiber_symbol: dminus needs k <= n");
      double w = 1.0 / (n - k + 1);
      return w * (m.lambda(k + 1) * E(k));
    }
    case OpTag::dminusprime: {
      if (k > n) throw std::invalid_argument("fiber_symbol: dminusprime needs k <= n");
      return m.lambda(k + 1) * E(k);
    }
    case OpTag::dplusstar: {
      if (k > n || k < 1) throw std::invalid_argument("fiber_symbol: dplusstar needs 1 <= k <= n");
      return m.primitive_projector(k - 1) * (-I(k));
    }
    case OpTag::dminusstar: {
      if (k >= n) throw std::invalid_argument("fiber_symbol: dminusstar needs k < n");
      Eigen::MatrixXd t1 = (1.0 / (n - k)) * ((-I(k + 2)) * m.L(k));
      Eigen::MatrixXd t2 = (k >= 1) ? Eigen::MatrixXd((1.0 / (n - k + 1)) * (m.L(k - 1) * (-I(k))))
                                    : Eigen::MatrixXd::Zero(m.fiber_dim(k + 1), m.fiber_dim(k));
      return m.primitive_projector(k + 1) * (t1 - t2);
    }
    case OpTag::lap_plus: {
      if (k >= n) throw std::invalid_argument("fiber_symbol: lap_plus needs k < n");
      Eigen::MatrixXd out = fiber_symbol(m, OpTag::dplusstar, k + 1, xi) * fiber_symbol(m, OpTag::dplus, k, xi);
      if (k >= 1) out += fiber_symbol(m, OpTag::dplus, k - 1, xi) * fiber_symbol(m, OpTag::dplusstar, k, xi);
      return out;
    }
    case OpTag::lap_minus: {
      if (k >= n) throw std::invalid_argument("fiber_symbol: lap_minus needs k < n");
      Eigen::MatrixXd out = fiber_symbol(m, OpTag::dminus, k + 1, xi) * fiber_symbol(m, OpTag::dminusstar, k, xi);
      if (k >= 1) out += fiber_symbol(m, OpTag::dminusstar, k - 1, xi) * fiber_symbol(m, OpTag::dminus, k, xi);
      return out;
    }
    case OpTag::lap_pp: {
      if (k != n) throw std::invalid_argument("fiber_symbol: lap_pp lives on P^n");
      Eigen::MatrixXd pm = fiber_symbol(m, OpTag::dplus, n - 1, xi) * fiber_symbol(m, OpTag::dminus, n, xi);
      Eigen::MatrixXd pmstar =
          fiber_symbol(m, OpTag::dminusstar, n - 1, xi) * fiber_symbol(m, OpTag::dplusstar, n, xi);
      Eigen::MatrixXd pp = fiber_symbol(m, OpTag::dplus, n - 1, xi) * fiber_symbol(m, OpTag::dplusstar, n, xi);
      return pmstar * pm + pp * pp;
    }
    case OpTag::lap_mm: {
      if (k != n) throw std::invalid_argument("fiber_symbol: lap_mm lives on P^n");
      Eigen::MatrixXd pm = fiber_symbol(m, OpTag::dplus, n - 1, xi) * fiber_symbol(m, OpTag::dminus, n, xi);
      Eigen::MatrixXd pmstar =
          fiber_symbol(m, OpTag::dminusstar, n - 1, xi) * fiber_symbol(m, OpTag::dplusstar, n, xi);
      Eigen::MatrixXd mm = fiber_symbol(m, OpTag::dminusstar, n - 1, xi) * fiber_symbol(m, OpTag::dminus, n, xi);
      return pm * pmstar + mm * mm;
    }
    case OpTag::lap_ddlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("fiber_symbol: lap_ddlam needs 1 <= k <= 2n-1");
      Eigen::MatrixXd t1 = fiber_symbol(m, OpTag::dlamstar, k - 1, xi) *
                           (fiber_symbol(m, OpTag::dstar, k, xi) *
                            (fiber_symbol(m, OpTag::d, k - 1, xi) * fiber_symbol(m, OpTag::dlam, k, xi)));
      Eigen::MatrixXd s = fiber_symbol(m, OpTag::d, k - 1, xi) * fiber_symbol(m, OpTag::dstar, k, xi) +
                          fiber_symbol(m, OpTag::dlam, k + 1, xi) * fiber_symbol(m, OpTag::dlamstar, k, xi);
      return t1 + 0.25 * s * s;
    }
    case OpTag::lap_dplusdlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("fiber_symbol: lap_dplusdlam needs 1 <= k <= 2n-1");
      Eigen::MatrixXd t1 = fiber_symbol(m, OpTag::d, k - 1, xi) *
                           (fiber_symbol(m, OpTag::dlam, k, xi) *
                            (fiber_symbol(m, OpTag::dlamstar, k - 1, xi) * fiber_symbol(m, OpTag::dstar, k, xi)));
      Eigen::MatrixXd s = fiber_symbol(m, OpTag::dstar, k + 1, xi) * fiber_symbol(m, OpTag::d, k, xi) +
                          fiber_symbol(m, OpTag::dlamstar, k - 1, xi) * fiber_symbol(m, OpTag::dlam, k, xi);
      return t1 + 0.25 * s * s;
    }
  }
  throw std::invalid_argument("fiber_symbol: unknown tag");
}

SymbolSample symbol_at(const SymplecticModel& m, OpTag tag, const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       int degree) {
  if (xi.norm() < 1e-14) throw std::invalid_argument("symbol_at: zero covector rejected");
  if (std::abs(xi.norm() - 1.0) > 1e-12) throw std::invalid_argument("symbol_at: covector must be a unit vector");
  SymbolSample s;
  s.x = x;
  s.xi = xi;
  s.degree = degree;
  s.matrix = fiber_symbol(m, tag, degree, xi);
  return s;
}

std::vector<Eigen::MatrixXd> adapted_block_projectors(const SymplecticModel& m, const Eigen::VectorXd& xi,
                                                      int degree) {
  const int n = m.n();
  const int k = degree;
  Eigen::VectorXd w1 = xi;
  // the frame partner of w1 in the adapted Darboux frame (omega = w1^w2 + ...);
  // with the i^{p-q} sign convention used here it is -J w1
  Eigen::VectorXd w2 = -(m.J(1) * xi);
  int dk = m.fiber_dim(k);
  auto contains_projector = [&](const Eigen::VectorXd& w) {
    // projector onto forms containing w: w ^ i_w
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dk, dk);
    if (k >= 1) P = wedge_matrix(n, w, k - 1) * contraction_matrix(n, w, k);
    return P;
  };
  Eigen::MatrixXd P1 = contains_projector(w1);
  Eigen::MatrixXd P2 = contains_projector(w2);
  Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(dk, dk);
  return {P1 * (Id - P2), (Id - P1) * P2, P1 * P2, (Id - P1) * (Id - P2)};
}

}  // namespace symphodge
