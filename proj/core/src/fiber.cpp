#include "symphodge/fiber.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

namespace symphodge {

namespace {

long long binom(int m, int k) {
  if (k < 0 || k > m) return 0;
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (m - i) / (i + 1);
  return r;
}

std::vector<std::vector<int>> make_subsets(int m, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > m) return out;
  std::vector<int> cur(k);
  // lexicographic enumeration of k-subsets of {0..m-1}
  for (int i = 0; i < k; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == m - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  if (k == 0) out.assign(1, {});
  return out;
}

// sign of merging two disjoint sorted index sets; 0 if they intersect
int merge_sign(const std::vector<int>& a, const std::vector<int>& b, std::vector<int>* merged) {
  merged->clear();
  merged->reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      merged->push_back(a[i++]);
    } else {
      // b[j] jumps over the remaining elements of a
      inversions += static_cast<int>(a.size() - i);
      merged->push_back(b[j++]);
    }
  }
  while (i < a.size()) merged->push_back(a[i++]);
  while (j < b.size()) merged->push_back(b[j++]);
  return (inversions % 2 == 0) ? 1 : -1;
}

}  // namespace

int FiberBasis::dim(int n, int k) { return static_cast<int>(binom(2 * n, k)); }

const std::vector<std::vector<int>>& FiberBasis::subsets(int n, int k) {
  static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_subsets(2 * n, k)).first;
  return it->second;
}

int FiberBasis::index_of(int n, int k, const std::vector<int>& subset) {
  const auto& all = subsets(n, k);
  auto it = std::lower_bound(all.begin(), all.end(), subset);
  if (it == all.end() || *it != subset) return -1;
  return static_cast<int>(it - all.begin());
}

FiberForm::FiberForm(int n_, int degree_)
    : n(n_), degree(degree_), coeffs(Eigen::VectorXd::Zero(FiberBasis::dim(n_, degree_))) {}

FiberForm::FiberForm(int n_, int degree_, Eigen::VectorXd c) : n(n_), degree(degree_), coeffs(std::move(c)) {
  if (coeffs.size() != FiberBasis::dim(n, degree))
    throw std::invalid_argument("FiberForm: coefficient length does not match C(2n,k)");
}

FiberForm wedge(const FiberForm& a, const FiberForm& b) {
  if (a.n != b.n) throw std::invalid_argument("wedge: mismatched fiber dimension");
  int n = a.n;
  int k = a.degree + b.degree;
  if (k > 2 * n) throw std::invalid_argument("wedge: degree overflow");
  FiberForm out(n, k);
  const auto& sa = FiberBasis::subsets(n, a.degree);
  const auto& sb = FiberBasis::subsets(n, b.degree);
  std::vector<int> merged;
  for (int i = 0; i < a.coeffs.size(); ++i) {
    if (a.coeffs[i] == 0.0) continue;
    for (int j = 0; j < b.coeffs.size(); ++j) {
      if (b.coeffs[j] == 0.0) continue;
      int s = merge_sign(sa[i], sb[j], &merged);
      if (s == 0) continue;
      out.coeffs[FiberBasis::index_of(n, k, merged)] += s * a.coeffs[i] * b.coeffs[j];
    }
  }
  return out;
}

FiberForm contract(const Eigen::VectorXd& v, const FiberForm& a) {
  int n = a.n;
  if (a.degree == 0) return FiberForm(n, 0);
  FiberForm out(n, a.degree - 1);
  const auto& sa = FiberBasis::subsets(n, a.degree);
  for (int i = 0; i < a.coeffs.size(); ++i) {
    if (a.coeffs[i] == 0.0) continue;
    const auto& S = sa[i];
    for (std::size_t p = 0; p < S.size(); ++p) {
      double vc = v[S[p]];
      if (vc == 0.0) continue;
      std::vector<int> rest;
      rest.reserve(S.size() - 1);
      for (std::size_t q = 0; q < S.size(); ++q)
        if (q != p) rest.push_back(S[q]);
      double sgn = (p % 2 == 0) ? 1.0 : -1.0;
      out.coeffs[FiberBasis::index_of(n, a.degree - 1, rest)] += sgn * vc * a.coeffs[i];
    }
  }
  return out;
}

Eigen::MatrixXd wedge_matrix(int n, const Eigen::VectorXd& c, int k) {
  int din = FiberBasis::dim(n, k), dout = FiberBasis::dim(n, k + 1);
  if (dout == 0) return Eigen::MatrixXd::Zero(0, din);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dout, din);
  FiberForm cov(n, 1, c);
  for (int j = 0; j < din; ++j) {
    FiberForm e(n, k);
    e.coeffs[j] = 1.0;
    M.col(j) = wedge(cov, e).coeffs;
  }
  return M;
}

Eigen::MatrixXd contraction_matrix(int n, const Eigen::VectorXd& v, int k) {
  int din = FiberBasis::dim(n, k), dout = FiberBasis::dim(n, k - 1);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(std::max(dout, 0), din);
  if (k == 0) return Eigen::MatrixXd::Zero(0, 1);
  for (int j = 0; j < din; ++j) {
    FiberForm e(n, k);
    e.coeffs[j] = 1.0;
    M.col(j) = contract(v, e).coeffs;
  }
  return M;
}

SymplecticModel::SymplecticModel(int n) : n_(n) {
  if (n != 1 && n != 2) throw std::invalid_argument("SymplecticModel: supported n are 1 and 2");
  int d = 2 * n;

  omega_mat_ = Eigen::MatrixXd::Zero(d, d);
  omega_inv_ = Eigen::MatrixXd::Zero(d, d);
  J_vec_ = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    omega_mat_(2 * i, 2 * i + 1) = 1.0;
    omega_mat_(2 * i + 1, 2 * i) = -1.0;
    omega_inv_(2 * i, 2 * i + 1) = -1.0;
    omega_inv_(2 * i + 1, 2 * i) = 1.0;
    J_vec_(2 * i + 1, 2 * i) = 1.0;   // J e_{2i-1} = e_{2i}
    J_vec_(2 * i, 2 * i + 1) = -1.0;  // J e_{2i} = -e_{2i-1}
  }

  omega_form_ = Eigen::VectorXd::Zero(FiberBasis::dim(n, 2));
  for (int i = 0; i < n; ++i) omega_form_[FiberBasis::index_of(n, 2, {2 * i, 2 * i + 1})] = 1.0;

  L_.resize(d + 1);
  lambda_.resize(d + 1);
  J_.resize(d + 1);
  star_.resize(d + 1);
  prim_basis_.resize(d + 1);
  prim_proj_.resize(d + 1);
  weight_R_.resize(d + 1);
  synthesis_.resize(d + 1);
  synthesis_inv_.resize(d + 1);
  levels_.resize(d + 1);

  // L and Lambda per degree
  FiberForm omega(n, 2, omega_form_);
  for (int k = 0; k <= d; ++k) {
    int dk = FiberBasis::dim(n, k);
    if (k + 2 <= d) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Zero(FiberBasis::dim(n, k + 2), dk);
      for (int j = 0; j < dk; ++j) {
        FiberForm e(n, k);
        e.coeffs[j] = 1.0;
        L.col(j) = wedge(omega, e).coeffs;
      }
      L_[k] = L;
    } else {
      L_[k] = Eigen::MatrixXd::Zero(0, dk);
    }
    // Lambda = (1/2) (omega^{-1})^{ij} i_{e_i} i_{e_j}
    if (k >= 2) {
      Eigen::MatrixXd Lam = Eigen::MatrixXd::Zero(FiberBasis::dim(n, k - 2), dk);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (omega_inv_(i, j) == 0.0) continue;
          Eigen::VectorXd ei = Eigen::VectorXd::Unit(d, i);
          Eigen::VectorXd ej = Eigen::VectorXd::Unit(d, j);
          Lam += 0.5 * omega_inv_(i, j) * contraction_matrix(n, ei, k - 1) * contraction_matrix(n, ej, k);
        }
      }
      lambda_[k] = Lam;
    } else {
      lambda_[k] = Eigen::MatrixXd::Zero(0, dk);
    }
  }

  // Hodge star on the oriented orthonormal basis: *(e_S) = sign(S, S^c) e_{S^c}
  for (int k = 0; k <= d; ++k) {
    int dk = FiberBasis::dim(n, k);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(FiberBasis::dim(n, d - k), dk);
    const auto& subs = FiberBasis::subsets(n, k);
    for (int j = 0; j < dk; ++j) {
      std::vector<int> comp;
      for (int i = 0; i < d; ++i)
        if (!std::binary_search(subs[j].begin(), subs[j].end(), i)) comp.push_back(i);
      // permutation sign of (S, S^c) relative to (0..d-1)
      std::vector<int> perm = subs[j];
      perm.insert(perm.end(), comp.begin(), comp.end());
      int inv = 0;
      for (std::size_t a = 0; a < perm.size(); ++a)
        for (std::size_t b = a + 1; b < perm.size(); ++b)
          if (perm[a] > perm[b]) ++inv;
      S(FiberBasis::index_of(n, d - k, comp), j) = (inv % 2 == 0) ? 1.0 : -1.0;
    }
    star_[k] = S;
  }

  // J on forms via the (p,q) decomposition with dz_j = e_{2j} + i e_{2j+1},
  // multiplier i^{p-q}; this is the convention under which the conjugation
  // identities d^L = -J d* J^{-1} and d^L* = -J d J^{-1} hold verbatim.
  using Cplx = std::complex<double>;
  using MatC = Eigen::MatrixXcd;
  const Cplx I(0.0, 1.0);
  for (int k = 0; k <= d; ++k) {
    int dk = FiberBasis::dim(n, k);
    // columns: complex basis forms dz_S ^ dzbar_T over all (S,T) with |S|+|T| = k
    std::vector<std::pair<int, int>> type;  // (p,q) of each column
    std::vector<Eigen::VectorXcd> cols;
    std::vector<MatC> covectors(2 * n, MatC());
    // complex covectors as coefficient vectors over the real basis
    std::vector<Eigen::VectorXcd> dz(n), dzbar(n);
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXcd z = Eigen::VectorXcd::Zero(d);
      z[2 * j] = Cplx(1, 0);
      z[2 * j + 1] = Cplx(0, 1);
      dz[j] = z;
      dzbar[j] = z.conjugate();
    }
    // complex wedge of a 1-covector with a degree-m complex form
    auto cwedge = [&](const Eigen::VectorXcd& cov, const Eigen::VectorXcd& form, int m) {
      Eigen::VectorXcd out = Eigen::VectorXcd::Zero(FiberBasis::dim(n_, m + 1));
      FiberForm re(n_, m, form.real()), im(n_, m, form.imag());
      FiberForm cr(n_, 1, cov.real()), ci(n_, 1, cov.imag());
      out.real() = (wedge(cr, re).coeffs - wedge(ci, im).coeffs);
      out.imag() = (wedge(cr, im).coeffs + wedge(ci, re).coeffs);
      return out;
    };
    const auto& pq_sets_p = [&](int p) -> const std::vector<std::vector<int>>& {
      static std::map<std::pair<int, int>, std::vector<std::vector<int>>> c;
      auto key = std::make_pair(n, p);
      auto it = c.find(key);
      if (it == c.end()) it = c.emplace(key, make_subsets(n, p)).first;
      return it->second;
    };
    for (int p = 0; p <= std::min(k, n); ++p) {
      int q = k - p;
      if (q < 0 || q > n) continue;
      for (const auto& Sp : pq_sets_p(p)) {
        for (const auto& Tq : pq_sets_p(q)) {
          Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(1);
          acc[0] = Cplx(1, 0);
          int m = 0;
          for (int idx : Sp) {
            acc = cwedge(dz[idx], acc, m);
            ++m;
          }
          for (int idx : Tq) {
            acc = cwedge(dzbar[idx], acc, m);
            ++m;
          }
          cols.push_back(acc);
          type.emplace_back(p, q);
        }
      }
    }
    MatC W(dk, static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) W.col(static_cast<int>(c)) = cols[c];
    if (W.cols() != dk) throw std::logic_error("fiber: (p,q) basis has wrong size");
    Eigen::VectorXcd mult(dk);
    for (int c = 0; c < dk; ++c) {
      int e = type[c].first - type[c].second;  // i^{p-q}
      int em = ((e % 4) + 4) % 4;
      static const Cplx table[4] = {Cplx(1, 0), Cplx(0, 1), Cplx(-1, 0), Cplx(0, -1)};
      mult[c] = table[em];
    }
    MatC Jc = W * mult.asDiagonal() * W.inverse();
    if (Jc.imag().cwiseAbs().maxCoeff() > 1e-12)
      throw std::logic_error("fiber: J matrix has imaginary residue above 1e-12");
    J_[k] = Jc.real();
  }

  // primitive bases (kernel of Lambda) and Lefschetz synthesis per degree
  for (int k = 0; k <= d; ++k) {
    int dk = FiberBasis::dim(n, k);
    if (k > n) {
      prim_basis_[k] = Eigen::MatrixXd::Zero(dk, 0);
    } else if (k <= 1) {
      prim_basis_[k] = Eigen::MatrixXd::Identity(dk, dk);  // Lambda kills degrees 0 and 1
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(lambda_[k], Eigen::ComputeFullV);
      int rank = 0;
      double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-12 * smax) ++rank;
      prim_basis_[k] = svd.matrixV().rightCols(dk - rank);
    }
  }
  for (int k = 0; k <= d; ++k) {
    int dk = FiberBasis::dim(n, k);
    std::vector<int> lv;
    int rmin = std::max(0, k - n);
    std::vector<Eigen::MatrixXd> blocks;
    int total = 0;
    for (int r = rmin; 2 * r <= k; ++r) {
      int s = k - 2 * r;
      if (s > n) continue;
      Eigen::MatrixXd B = prim_basis_[s];
      if (B.cols() == 0) continue;
      double fact = 1.0;
      for (int t = 1; t <= r; ++t) fact *= t;
      Eigen::MatrixXd col = B / fact;
      for (int t = 0; t < r; ++t) col = L_[s + 2 * t] * col;
      blocks.push_back(col);
      lv.push_back(r);
      total += static_cast<int>(col.cols());
    }
    Eigen::MatrixXd W(dk, total);
    int off = 0;
    for (const auto& b : blocks) {
      W.middleCols(off, static_cast<int>(b.cols())) = b;
      off += static_cast<int>(b.cols());
    }
    if (total != dk) throw std::logic_error("fiber: Lefschetz synthesis is not square");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double cond = svd.singularValues()[0] / svd.singularValues()[dk - 1];
    if (!(cond < 1e8)) throw std::runtime_error("fiber: Lefschetz synthesis ill-conditioned");
    synthesis_[k] = W;
    synthesis_inv_[k] = W.inverse();
    levels_[k] = lv;

    // R = sum_r r P_r and the r=0 projector from the synthesis blocks
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(dk, dk);
    Eigen::MatrixXd P0 = Eigen::MatrixXd::Zero(dk, dk);
    off = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      int w = static_cast<int>(blocks[bi].cols());
      Eigen::MatrixXd Pr = W.middleCols(off, w) * synthesis_inv_[k].middleRows(off, w);
      R += lv[bi] * Pr;
      if (lv[bi] == 0) P0 = Pr;
      off += w;
    }
    weight_R_[k] = R;
    prim_proj_[k] = P0;
  }
}

int SymplecticModel::primitive_dim(int k) const {
  if (k < 0 || k > n_) return 0;
  return static_cast<int>(prim_basis_[k].cols());
}

const Eigen::MatrixXd& SymplecticModel::L(int k) const { return L_.at(k); }
const Eigen::MatrixXd& SymplecticModel::lambda(int k) const { return lambda_.at(k); }
const Eigen::MatrixXd& SymplecticModel::J(int k) const { return J_.at(k); }
const Eigen::MatrixXd& SymplecticModel::star(int k) const { return star_.at(k); }
const Eigen::MatrixXd& SymplecticModel::primitive_basis(int k) const { return prim_basis_.at(k); }
const Eigen::MatrixXd& SymplecticModel::primitive_projector(int k) const { return prim_proj_.at(k); }
const Eigen::MatrixXd& SymplecticModel::weight_R(int k) const { return weight_R_.at(k); }
const Eigen::MatrixXd& SymplecticModel::lefschetz_synthesis(int k) const { return synthesis_.at(k); }
const std::vector<int>& SymplecticModel::lefschetz_levels(int k) const { return levels_.at(k); }

FiberForm apply_L(const SymplecticModel& m, const FiberForm& a) {
  if (a.degree + 2 > 2 * m.n()) throw std::invalid_argument("apply_L: degree bound");
  return FiberForm(a.n, a.degree + 2, m.L(a.degree) * a.coeffs);
}

FiberForm apply_lambda(const SymplecticModel& m, const FiberForm& a) {
  if (a.degree < 2) return FiberForm(a.n, std::max(a.degree - 2, 0));
  return FiberForm(a.n, a.degree - 2, m.lambda(a.degree) * a.coeffs);
}

FiberForm apply_H(const SymplecticModel& m, const FiberForm& a) {
  return FiberForm(a.n, a.degree, m.degree_weight(a.degree) * a.coeffs);
}

FiberForm apply_J(const SymplecticModel& m, const FiberForm& a) {
  return FiberForm(a.n, a.degree, m.J(a.degree) * a.coeffs);
}

FiberForm hodge_star(const SymplecticModel& m, const FiberForm& a) {
  return FiberForm(a.n, 2 * m.n() - a.degree, m.star(a.degree) * a.coeffs);
}

double fiber_inner(const FiberForm& a, const FiberForm& b) {
  if (a.degree != b.degree || a.n != b.n) throw std::invalid_argument("fiber_inner: mismatched forms");
  return a.coeffs.dot(b.coeffs);
}

bool is_primitive(const SymplecticModel& m, const FiberForm& a, double tol) {
  if (a.degree > m.n()) return false;
  if (a.degree < 2) return true;
  return (m.lambda(a.degree) * a.coeffs).norm() <= tol * std::max(a.coeffs.norm(), 1e-300);
}

LefschetzComponents lefschetz_decompose(const SymplecticModel& m, const FiberForm& a) {
  const Eigen::MatrixXd& Winv = m.synthesis_inv_.at(a.degree);
  Eigen::VectorXd x = Winv * a.coeffs;
  LefschetzComponents comps;
  int off = 0;
  const auto& lv = m.lefschetz_levels(a.degree);
  for (int r : lv) {
    int s = a.degree - 2 * r;
    int w = m.primitive_dim(s);
    FiberForm B(a.n, s, m.primitive_basis(s) * x.segment(off, w));
    comps.push_back({r, std::move(B)});
    off += w;
  }
  return comps;
}

FiberForm lefschetz_reassemble(const SymplecticModel& m, const LefschetzComponents& comps) {
  if (comps.empty()) throw std::invalid_argument("lefschetz_reassemble: empty components");
  int k = comps.front().primitive_part.degree + 2 * comps.front().r;
  FiberForm out(comps.front().primitive_part.n, k);
  for (const auto& c : comps) {
    double fact = 1.0;
    for (int t = 1; t <= c.r; ++t) fact *= t;
    Eigen::VectorXd v = c.primitive_part.coeffs / fact;
    int s = c.primitive_part.degree;
    for (int t = 0; t < c.r; ++t) {
      v = m.L(s) * v;
      s += 2;
    }
    if (s != k) throw std::invalid_argument("lefschetz_reassemble: inconsistent degrees");
    out.coeffs += v;
  }
  return out;
}

FiberForm primitive_project(const SymplecticModel& m, const FiberForm& a) {
  if (a.degree > m.n()) throw std::invalid_argument("primitive_project: degree exceeds n");
  return FiberForm(a.n, a.degree, m.primitive_projector(a.degree) * a.coeffs);
}

}  // namespace symphodge
