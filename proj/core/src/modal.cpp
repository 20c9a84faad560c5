#include "symphodge/modal.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <limits>
#include <stdexcept>

namespace symphodge {

namespace {
const double kPi = 3.14159265358979323846;
using Cplx = std::complex<double>;
}  // namespace

ModalEngine::ModalEngine(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model)
    : grid_(std::move(grid)), model_(std::move(model)) {
  n1_ = grid_->shape()[0];
  num_modes_ = grid_->face_num_nodes();
  for (int a = 1; a < grid_->dimension(); ++a) periodic_shape_.push_back(grid_->shape()[a]);

  for (int N : periodic_shape_) {
    CMat F(N, N);
    for (int m = 0; m < N; ++m)
      for (int p = 0; p < N; ++p) F(m, p) = std::exp(Cplx(0.0, -2.0 * kPi * m * p / N)) / std::sqrt(double(N));
    axis_dft_.push_back(std::move(F));
  }

  // bounded-axis derivative (same closures as the global assembly)
  const int order = grid_->stencil_order();
  const double h = grid_->spacing(0);
  const auto& c = StencilTable::centered(order);
  const auto& closure = StencilTable::left_closure(order);
  const int w = order / 2;
  const int width = static_cast<int>(closure.size());
  D1_ = Eigen::MatrixXd::Zero(n1_, n1_);
  for (int i = 0; i < n1_; ++i) {
    if (i < width) {
      for (std::size_t j = 0; j < closure[i].size(); ++j) D1_(i, static_cast<int>(j)) = closure[i][j] / h;
    } else if (i >= n1_ - width) {
      const auto& row = closure[n1_ - 1 - i];
      for (std::size_t j = 0; j < row.size(); ++j) D1_(i, n1_ - 1 - static_cast<int>(j)) = -row[j] / h;
    } else {
      for (int o = -w; o <= w; ++o) D1_(i, i + o) = c[o + w] / h;
    }
  }

  periodic_weight_ = 1.0;
  for (int a = 1; a < grid_->dimension(); ++a) periodic_weight_ *= grid_->spacing(a);
  mass_profile_ = Eigen::VectorXd::Zero(n1_);
  for (int i = 0; i < n1_; ++i)
    mass_profile_[i] = grid_->spacing(0) * ((i == 0 || i == n1_ - 1) ? 0.5 : 1.0) * periodic_weight_;
}

std::vector<int> ModalEngine::mode_tuple(int mode) const {
  std::vector<int> t(periodic_shape_.size());
  for (int a = static_cast<int>(periodic_shape_.size()) - 1; a >= 0; --a) {
    t[a] = mode % periodic_shape_[a];
    mode /= periodic_shape_[a];
  }
  return t;
}

int ModalEngine::conjugate_mode(int mode) const {
  auto t = mode_tuple(mode);
  int out = 0;
  for (std::size_t a = 0; a < t.size(); ++a) {
    int N = periodic_shape_[a];
    int cm = (N - t[a]) % N;
    out = out * N + cm;
  }
  return out;
}

std::complex<double> ModalEngine::axis_symbol(int axis, int m) const {
  // symbol of the centered first-derivative stencil at one Fourier mode
  int N = periodic_shape_[axis - 1];
  double h = grid_->spacing(axis);
  double theta = 2.0 * kPi * m / N;
  if (grid_->stencil_order() == 2) return Cplx(0.0, std::sin(theta) / h);
  return Cplx(0.0, (8.0 * std::sin(theta) - std::sin(2.0 * theta)) / (6.0 * h));
}

Eigen::VectorXd ModalEngine::mass_diag(int fiber_dim) const {
  Eigen::VectorXd m(n1_ * fiber_dim);
  for (int i = 0; i < n1_; ++i)
    for (int c = 0; c < fiber_dim; ++c) m[i * fiber_dim + c] = mass_profile_[i];
  return m;
}

void ModalEngine::transform_axis(std::vector<CVec>& data, int axis, bool inverse, int fiber_dim) const {
  // data is indexed by the flattened periodic index; transform one axis
  const int N = periodic_shape_[axis];
  int stride = 1;
  for (std::size_t a = axis + 1; a < periodic_shape_.size(); ++a) stride *= periodic_shape_[a];
  const int blocks = num_modes_ / (N * stride);
  const CMat& F = axis_dft_[axis];
  std::vector<CVec> scratch(N);
  for (int b = 0; b < blocks; ++b) {
    for (int s = 0; s < stride; ++s) {
      int base = b * N * stride + s;
      for (int j = 0; j < N; ++j) scratch[j] = data[base + j * stride];
      for (int m = 0; m < N; ++m) {
        CVec acc = CVec::Zero(n1_ * fiber_dim);
        for (int j = 0; j < N; ++j) acc += (inverse ? std::conj(F(m, j)) : F(m, j)) * scratch[j];
        data[base + m * stride] = std::move(acc);
      }
    }
  }
}

std::vector<CVec> ModalEngine::forward(const FormField& f) const {
  const int fd = f.fiber_dim();
  std::vector<CVec> data(num_modes_);
  for (int p = 0; p < num_modes_; ++p) {
    CVec v(n1_ * fd);
    for (int i1 = 0; i1 < n1_; ++i1) {
      int node = i1 * num_modes_ + p;
      for (int c = 0; c < fd; ++c) v[i1 * fd + c] = f.values[static_cast<long>(node) * fd + c];
    }
    data[p] = std::move(v);
  }
  for (std::size_t a = 0; a < periodic_shape_.size(); ++a) transform_axis(data, static_cast<int>(a), false, fd);
  return data;
}

FormField ModalEngine::inverse(const std::vector<CVec>& modes, int degree, bool primitive_flag) const {
  const int fd = model_->fiber_dim(degree);
  std::vector<CVec> data = modes;
  for (std::size_t a = 0; a < periodic_shape_.size(); ++a) transform_axis(data, static_cast<int>(a), true, fd);
  FormField f(grid_, model_, degree);
  for (int p = 0; p < num_modes_; ++p)
    for (int i1 = 0; i1 < n1_; ++i1) {
      int node = i1 * num_modes_ + p;
      for (int c = 0; c < fd; ++c) f.values[static_cast<long>(node) * fd + c] = data[p][i1 * fd + c].real();
    }
  f.primitive_flag = primitive_flag;
  return f;
}

FormField ModalEngine::lift_real(const CVec& v, int mode, int degree, bool imag_part) const {
  const int fd = model_->fiber_dim(degree);
  std::vector<CVec> data(num_modes_, CVec::Zero(n1_ * fd));
  int cm = conjugate_mode(mode);
  if (cm == mode) {
    data[mode] = v;  // self-conjugate: v is real up to rounding
  } else {
    double s = 1.0 / std::sqrt(2.0);
    data[mode] = (imag_part ? Cplx(0.0, -s) : Cplx(s, 0.0)) * v;
    data[cm] = (imag_part ? Cplx(0.0, s) : Cplx(s, 0.0)) * v.conjugate();
  }
  return inverse(data, degree);
}

// ---- ModeContext ----

ModeContext::ModeContext(const ModalEngine& eng, int mode) : eng_(eng), mode_(mode) {}

CMat ModeContext::lift(const Eigen::MatrixXd& F) const {
  const int n1 = eng_.n1();
  CMat M = CMat::Zero(n1 * F.rows(), n1 * F.cols());
  for (int i = 0; i < n1; ++i)
    M.block(i * F.rows(), i * F.cols(), F.rows(), F.cols()) = F.cast<Cplx>();
  return M;
}

const CMat& ModeContext::exterior_d(int k) {
  auto it = d_.find(k);
  if (it != d_.end()) return it->second;
  const auto& model = eng_.model();
  const int dim = 2 * model.n();
  const int n1 = eng_.n1();
  const int fi = model.fiber_dim(k);
  const int fo = model.fiber_dim(k + 1);
  CMat out = CMat::Zero(n1 * fo, n1 * fi);
  auto t = eng_.mode_tuple(mode_);
  for (int a = 0; a < dim && fo > 0; ++a) {
    Eigen::MatrixXd Ea = wedge_matrix(model.n(), Eigen::VectorXd::Unit(dim, a), k);
    if (a == 0) {
      const Eigen::MatrixXd& D1 = eng_.bounded_derivative();
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n1; ++j)
          if (D1(i, j) != 0.0) out.block(i * fo, j * fi, fo, fi) += D1(i, j) * Ea.cast<Cplx>();
    } else {
      Cplx s = eng_.axis_symbol(a, t[a - 1]);
      if (s != Cplx(0.0, 0.0))
        for (int i = 0; i < n1; ++i) out.block(i * fo, i * fi, fo, fi) += s * Ea.cast<Cplx>();
    }
  }
  return d_.emplace(k, std::move(out)).first->second;
}

const CMat& ModeContext::codifferential(int k) {
  auto it = dstar_.find(k);
  if (it != dstar_.end()) return it->second;
  const auto& model = eng_.model();
  CMat out;
  if (k == 0) {
    out = CMat::Zero(0, eng_.n1() * model.fiber_dim(0));
  } else {
    const int dim = 2 * model.n();
    out = -(lift(model.star(dim - k + 1)) * exterior_d(dim - k) * lift(model.star(k)));
  }
  return dstar_.emplace(k, std::move(out)).first->second;
}

const CMat& ModeContext::op(OpTag tag, int degree) {
  auto key = std::make_pair(static_cast<int>(tag), degree);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, build(tag, degree)).first;
  return it->second;
}

CMat ModeContext::build(OpTag tag, int degree) {
  const auto& model = eng_.model();
  const int n = model.n();
  const int k = degree;
  const int n1 = eng_.n1();
  auto lam = [&](int kk) { return lift(model.lambda(kk)); };
  auto Lw = [&](int kk) { return lift(model.L(kk)); };
  auto proj = [&](int kk) { return lift(model.primitive_projector(kk)); };

  switch (tag) {
    case OpTag::d:
      return exterior_d(k);
    case OpTag::dstar:
      return codifferential(k);
    case OpTag::dlam: {
      if (k == 0) return CMat::Zero(0, n1 * model.fiber_dim(0));
      if (k == 2 * n) return exterior_d(k - 2) * lam(k);
      CMat t2 = lam(k + 1) * exterior_d(k);
      if (k < 2) return CMat(-t2);
      return CMat(exterior_d(k - 2) * lam(k) - t2);
    }
    case OpTag::dlamstar: {
      if (k + 2 > 2 * n) return Lw(k - 1) * codifferential(k);
      CMat t2 = codifferential(k + 2) * Lw(k);
      if (k == 0) return CMat(-t2);
      return CMat(Lw(k - 1) * codifferential(k) - t2);
    }
    case OpTag::dminus: {
      if (k > n) throw std::invalid_argument("mode dminus: degree exceeds n");
      if (k == 0) return CMat::Zero(0, n1 * model.fiber_dim(0));
      return CMat((1.0 / (n - k + 1)) * (lam(k + 1) * exterior_d(k)));
    }
    case OpTag::dminusprime: {
      if (k > n) throw std::invalid_argument("mode dminusprime: degree exceeds n");
      if (k == 0) return CMat::Zero(0, n1 * model.fiber_dim(0));
      return CMat(lam(k + 1) * exterior_d(k));
    }
    case OpTag::dplus: {
      if (k > n) throw std::invalid_argument("mode dplus: degree exceeds n");
      if (k == 0) return exterior_d(0);
      double w = 1.0 / (n - k + 1);
      return CMat(exterior_d(k) - w * (Lw(k - 1) * (lam(k + 1) * exterior_d(k))));
    }
    case OpTag::dplusstar: {
      if (k > n) throw std::invalid_argument("mode dplusstar: degree exceeds n");
      if (k == 0) return CMat::Zero(0, n1 * model.fiber_dim(0));
      return CMat(proj(k - 1) * codifferential(k));
    }
    case OpTag::dminusstar: {
      if (k >= n) throw std::invalid_argument("mode dminusstar: needs k < n");
      CMat t1 = (1.0 / (n - k)) * (codifferential(k + 2) * Lw(k));
      if (k >= 1) t1 -= (1.0 / (n - k + 1)) * (Lw(k - 1) * codifferential(k));
      return CMat(proj(k + 1) * t1);
    }
    case OpTag::lap_plus: {
      if (k >= n) throw std::invalid_argument("mode lap_plus: needs k < n");
      CMat out = op(OpTag::dplusstar, k + 1) * op(OpTag::dplus, k);
      if (k >= 1) out += op(OpTag::dplus, k - 1) * op(OpTag::dplusstar, k);
      return out;
    }
    case OpTag::lap_minus: {
      if (k >= n) throw std::invalid_argument("mode lap_minus: needs k < n");
      CMat out = op(OpTag::dminus, k + 1) * op(OpTag::dminusstar, k);
      if (k >= 1) out += op(OpTag::dminusstar, k - 1) * op(OpTag::dminus, k);
      return out;
    }
    case OpTag::lap_pp: {
      if (k != n) throw std::invalid_argument("mode lap_pp: lives on P^n");
      CMat pm = op(OpTag::dplus, n - 1) * op(OpTag::dminus, n);
      CMat pmstar = op(OpTag::dminusstar, n - 1) * op(OpTag::dplusstar, n);
      CMat pp = op(OpTag::dplus, n - 1) * op(OpTag::dplusstar, n);
      return CMat(pmstar * pm + pp * pp);
    }
    case OpTag::lap_mm: {
      if (k != n) throw std::invalid_argument("mode lap_mm: lives on P^n");
      CMat pm = op(OpTag::dplus, n - 1) * op(OpTag::dminus, n);
      CMat pmstar = op(OpTag::dminusstar, n - 1) * op(OpTag::dplusstar, n);
      CMat mm = op(OpTag::dminusstar, n - 1) * op(OpTag::dminus, n);
      return CMat(pm * pmstar + mm * mm);
    }
    case OpTag::lap_ddlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("mode lap_ddlam: needs 1 <= k <= 2n-1");
      CMat t1 = op(OpTag::dlamstar, k - 1) * (codifferential(k) * (exterior_d(k - 1) * op(OpTag::dlam, k)));
      CMat s = exterior_d(k - 1) * codifferential(k) + op(OpTag::dlam, k + 1) * op(OpTag::dlamstar, k);
      return CMat(t1 + 0.25 * s * s);
    }
    case OpTag::lap_dplusdlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("mode lap_dplusdlam: needs 1 <= k <= 2n-1");
      CMat t1 = exterior_d(k - 1) * (op(OpTag::dlam, k) * (op(OpTag::dlamstar, k - 1) * codifferential(k)));
      CMat s = codifferential(k + 1) * exterior_d(k) + op(OpTag::dlamstar, k - 1) * op(OpTag::dlam, k);
      return CMat(t1 + 0.25 * s * s);
    }
  }
  throw std::invalid_argument("mode build: unknown tag");
}

CMat ModeContext::chain(const OpChain& c) {
  if (c.ops.empty()) throw std::invalid_argument("mode chain: empty");
  CMat M = op(c.ops.front().first, c.ops.front().second);
  for (std::size_t i = 1; i < c.ops.size(); ++i) M = op(c.ops[i].first, c.ops[i].second) * M;
  if (c.scale != 1.0) M *= c.scale;
  return M;
}

CMat ModeContext::bc_rows(BcTag tag, int degree) {
  const auto& model = eng_.model();
  const int n1 = eng_.n1();
  auto clauses = bc_clauses(model, tag, degree);
  std::vector<CMat> blocks;
  long rows = 0;
  const int fd = model.fiber_dim(degree);
  for (const auto& clause : clauses) {
    int fd_inner = model.fiber_dim(clause.inner_degree);
    CMat pre = CMat::Identity(n1 * fd_inner, n1 * fd);
    if (!clause.chain.empty()) {
      pre = op(clause.chain.front().first, clause.chain.front().second);
      for (std::size_t i = 1; i < clause.chain.size(); ++i)
        pre = op(clause.chain[i].first, clause.chain[i].second) * pre;
    }
    for (int face = 0; face < 2; ++face) {
      Eigen::MatrixXd S = clause_face_rows(model, clause, face);
      if (S.rows() == 0) continue;
      int i1 = (face == 0) ? 0 : n1 - 1;
      CMat T = CMat::Zero(S.rows(), n1 * fd_inner);
      T.block(0, i1 * fd_inner, S.rows(), fd_inner) = S.cast<Cplx>();
      blocks.push_back(T * pre);
      rows += S.rows();
    }
  }
  CMat out = CMat::Zero(rows, n1 * fd);
  long off = 0;
  for (const auto& b : blocks) {
    out.middleRows(off, b.rows()) = b;
    off += b.rows();
  }
  return out;
}

CMat ModeContext::space_basis(const FieldSpace& space) {
  const auto& model = eng_.model();
  const int n1 = eng_.n1();
  CMat E;
  if (space.primitive) {
    E = lift(model.primitive_basis(space.degree));
  } else {
    int fd = model.fiber_dim(space.degree);
    E = CMat::Identity(n1 * fd, n1 * fd);
  }
  // stack constraint rows and reduce (kernel in the mass metric)
  std::vector<CMat> rows;
  long r = 0;
  for (BcTag tag : space.bcs) {
    CMat b = bc_rows(tag, space.degree);
    r += b.rows();
    rows.push_back(std::move(b));
  }
  Eigen::VectorXd mr = eng_.mass_diag(static_cast<int>(E.cols() / n1));
  Eigen::VectorXd mr_isqrt = mr.array().rsqrt();
  if (r == 0) return E * mr_isqrt.asDiagonal();

  CMat C(r, E.cols());
  long off = 0;
  for (const auto& b : rows) {
    C.middleRows(off, b.rows()) = b * E;
    off += b.rows();
  }
  CMat Cw = C * mr_isqrt.asDiagonal();
  Eigen::JacobiSVD<CMat> svd(Cw, Eigen::ComputeFullV);
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10 * std::max(smax, 1.0)) ++rank;
  CMat Z = mr_isqrt.asDiagonal() * svd.matrixV().rightCols(svd.matrixV().cols() - rank);
  return E * Z;
}

// ---- solves ----

int ModalEngine::space_dimension(const FieldSpace& space) const {
  int total = 0;
  for (int m = 0; m < num_modes_; ++m) {
    ModeContext ctx(*this, m);
    total += static_cast<int>(ctx.space_basis(space).cols());
  }
  return total;
}

namespace {

struct ModeNull {
  int mode;
  CMat basis;        // null vectors in full per-mode coordinates
  Eigen::VectorXd values;  // their singular values
};

}  // namespace

NullspaceResult ModalEngine::nullspace(const NullspaceProblem& problem, bool want_basis) const {
  const FieldSpace& sp = problem.space;
  std::vector<std::vector<double>> all_sv(num_modes_);
  std::vector<ModeNull> nulls;
  double smax = 0.0;

  std::vector<std::pair<CMat, CMat>> mode_data(num_modes_);  // (K, ZE)
  for (int m = 0; m < num_modes_; ++m) {
    ModeContext ctx(*this, m);
    CMat ZE = ctx.space_basis(sp);
    long rows = 0;
    std::vector<CMat> blocks;
    for (const auto& c : problem.forms) {
      CMat A = ctx.chain(c);
      int fo = static_cast<int>(A.rows() / n1_);
      Eigen::VectorXd wts = mass_diag(std::max(fo, 0)).array().sqrt();
      CMat blk = wts.asDiagonal() * (A * ZE);
      rows += blk.rows();
      blocks.push_back(std::move(blk));
    }
    CMat K(rows, ZE.cols());
    long off = 0;
    for (const auto& b : blocks) {
      K.middleRows(off, b.rows()) = b;
      off += b.rows();
    }
    mode_data[m] = {std::move(K), std::move(ZE)};
  }

  // first pass for the global scale
  std::vector<Eigen::JacobiSVD<CMat>> svds(num_modes_);
  for (int m = 0; m < num_modes_; ++m) {
    svds[m] = Eigen::JacobiSVD<CMat>(mode_data[m].first, Eigen::ComputeFullV);
    if (svds[m].singularValues().size()) smax = std::max(smax, svds[m].singularValues()[0]);
  }

  NullspaceResult res;
  res.diag.largest = smax;
  double thresh = problem.absolute_cutoff ? problem.cutoff : problem.cutoff * std::max(smax, 1e-300);
  double largest_below = 0.0, smallest_above = std::numeric_limits<double>::infinity();
  std::vector<double> zeros;
  for (int m = 0; m < num_modes_; ++m) {
    const auto& sv = svds[m].singularValues();
    int cols = static_cast<int>(mode_data[m].second.cols());
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
      if (sv[i] > thresh) {
        ++rank;
        smallest_above = std::min(smallest_above, sv[i]);
      } else {
        largest_below = std::max(largest_below, sv[i]);
      }
    }
    int nullity = cols - rank;
    res.dimension += nullity;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] <= thresh) zeros.push_back(sv[i]);
    for (int i = static_cast<int>(sv.size()); i < cols; ++i) zeros.push_back(0.0);
    if (want_basis && nullity > 0) {
      ModeNull mn;
      mn.mode = m;
      mn.basis = mode_data[m].second * svds[m].matrixV().rightCols(nullity);
      mn.values = Eigen::VectorXd::Zero(nullity);
      for (int i = 0; i < nullity; ++i) {
        int svi = static_cast<int>(sv.size()) - 1 - i;
        mn.values[i] = (svi >= 0) ? sv[svi] : 0.0;
      }
      nulls.push_back(std::move(mn));
    }
  }
  res.diag.largest_below = largest_below;
  res.diag.smallest_above = std::isfinite(smallest_above) ? smallest_above : 0.0;
  res.diag.ratio = (largest_below > 0.0 && std::isfinite(smallest_above)) ? smallest_above / largest_below
                                                                          : std::numeric_limits<double>::infinity();
  res.diag.ambiguous = res.diag.ratio < 10.0;
  std::sort(zeros.rbegin(), zeros.rend());
  res.small_values = Eigen::VectorXd::Zero(static_cast<int>(zeros.size()));
  for (std::size_t i = 0; i < zeros.size(); ++i)
    res.small_values[static_cast<int>(i)] = zeros[i] / std::max(smax, 1e-300);

  if (want_basis) {
    for (const auto& mn : nulls) {
      int cm = conjugate_mode(mn.mode);
      if (cm < mn.mode) continue;  // handled with the partner
      for (int j = 0; j < mn.basis.cols(); ++j) {
        if (cm == mn.mode) {
          // self-conjugate mode: the problem is real, take the real span
          // (null vectors may carry a global phase; rotate it away)
          CVec v = mn.basis.col(j);
          int imax;
          v.cwiseAbs().maxCoeff(&imax);
          Cplx ph = v[imax] / std::abs(v[imax]);
          v /= ph;
          res.basis.push_back(lift_real(v, mn.mode, sp.degree, false));
          res.basis.back().primitive_flag = sp.primitive;
        } else {
          res.basis.push_back(lift_real(mn.basis.col(j), mn.mode, sp.degree, false));
          res.basis.back().primitive_flag = sp.primitive;
          res.basis.push_back(lift_real(mn.basis.col(j), mn.mode, sp.degree, true));
          res.basis.back().primitive_flag = sp.primitive;
        }
      }
    }
    if (static_cast<int>(res.basis.size()) != res.dimension)
      throw std::logic_error("modal nullspace: basis assembly does not match the dimension count");
  }
  return res;
}

int ModalEngine::nullity(const NullspaceProblem& problem, CutoffDiagnostics* diag) const {
  NullspaceResult r = nullspace(problem, false);
  if (diag) *diag = r.diag;
  return r.dimension;
}

int ModalEngine::rank(const OpChain& chain, const FieldSpace& space, double cutoff, CutoffDiagnostics* diag) const {
  NullspaceProblem p;
  p.space = space;
  p.forms = {chain};
  p.cutoff = cutoff;
  int nullity_ = nullity(p, diag);
  return space_dimension(space) - nullity_;
}

// ---- joint least squares ----

class ModalEngine::LsSystem {
 public:
  int target_degree = 0;
  std::vector<LsBlock> blocks;
  struct ModeData {
    std::vector<CMat> fitted;  // chain * space basis, per block (full coordinates)
    std::vector<int> offsets;
    Eigen::JacobiSVD<CMat> svd;  // of the weighted stacked columns (min-norm LS)
    int cols = 0;
  };
  std::vector<ModeData> modes;
};

std::shared_ptr<ModalEngine::LsSystem> ModalEngine::build_ls(const std::vector<LsBlock>& blocks,
                                                             int target_degree) const {
  auto sys = std::make_shared<LsSystem>();
  sys->target_degree = target_degree;
  sys->blocks = blocks;
  sys->modes.resize(num_modes_);
  const int fd = model_->fiber_dim(target_degree);
  Eigen::VectorXd wsqrt = mass_diag(fd).array().sqrt();
  for (int m = 0; m < num_modes_; ++m) {
    ModeContext ctx(*this, m);
    auto& md = sys->modes[m];
    int total = 0;
    for (const auto& b : blocks) {
      CMat ZE = ctx.space_basis(b.space);
      CMat F = ctx.chain(b.chain) * ZE;
      md.offsets.push_back(total);
      total += static_cast<int>(F.cols());
      md.fitted.push_back(std::move(F));
    }
    md.cols = total;
    CMat G(n1_ * fd, total);
    for (std::size_t j = 0; j < md.fitted.size(); ++j)
      G.middleCols(md.offsets[j], md.fitted[j].cols()) = md.fitted[j];
    md.svd = Eigen::JacobiSVD<CMat>(wsqrt.asDiagonal() * G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  }
  return sys;
}

ModalEngine::LsOutput ModalEngine::solve_ls(const LsSystem& sys, const FormField& rhs) const {
  if (rhs.degree != sys.target_degree) throw std::invalid_argument("solve_ls: degree mismatch");
  const int fd = model_->fiber_dim(sys.target_degree);
  Eigen::VectorXd wsqrt = mass_diag(fd).array().sqrt();
  std::vector<CVec> rh = forward(rhs);
  std::vector<std::vector<CVec>> fitted(sys.blocks.size(),
                                        std::vector<CVec>(num_modes_, CVec::Zero(n1_ * fd)));
  double res2 = 0.0;
  for (int m = 0; m < num_modes_; ++m) {
    const auto& md = sys.modes[m];
    CVec b = wsqrt.asDiagonal() * rh[m];
    if (md.cols == 0) {
      res2 += b.squaredNorm();
      continue;
    }
    CVec y = md.svd.solve(b);
    CVec total = CVec::Zero(n1_ * fd);
    for (std::size_t j = 0; j < sys.blocks.size(); ++j) {
      CVec uj = md.fitted[j] * y.segment(md.offsets[j], md.fitted[j].cols());
      fitted[j][m] = uj;
      total += uj;
    }
    res2 += (wsqrt.asDiagonal() * (rh[m] - total)).squaredNorm() / 1.0;
    // note: rh and total are unweighted; weight once
  }
  LsOutput out;
  out.residual = std::sqrt(std::max(res2, 0.0));
  for (std::size_t j = 0; j < sys.blocks.size(); ++j)
    out.fitted.push_back(inverse(fitted[j], sys.target_degree, false));
  return out;
}

}  // namespace symphodge
