#include "symphodge/operators.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include "symphodge/symbols.hpp"

namespace symphodge {

std::string op_tag_name(OpTag tag) {
  switch (tag) {
    case OpTag::d: return "d";
    case OpTag::dstar: return "dstar";
    case OpTag::dlam: return "dlam";
    case OpTag::dlamstar: return "dlamstar";
    case OpTag::dplus: return "dplus";
    case OpTag::dminus: return "dminus";
    case OpTag::dminusprime: return "dminusprime";
    case OpTag::dplusstar: return "dplusstar";
    case OpTag::dminusstar: return "dminusstar";
    case OpTag::lap_plus: return "lap_plus";
    case OpTag::lap_minus: return "lap_minus";
    case OpTag::lap_pp: return "lap_pp";
    case OpTag::lap_mm: return "lap_mm";
    case OpTag::lap_ddlam: return "lap_ddlam";
    case OpTag::lap_dplusdlam: return "lap_dplusdlam";
  }
  return "?";
}

const std::vector<double>& StencilTable::centered(int order) {
  static const std::vector<double> c2 = {-0.5, 0.0, 0.5};
  static const std::vector<double> c4 = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  if (order == 2) return c2;
  if (order == 4) return c4;
  throw std::invalid_argument("StencilTable: order must be 2 or 4");
}

const std::vector<std::vector<double>>& StencilTable::left_closure(int order) {
  static const std::vector<std::vector<double>> l2 = {
      {-1.5, 2.0, -0.5},
  };
  static const std::vector<std::vector<double>> l4 = {
      {-25.0 / 12, 4.0, -3.0, 4.0 / 3, -0.25},
      {-0.25, -5.0 / 6, 1.5, -0.5, 1.0 / 12},
  };
  if (order == 2) return l2;
  if (order == 4) return l4;
  throw std::invalid_argument("StencilTable: order must be 2 or 4");
}

OperatorFactory::OperatorFactory(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model)
    : grid_(std::move(grid)), model_(std::move(model)), rho_(make_rho(*grid_)) {
  if (grid_->n() != model_->n()) throw std::invalid_argument("OperatorFactory: grid/model dimension mismatch");
}

SpMat OperatorFactory::build_axis_derivative(int axis) const {
  const int N = grid_->num_nodes();
  const int order = grid_->stencil_order();
  const double h = grid_->spacing(axis);
  const auto& c = StencilTable::centered(order);
  const int w = order / 2;
  const int len = grid_->shape()[axis];

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(N) * c.size());
  for (int node = 0; node < N; ++node) {
    auto idx = grid_->node_coords(node);
    int i = idx[axis];
    auto neighbor = [&](int j) {
      auto nidx = idx;
      nidx[axis] = j;
      return grid_->node_index(nidx);
    };
    if (grid_->axis_periodic(axis)) {
      for (int o = -w; o <= w; ++o) {
        double coef = c[o + w];
        if (coef == 0.0) continue;
        int j = ((i + o) % len + len) % len;
        trips.emplace_back(node, neighbor(j), coef / h);
      }
    } else {
      const auto& closure = StencilTable::left_closure(order);
      int width = static_cast<int>(closure.size());
      if (i < width) {
        const auto& row = closure[i];
        for (std::size_t j = 0; j < row.size(); ++j)
          if (row[j] != 0.0) trips.emplace_back(node, neighbor(static_cast<int>(j)), row[j] / h);
      } else if (i >= len - width) {
        // mirrored closure with sign flip
        const auto& row = closure[len - 1 - i];
        for (std::size_t j = 0; j < row.size(); ++j)
          if (row[j] != 0.0) trips.emplace_back(node, neighbor(len - 1 - static_cast<int>(j)), -row[j] / h);
      } else {
        for (int o = -w; o <= w; ++o) {
          double coef = c[o + w];
          if (coef == 0.0) continue;
          trips.emplace_back(node, neighbor(i + o), coef / h);
        }
      }
    }
  }
  SpMat D(N, N);
  D.setFromTriplets(trips.begin(), trips.end());
  D.makeCompressed();
  return D;
}

const SpMat& OperatorFactory::axis_derivative(int axis) {
  auto it = axis_d_.find(axis);
  if (it == axis_d_.end()) it = axis_d_.emplace(axis, build_axis_derivative(axis)).first;
  return it->second;
}

SpMat OperatorFactory::lift_fiber(const Eigen::MatrixXd& F) const {
  const int N = grid_->num_nodes();
  const long rows = static_cast<long>(N) * F.rows();
  const long cols = static_cast<long>(N) * F.cols();
  std::vector<Eigen::Triplet<double>> trips;
  int nnz = 0;
  for (int r = 0; r < F.rows(); ++r)
    for (int c = 0; c < F.cols(); ++c)
      if (F(r, c) != 0.0) ++nnz;
  trips.reserve(static_cast<std::size_t>(N) * nnz);
  for (int node = 0; node < N; ++node)
    for (int r = 0; r < F.rows(); ++r)
      for (int c = 0; c < F.cols(); ++c)
        if (F(r, c) != 0.0)
          trips.emplace_back(node * static_cast<int>(F.rows()) + r, node * static_cast<int>(F.cols()) + c, F(r, c));
  SpMat M(rows, cols);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

SpMat OperatorFactory::mass_matrix(int k) const {
  const int N = grid_->num_nodes();
  const int fd = model_->fiber_dim(k);
  SpMat M(static_cast<long>(N) * fd, static_cast<long>(N) * fd);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(N) * fd);
  const auto& w = grid_->quadrature_weights();
  for (int node = 0; node < N; ++node)
    for (int c = 0; c < fd; ++c) trips.emplace_back(node * fd + c, node * fd + c, w[node]);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

SpMat OperatorFactory::rho_matrix(int k) const {
  const int N = grid_->num_nodes();
  const int fd = model_->fiber_dim(k);
  SpMat M(static_cast<long>(N) * fd, static_cast<long>(N) * fd);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(N) * fd);
  for (int node = 0; node < N; ++node)
    for (int c = 0; c < fd; ++c) trips.emplace_back(node * fd + c, node * fd + c, rho_.values[node]);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

const SpMat& OperatorFactory::exterior_d(int k) {
  auto it = d_.find(k);
  if (it != d_.end()) return it->second;
  const int dim = grid_->dimension();
  const int fd_in = model_->fiber_dim(k);
  const int fd_out = model_->fiber_dim(k + 1);
  const int N = grid_->num_nodes();
  SpMat out(static_cast<long>(N) * fd_out, static_cast<long>(N) * fd_in);
  for (int a = 0; a < dim && fd_out > 0; ++a) {
    Eigen::MatrixXd Ea = wedge_matrix(model_->n(), Eigen::VectorXd::Unit(dim, a), k);
    const SpMat& Da = axis_derivative(a);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(Da.nonZeros()) * 4);
    for (int cnode = 0; cnode < N; ++cnode) {
      for (SpMat::InnerIterator dit(Da, cnode); dit; ++dit) {
        int rnode = static_cast<int>(dit.row());
        double dv = dit.value();
        for (int r = 0; r < fd_out; ++r)
          for (int c = 0; c < fd_in; ++c)
            if (Ea(r, c) != 0.0) trips.emplace_back(rnode * fd_out + r, cnode * fd_in + c, Ea(r, c) * dv);
      }
    }
    SpMat term(static_cast<long>(N) * fd_out, static_cast<long>(N) * fd_in);
    term.setFromTriplets(trips.begin(), trips.end());
    out += term;
  }
  out.makeCompressed();
  return d_.emplace(k, std::move(out)).first->second;
}

const SpMat& OperatorFactory::codifferential(int k) {
  auto it = dstar_.find(k);
  if (it != dstar_.end()) return it->second;
  const int N = grid_->num_nodes();
  SpMat out;
  if (k == 0) {
    out = SpMat(0, static_cast<long>(N) * model_->fiber_dim(0));
  } else {
    // d* = -*d* on all degrees of an even-dimensional manifold
    const int dim = grid_->dimension();
    SpMat S1 = lift_fiber(model_->star(k));
    const SpMat& dd = exterior_d(dim - k);
    SpMat S2 = lift_fiber(model_->star(dim - k + 1));
    out = (-1.0) * (S2 * (dd * S1)).eval();
  }
  out.makeCompressed();
  return dstar_.emplace(k, std::move(out)).first->second;
}

const SpMat& OperatorFactory::cached(OpTag tag, int degree) {
  auto key = std::make_pair(static_cast<int>(tag), degree);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    SpMat m = build(tag, degree);
    it = cache_.emplace(key, std::move(m)).first;
  }
  return it->second;
}

SpMat OperatorFactory::build(OpTag tag, int degree) {
  const int n = model_->n();
  const int k = degree;
  const int N = grid_->num_nodes();
  auto lam = [&](int kk) { return lift_fiber(model_->lambda(kk)); };
  auto Lw = [&](int kk) { return lift_fiber(model_->L(kk)); };
  auto proj = [&](int kk) { return lift_fiber(model_->primitive_projector(kk)); };
  auto zero = [&](int k_out, int k_in) {
    return SpMat(static_cast<long>(N) * model_->fiber_dim(k_out), static_cast<long>(N) * model_->fiber_dim(k_in));
  };

  switch (tag) {
    case OpTag::d:
      return exterior_d(k);
    case OpTag::dstar:
      return codifferential(k);
    case OpTag::dlam: {
      // d Lambda - Lambda d : k -> k-1
      if (k == 0) return SpMat(0, static_cast<long>(N) * model_->fiber_dim(0));
      if (k == 2 * n) {
        SpMat out = exterior_d(k - 2) * lam(k);
        out.makeCompressed();
        return out;
      }
      SpMat t2 = lam(k + 1) * exterior_d(k);
      if (k < 2) return SpMat((-1.0) * t2);
      SpMat t1 = exterior_d(k - 2) * lam(k);
      SpMat out = t1 - t2;
      out.makeCompressed();
      return out;
    }
    case OpTag::dlamstar: {
      // L d* - d* L : k -> k+1
      if (k + 2 > 2 * n) {
        // L vanishes past the top degree, only L d* survives
        SpMat out = Lw(k - 1) * codifferential(k);
        out.makeCompressed();
        return out;
      }
      SpMat t2 = codifferential(k + 2) * Lw(k);
      if (k == 0) return SpMat((-1.0) * t2);
      SpMat t1 = Lw(k - 1) * codifferential(k);
      SpMat out = t1 - t2;
      out.makeCompressed();
      return out;
    }
    case OpTag::dminus: {
      // H^{-1} Lambda d on primitive degree k; weight n-k+1 never vanishes for k <= n
      if (k > n) throw std::invalid_argument("dminus: degree exceeds n");
      if (k == 0) return SpMat(0, static_cast<long>(N) * model_->fiber_dim(0));
      double w = 1.0 / (n - k + 1);
      SpMat out = w * (lam(k + 1) * exterior_d(k));
      out.makeCompressed();
      return out;
    }
    case OpTag::dminusprime: {
      if (k > n) throw std::invalid_argument("dminusprime: degree exceeds n");
      if (k == 0) return SpMat(0, static_cast<long>(N) * model_->fiber_dim(0));
      SpMat out = lam(k + 1) * exterior_d(k);  // (H+R) dminus = Lambda d on P^k
      out.makeCompressed();
      return out;
    }
    case OpTag::dplus: {
      // d - L H^{-1} Lambda d on primitive degree k
      if (k > n) throw std::invalid_argument("dplus: degree exceeds n");
      if (k == 0) return exterior_d(0);  // Lambda kills 1-forms
      double w = 1.0 / (n - k + 1);
      SpMat corr = Lw(k - 1) * SpMat(lam(k + 1) * exterior_d(k));
      SpMat out = exterior_d(k) - w * corr;
      out.makeCompressed();
      return out;
    }
    case OpTag::dplusstar: {
      // adjoint of dplus on primitives: d*, with an output primitive projection
      if (k > n) throw std::invalid_argument("dplusstar: degree exceeds n");
      if (k == 0) return SpMat(0, static_cast<long>(N) * model_->fiber_dim(0));
      SpMat out = proj(k - 1) * codifferential(k);
      out.makeCompressed();
      return out;
    }
    case OpTag::dminusstar: {
      // (n-k)^{-1} d* L - (n-k+1)^{-1} L d* on primitive degree k, k < n
      if (k >= n) throw std::invalid_argument("dminusstar: needs degree k < n");
      SpMat t1 = (1.0 / (n - k)) * SpMat(codifferential(k + 2) * Lw(k));
      SpMat sum = t1;
      if (k >= 1) {
        SpMat t2 = (1.0 / (n - k + 1)) * SpMat(Lw(k - 1) * codifferential(k));
        sum = t1 - t2;
      }
      SpMat out = proj(k + 1) * sum;
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_plus: {
      if (k >= n) throw std::invalid_argument("lap_plus: defined on P^k with k < n");
      SpMat out = cached(OpTag::dplusstar, k + 1) * cached(OpTag::dplus, k);
      if (k >= 1) out = out + SpMat(cached(OpTag::dplus, k - 1) * cached(OpTag::dplusstar, k));
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_minus: {
      if (k >= n) throw std::invalid_argument("lap_minus: defined on P^k with k < n");
      SpMat out = cached(OpTag::dminus, k + 1) * cached(OpTag::dminusstar, k);
      if (k >= 1) out = out + SpMat(cached(OpTag::dminusstar, k - 1) * cached(OpTag::dminus, k));
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_pp: {
      if (k != n) throw std::invalid_argument("lap_pp: defined on P^n");
      SpMat pm = cached(OpTag::dplus, n - 1) * cached(OpTag::dminus, n);              // P^n -> P^n
      SpMat pmstar = cached(OpTag::dminusstar, n - 1) * cached(OpTag::dplusstar, n);  // P^n -> P^n
      SpMat ppstar = cached(OpTag::dplus, n - 1) * cached(OpTag::dplusstar, n);       // P^n -> P^n
      SpMat out = SpMat(pmstar * pm) + SpMat(ppstar * ppstar);
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_mm: {
      if (k != n) throw std::invalid_argument("lap_mm: defined on P^n");
      SpMat pm = cached(OpTag::dplus, n - 1) * cached(OpTag::dminus, n);
      SpMat pmstar = cached(OpTag::dminusstar, n - 1) * cached(OpTag::dplusstar, n);
      SpMat mm = cached(OpTag::dminusstar, n - 1) * cached(OpTag::dminus, n);
      SpMat out = SpMat(pm * pmstar) + SpMat(mm * mm);
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_ddlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("lap_ddlam: needs 1 <= k <= 2n-1");
      SpMat t1 = cached(OpTag::dlamstar, k - 1) * SpMat(codifferential(k) * SpMat(exterior_d(k - 1) * cached(OpTag::dlam, k)));
      SpMat s = SpMat(exterior_d(k - 1) * codifferential(k)) + SpMat(cached(OpTag::dlam, k + 1) * cached(OpTag::dlamstar, k));
      SpMat out = t1 + 0.25 * SpMat(s * s);
      out.makeCompressed();
      return out;
    }
    case OpTag::lap_dplusdlam: {
      if (k < 1 || k > 2 * n - 1) throw std::invalid_argument("lap_dplusdlam: needs 1 <= k <= 2n-1");
      SpMat t1 = exterior_d(k - 1) * SpMat(cached(OpTag::dlam, k) * SpMat(cached(OpTag::dlamstar, k - 1) * codifferential(k)));
      SpMat s = SpMat(codifferential(k + 1) * exterior_d(k)) + SpMat(cached(OpTag::dlamstar, k - 1) * cached(OpTag::dlam, k));
      SpMat out = t1 + 0.25 * SpMat(s * s);
      out.makeCompressed();
      return out;
    }
  }
  (void)zero;
  throw std::invalid_argument("assemble: unknown tag");
}

LinearOpMatrix OperatorFactory::assemble(OpTag tag, int degree) {
  const int n = model_->n();
  LinearOpMatrix op;
  op.tag = tag;
  op.domain.degree = degree;
  switch (tag) {
    case OpTag::d:
      op.codomain.degree = degree + 1;
      break;
    case OpTag::dstar:
    case OpTag::dlam:
      op.codomain.degree = degree - 1;
      break;
    case OpTag::dlamstar:
      op.codomain.degree = degree + 1;
      break;
    case OpTag::dplus:
      op.domain.primitive = true;
      op.codomain = {degree + 1, true};
      break;
    case OpTag::dminus:
    case OpTag::dminusprime:
    case OpTag::dplusstar:
      op.domain.primitive = true;
      op.codomain = {degree - 1, true};
      break;
    case OpTag::dminusstar:
      op.domain.primitive = true;
      op.codomain = {degree + 1, true};
      break;
    case OpTag::lap_plus:
    case OpTag::lap_minus:
      if (degree >= n) throw std::invalid_argument("assemble: second-order Laplacians need k < n");
      op.domain.primitive = true;
      op.codomain = {degree, true};
      break;
    case OpTag::lap_pp:
    case OpTag::lap_mm:
      if (degree != n) throw std::invalid_argument("assemble: fourth-order Laplacians live on P^n");
      op.domain.primitive = true;
      op.codomain = {degree, true};
      break;
    case OpTag::lap_ddlam:
    case OpTag::lap_dplusdlam:
      op.codomain = {degree, false};
      break;
  }
  if (degree < 0 || degree > 2 * n) throw std::invalid_argument("assemble: degree out of range");
  if (op.domain.primitive && degree > n) throw std::invalid_argument("assemble: primitive domain needs k <= n");
  op.mat = cached(tag, degree);
  return op;
}

FormField OperatorFactory::apply(const LinearOpMatrix& op, const FormField& f) {
  if (f.degree != op.domain.degree) throw std::invalid_argument("apply: degree mismatch");
  FormField out(grid_, model_, std::max(op.codomain.degree, 0));
  if (op.mat.rows() == 0 || op.codomain.degree < 0) return out;
  out.values = op.mat * f.values;
  out.primitive_flag = op.codomain.primitive && f.primitive_flag;
  return out;
}

double OperatorFactory::greens_defect(OpTag tag, const FormField& phi, const FormField& psi) {
  OpTag adj;
  switch (tag) {
    case OpTag::d: adj = OpTag::dstar; break;
    case OpTag::dlam: adj = OpTag::dlamstar; break;
    case OpTag::dplus: adj = OpTag::dplusstar; break;
    case OpTag::dminus: adj = OpTag::dminusstar; break;
    default: throw std::invalid_argument("greens_defect: tag must be first-order");
  }
  LinearOpMatrix P = assemble(tag, phi.degree);
  if (psi.degree != P.codomain.degree) throw std::invalid_argument("greens_defect: psi degree mismatch");
  LinearOpMatrix Padj = assemble(adj, psi.degree);
  FormField Pphi = apply(P, phi);
  FormField Padjpsi = apply(Padj, psi);
  double interior = inner_product(Pphi, psi) - inner_product(phi, Padjpsi);

  // boundary term: integral over dM of <sigma_P(d rho) phi, psi>
  double bterm = 0.0;
  for (int face = 0; face < 2; ++face) {
    Eigen::VectorXd conormal = Eigen::VectorXd::Zero(grid_->dimension());
    conormal[0] = (face == 0) ? -1.0 : 1.0;
    Eigen::MatrixXd sym = boundary_symbol(*model_, tag, phi.degree, conormal);
    if (sym.rows() == 0) continue;
    BoundaryTrace tphi = restrict_boundary(phi, face);
    BoundaryTrace tpsi = restrict_boundary(psi, face);
    Eigen::MatrixXd sphi = tphi.values * sym.transpose();
    bterm += grid_->face_weight() * (sphi.array() * tpsi.values.array()).sum();
  }
  return std::abs(interior - bterm);
}

void OperatorFactory::export_coo(const LinearOpMatrix& op, const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_coo: cannot open " + path);
  os << "# symphodge COO export\n";
  os << "# tag " << op_tag_name(op.tag) << " domain_degree " << op.domain.degree << " domain_primitive "
     << (op.domain.primitive ? 1 : 0) << " codomain_degree " << op.codomain.degree << " codomain_primitive "
     << (op.codomain.primitive ? 1 : 0) << "\n";
  os << op.mat.rows() << " " << op.mat.cols() << " " << op.mat.nonZeros() << "\n";
  os.precision(17);
  for (int c = 0; c < op.mat.outerSize(); ++c)
    for (SpMat::InnerIterator it(op.mat, c); it; ++it) os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace symphodge
