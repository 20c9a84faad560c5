#include "symphodge/linsolve.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace symphodge {

SpMat chain_matrix(OperatorFactory& factory, const OpChain& chain) {
  if (chain.ops.empty()) throw std::invalid_argument("chain_matrix: empty chain");
  SpMat M = factory.assemble(chain.ops.front().first, chain.ops.front().second).mat;
  for (std::size_t i = 1; i < chain.ops.size(); ++i)
    M = SpMat(factory.assemble(chain.ops[i].first, chain.ops[i].second).mat * M);
  if (chain.scale != 1.0) M = SpMat(chain.scale * M);
  return M;
}

int chain_codomain_degree(const OpChain& chain) {
  auto [tag, deg] = chain.ops.back();
  switch (tag) {
    case OpTag::d:
    case OpTag::dlamstar:
    case OpTag::dminusstar:
    case OpTag::dplus:
      return deg + 1;
    case OpTag::dstar:
    case OpTag::dlam:
    case OpTag::dminus:
    case OpTag::dminusprime:
    case OpTag::dplusstar:
      return deg - 1;
    default:
      return deg;  // Laplacians preserve degree
  }
}

SpMat space_constraint_rows(OperatorFactory& factory, const FieldSpace& space) {
  std::vector<SpMat> blocks;
  long rows = 0;
  const long cols = static_cast<long>(factory.grid().num_nodes()) * factory.model().fiber_dim(space.degree);
  for (BcTag tag : space.bcs) {
    SpMat b = bc_rows(factory, tag, space.degree);
    rows += b.rows();
    blocks.push_back(std::move(b));
  }
  SpMat out(rows, cols);
  std::vector<Eigen::Triplet<double>> trips;
  long off = 0;
  for (const auto& b : blocks) {
    for (int c = 0; c < b.outerSize(); ++c)
      for (SpMat::InnerIterator it(b, c); it; ++it) trips.emplace_back(off + it.row(), it.col(), it.value());
    off += b.rows();
  }
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SpMat primitive_embedding(OperatorFactory& factory, const FieldSpace& space) {
  const auto& model = factory.model();
  if (!space.primitive) {
    long nfull = static_cast<long>(factory.grid().num_nodes()) * model.fiber_dim(space.degree);
    SpMat I(nfull, nfull);
    I.setIdentity();
    return I;
  }
  return factory.lift_fiber(model.primitive_basis(space.degree));
}

NullspaceResult dense_nullspace(OperatorFactory& factory, const NullspaceProblem& problem, int max_dense_dim) {
  auto grid = factory.grid_ptr();
  auto model = factory.model_ptr();
  const FieldSpace& sp = problem.space;

  SpMat E = primitive_embedding(factory, sp);
  const long nred = E.cols();
  if (nred > max_dense_dim) throw std::runtime_error("dense_nullspace: problem too large for the dense oracle");

  // reduced diagonal mass and its sqrt
  const auto& w = grid->quadrature_weights();
  int pdim = static_cast<int>(nred / grid->num_nodes());
  Eigen::VectorXd mass(nred), mass_sqrt(nred), mass_isqrt(nred);
  for (int node = 0; node < grid->num_nodes(); ++node)
    for (int c = 0; c < pdim; ++c) {
      mass[node * pdim + c] = w[node];
      mass_sqrt[node * pdim + c] = std::sqrt(w[node]);
      mass_isqrt[node * pdim + c] = 1.0 / std::sqrt(w[node]);
    }

  // kernel of the constraints on reduced coordinates, M-orthonormal columns
  Eigen::MatrixXd Z;
  SpMat C = space_constraint_rows(factory, sp);
  if (C.rows() == 0) {
    Z = Eigen::MatrixXd(mass_isqrt.asDiagonal());
  } else {
    Eigen::MatrixXd Cd = Eigen::MatrixXd(C) * E;  // rows x nred
    Eigen::MatrixXd Cw = Cd * mass_isqrt.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cw, Eigen::ComputeFullV);
    double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * std::max(smax, 1.0)) ++rank;
    Z = mass_isqrt.asDiagonal() * svd.matrixV().rightCols(nred - rank);
  }

  // stack the weighted forms on the kernel coordinates
  long total_rows = 0;
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& chain : problem.forms) {
    SpMat A = chain_matrix(factory, chain);
    int kout = chain_codomain_degree(chain);
    Eigen::VectorXd wout(A.rows());
    int fdout = model->fiber_dim(kout);
    for (int node = 0; node < grid->num_nodes() && fdout > 0; ++node)
      for (int c = 0; c < fdout; ++c) wout[static_cast<long>(node) * fdout + c] = std::sqrt(w[node]);
    Eigen::MatrixXd blk = wout.asDiagonal() * (Eigen::MatrixXd(A) * (E * Z));
    total_rows += blk.rows();
    blocks.push_back(std::move(blk));
  }
  Eigen::MatrixXd K(total_rows, Z.cols());
  long off = 0;
  for (const auto& b : blocks) {
    K.middleRows(off, b.rows()) = b;
    off += b.rows();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv[0] : 0.0;

  NullspaceResult res;
  res.diag.largest = smax;
  double thresh = problem.absolute_cutoff ? problem.cutoff : problem.cutoff * std::max(smax, 1e-300);
  int nz = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= thresh) ++nz;
  res.dimension = static_cast<int>(Z.cols()) - (static_cast<int>(sv.size()) - nz) + 0;
  // note: K may be wide; nullity = cols - rank
  int rank = static_cast<int>(sv.size()) - nz;
  res.dimension = static_cast<int>(Z.cols()) - rank;
  res.diag.largest_below = (nz > 0) ? sv[sv.size() - 1 - (nz - 1)] : 0.0;
  res.diag.smallest_above = (rank > 0) ? sv[rank - 1] : 0.0;
  if (rank > 0 && nz > 0 && res.diag.largest_below > 0.0)
    res.diag.ratio = res.diag.smallest_above / res.diag.largest_below;
  else
    res.diag.ratio = std::numeric_limits<double>::infinity();
  res.diag.ambiguous = res.diag.ratio < 10.0;

  res.small_values = Eigen::VectorXd::Zero(res.dimension);
  for (int i = 0; i < std::min<int>(res.dimension, nz); ++i)
    res.small_values[i] = sv[sv.size() - 1 - i] / std::max(smax, 1e-300);

  // basis: last `dimension` right singular vectors (they are M-orthonormal
  // in reduced coordinates because Z is M-orthonormal)
  for (int j = 0; j < res.dimension; ++j) {
    Eigen::VectorXd y = svd.matrixV().col(svd.matrixV().cols() - 1 - j);
    Eigen::VectorXd x = E * (Z * y);
    FormField f(grid, model, sp.degree);
    f.values = x;
    f.primitive_flag = sp.primitive;
    res.basis.push_back(std::move(f));
  }
  return res;
}

int dense_rank(OperatorFactory& factory, const OpChain& chain, const FieldSpace& space, double cutoff,
               CutoffDiagnostics* diag) {
  NullspaceProblem p;
  p.space = space;
  p.forms = {chain};
  p.cutoff = cutoff;
  NullspaceResult r = dense_nullspace(factory, p);
  if (diag) *diag = r.diag;
  // rank = reduced constrained dimension - nullity
  SpMat E = primitive_embedding(factory, space);
  SpMat C = space_constraint_rows(factory, space);
  long subdim = E.cols();
  if (C.rows() > 0) {
    Eigen::MatrixXd Cd = Eigen::MatrixXd(C) * E;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cd);
    double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * std::max(smax, 1.0)) ++rank;
    subdim -= rank;
  }
  return static_cast<int>(subdim) - r.dimension;
}

CgResult cg_least_squares(const std::vector<SpMat>& A, const std::vector<Eigen::VectorXd>& W,
                          const std::vector<Eigen::VectorXd>& b, const CgOptions& opts,
                          const std::function<void(Eigen::VectorXd&)>& project) {
  if (A.empty()) throw std::invalid_argument("cg_least_squares: no blocks");
  const long nx = A[0].cols();
  auto normal_apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nx);
    for (std::size_t j = 0; j < A.size(); ++j) {
      Eigen::VectorXd t = A[j] * x;
      t.array() *= W[j].array();
      out += A[j].transpose() * t;
    }
    return out;
  };
  // diagonal of the normal matrix for Jacobi preconditioning
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(nx);
  for (std::size_t j = 0; j < A.size(); ++j)
    for (int c = 0; c < A[j].outerSize(); ++c)
      for (SpMat::InnerIterator it(A[j], c); it; ++it) diag[it.col()] += W[j][it.row()] * it.value() * it.value();
  for (long i = 0; i < nx; ++i)
    if (diag[i] <= 0.0) diag[i] = 1.0;

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nx);
  for (std::size_t j = 0; j < A.size(); ++j) {
    Eigen::VectorXd t = b[j];
    t.array() *= W[j].array();
    rhs += A[j].transpose() * t;
  }
  if (project) project(rhs);

  CgResult res;
  res.x = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd r = rhs;
  Eigen::VectorXd z = r.array() / diag.array();
  if (project) project(z);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  double rhs_norm = rhs.norm();
  long maxit = opts.max_iterations > 0 ? opts.max_iterations : 10 * nx;
  if (rhs_norm == 0.0) {
    res.converged = true;
  } else {
    for (long it = 0; it < maxit; ++it) {
      Eigen::VectorXd Ap = normal_apply(p);
      if (project) project(Ap);
      double pAp = p.dot(Ap);
      if (pAp <= 0.0) break;
      double alpha = rz / pAp;
      res.x += alpha * p;
      r -= alpha * Ap;
      ++res.iterations;
      if (r.norm() <= opts.rtol * rhs_norm) {
        res.converged = true;
        break;
      }
      Eigen::VectorXd z1 = r.array() / diag.array();
      if (project) project(z1);
      double rz1 = r.dot(z1);
      double beta = rz1 / rz;
      p = z1 + beta * p;
      rz = rz1;
    }
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < A.size(); ++j) {
    Eigen::VectorXd t = A[j] * res.x - b[j];
    obj += (t.array().square() * W[j].array()).sum();
  }
  res.residual = std::sqrt(std::max(obj, 0.0));
  return res;
}

}  // namespace symphodge
