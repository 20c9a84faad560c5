#include "symphodge/boundary.hpp"

#include <Eigen/SVD>
#include <stdexcept>

#include "symphodge/symbols.hpp"

namespace symphodge {

std::string bc_tag_name(BcTag tag) {
  switch (tag) {
    case BcTag::D: return "D";
    case BcTag::N: return "N";
    case BcTag::JD: return "JD";
    case BcTag::JN: return "JN";
    case BcTag::Dplus: return "Dplus";
    case BcTag::Nplus: return "Nplus";
    case BcTag::Dminus: return "Dminus";
    case BcTag::Nminus: return "Nminus";
    case BcTag::DplusMinus: return "DplusMinus";
    case BcTag::NplusMinus: return "NplusMinus";
    case BcTag::Bn: return "Bn";
    case BcTag::Cn: return "Cn";
  }
  return "?";
}

std::optional<BcTag> bc_tag_from_name(const std::string& name) {
  static const std::pair<const char*, BcTag> table[] = {
      {"D", BcTag::D},         {"N", BcTag::N},
      {"JD", BcTag::JD},       {"JN", BcTag::JN},
      {"Dplus", BcTag::Dplus}, {"Nplus", BcTag::Nplus},
      {"Dminus", BcTag::Dminus}, {"Nminus", BcTag::Nminus},
      {"DplusMinus", BcTag::DplusMinus}, {"NplusMinus", BcTag::NplusMinus},
      {"Bn", BcTag::Bn},       {"Cn", BcTag::Cn},
  };
  for (const auto& [k, v] : table)
    if (name == k) return v;
  return std::nullopt;
}

bool bc_needs_primitive(BcTag tag) {
  switch (tag) {
    case BcTag::D:
    case BcTag::N:
    case BcTag::JD:
    case BcTag::JN:
      return false;
    default:
      return true;
  }
}

std::vector<BcClause> bc_clauses(const SymplecticModel& model, BcTag tag, int degree) {
  const int n = model.n();
  const int k = degree;
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("bc_clauses: ") + what);
  };
  std::vector<BcClause> out;
  switch (tag) {
    case BcTag::D:
      need(k <= 2 * n, "degree out of range");
      if (k < 2 * n) out.push_back({OpTag::d, k, {}});
      return out;
    case BcTag::N:
      if (k > 0) out.push_back({OpTag::dstar, k, {}});
      return out;
    case BcTag::JD:
      if (k < 2 * n) out.push_back({OpTag::dlamstar, k, {}});
      return out;
    case BcTag::JN:
      if (k > 0) out.push_back({OpTag::dlam, k, {}});
      return out;
    case BcTag::Dplus:
      need(k <= n, "Dplus needs a primitive degree");
      out.push_back({OpTag::dplus, k, {}});
      return out;
    case BcTag::Nplus:
      need(k <= n, "Nplus needs a primitive degree");
      if (k >= 1) out.push_back({OpTag::dplusstar, k, {}});
      return out;
    case BcTag::Dminus:
      need(k <= n, "Dminus needs a primitive degree");
      if (k >= 1) out.push_back({OpTag::dminus, k, {}});
      return out;
    case BcTag::Nminus:
      need(k < n, "Nminus needs degree k < n");
      out.push_back({OpTag::dminusstar, k, {}});
      return out;
    case BcTag::DplusMinus:
      need(k == n, "DplusMinus lives on P^n");
      out.push_back({OpTag::dminus, n, {}});
      out.push_back({OpTag::dplus, n - 1, {{OpTag::dminus, n}}});
      return out;
    case BcTag::NplusMinus:
      need(k == n, "NplusMinus lives on P^n");
      out.push_back({OpTag::dplusstar, n, {}});
      out.push_back({OpTag::dminusstar, n - 1, {{OpTag::dplusstar, n}}});
      return out;
    case BcTag::Bn:
      need(k == n, "Bn lives on P^n");
      out.push_back({OpTag::dminus, n, {{OpTag::dminus, n}, {OpTag::dplus, n - 1}}});
      return out;
    case BcTag::Cn:
      need(k == n, "Cn lives on P^n");
      out.push_back({OpTag::dplusstar, n, {{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}});
      return out;
  }
  return out;
}

Eigen::MatrixXd clause_face_rows(const SymplecticModel& model, const BcClause& clause, int face) {
  Eigen::VectorXd conormal = Eigen::VectorXd::Zero(2 * model.n());
  conormal[0] = (face == 0) ? -1.0 : 1.0;
  Eigen::MatrixXd sym = boundary_symbol(model, clause.trace_op, clause.inner_degree, conormal);
  if (sym.rows() == 0) return Eigen::MatrixXd::Zero(0, sym.cols());
  // orthonormal basis of the row space, for clean kernels and conditioning
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sym, Eigen::ComputeFullV);
  int rank = 0;
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-12 * smax) ++rank;
  return svd.matrixV().leftCols(rank).transpose();
}

double bc_residual(OperatorFactory& factory, const BoundaryCondition& bc, const FormField& eta) {
  if (eta.degree != bc.degree) throw std::invalid_argument("bc_residual: degree mismatch");
  if (bc_needs_primitive(bc.tag) && !pointwise_primitive(eta))
    throw std::invalid_argument("bc_residual: condition requires a primitive field");
  auto clauses = bc_clauses(factory.model(), bc.tag, bc.degree);
  const auto& rho = factory.rho();
  double acc = 0.0;
  for (const auto& clause : clauses) {
    FormField inner = eta;
    for (const auto& [op, deg] : clause.chain) inner = factory.apply(factory.assemble(op, deg), inner);
    FormField rho_inner = rho_multiply(rho, inner);
    FormField traced = factory.apply(factory.assemble(clause.trace_op, clause.inner_degree), rho_inner);
    for (int face = 0; face < 2; ++face) {
      BoundaryTrace t = restrict_boundary(traced, face);
      acc += factory.grid().face_weight() * t.values.squaredNorm();
    }
  }
  return std::sqrt(acc);
}

SpMat bc_rows(OperatorFactory& factory, BcTag tag, int degree) {
  const auto& grid = factory.grid();
  const auto& model = factory.model();
  auto clauses = bc_clauses(model, tag, degree);
  const long ncols = static_cast<long>(grid.num_nodes()) * model.fiber_dim(degree);

  std::vector<SpMat> blocks;
  long total_rows = 0;
  for (const auto& clause : clauses) {
    int fd_inner = model.fiber_dim(clause.inner_degree);
    // trace-symbol matrix: rows at every boundary node
    std::vector<Eigen::MatrixXd> face_rows = {clause_face_rows(model, clause, 0),
                                              clause_face_rows(model, clause, 1)};
    long rows = 0;
    for (int face = 0; face < 2; ++face) rows += face_rows[face].rows() * grid.face_num_nodes();
    SpMat T(rows, static_cast<long>(grid.num_nodes()) * fd_inner);
    std::vector<Eigen::Triplet<double>> trips;
    long roff = 0;
    for (int face = 0; face < 2; ++face) {
      const Eigen::MatrixXd& S = face_rows[face];
      for (int i = 0; i < grid.face_num_nodes(); ++i) {
        int node = grid.face_node(face, i);
        for (int r = 0; r < S.rows(); ++r)
          for (int c = 0; c < fd_inner; ++c)
            if (S(r, c) != 0.0)
              trips.emplace_back(roff + static_cast<long>(i) * S.rows() + r,
                                 static_cast<long>(node) * fd_inner + c, S(r, c));
      }
      roff += static_cast<long>(S.rows()) * grid.face_num_nodes();
    }
    T.setFromTriplets(trips.begin(), trips.end());

    SpMat block = T;
    if (!clause.chain.empty()) {
      SpMat pre = factory.assemble(clause.chain.front().first, clause.chain.front().second).mat;
      for (std::size_t i = 1; i < clause.chain.size(); ++i)
        pre = SpMat(factory.assemble(clause.chain[i].first, clause.chain[i].second).mat * pre);
      block = SpMat(T * pre);
    }
    blocks.push_back(block);
    total_rows += block.rows();
  }

  SpMat out(total_rows, ncols);
  std::vector<Eigen::Triplet<double>> trips;
  long roff = 0;
  for (const auto& b : blocks) {
    for (int c = 0; c < b.outerSize(); ++c)
      for (SpMat::InnerIterator it(b, c); it; ++it) trips.emplace_back(roff + it.row(), it.col(), it.value());
    roff += b.rows();
  }
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace symphodge
