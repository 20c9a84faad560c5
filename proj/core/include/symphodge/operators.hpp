#pragma once

#include <Eigen/Sparse>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "symphodge/grid.hpp"

namespace symphodge {

using SpMat = Eigen::SparseMatrix<double>;

enum class OpTag {
  d,
  dstar,
  dlam,
  dlamstar,
  dplus,
  dminus,
  dminusprime,
  dplusstar,
  dminusstar,
  lap_plus,
  lap_minus,
  lap_pp,
  lap_mm,
  lap_ddlam,
  lap_dplusdlam,
};

std::string op_tag_name(OpTag tag);

struct OperandSpace {
  int degree = 0;
  bool primitive = false;
};

/// Sparse realization of a discrete operator with degree/primitivity metadata.
struct LinearOpMatrix {
  SpMat mat;
  OperandSpace domain;
  OperandSpace codomain;
  OpTag tag = OpTag::d;
};

/// Assembles and caches the discrete operators on one (grid, model) pair.
/// All assembled matrices are immutable once built; reads are thread-safe
/// only after the cache has been populated, so warm the cache before
/// sharing across workers.
class OperatorFactory {
 public:
  OperatorFactory(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model);

  const Grid& grid() const { return *grid_; }
  const SymplecticModel& model() const { return *model_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  std::shared_ptr<const SymplecticModel> model_ptr() const { return model_; }
  const DefiningFunction& rho() const { return rho_; }

  // one-dimensional derivative matrix along an axis (nodes x nodes);
  // centered stencils inside, one-sided closures of the same order at the
  // bounded-axis endpoints
  const SpMat& axis_derivative(int axis);

  // block-diagonal lift of a constant fiber matrix over all nodes
  SpMat lift_fiber(const Eigen::MatrixXd& F) const;

  // diagonal quadrature mass matrix on degree-k fields
  SpMat mass_matrix(int k) const;
  // pointwise multiplication by rho
  SpMat rho_matrix(int k) const;

  const SpMat& exterior_d(int k);      // full forms, k -> k+1
  const SpMat& codifferential(int k);  // -*d*, k -> k-1

  /// Spec-facing assembly for one tagged operator at a given domain degree.
  LinearOpMatrix assemble(OpTag tag, int degree);

  /// |(P phi, psi) - (phi, P* psi) - boundary term| for the Green's formula
  /// of a first-order tag (d, dlam, dplus, dminus).
  double greens_defect(OpTag tag, const FormField& phi, const FormField& psi);

  // apply an assembled operator to a field (degree bookkeeping checked)
  FormField apply(const LinearOpMatrix& op, const FormField& f);

  // COO text export for cross-checking between implementations
  void export_coo(const LinearOpMatrix& op, const std::string& path) const;

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const SymplecticModel> model_;
  DefiningFunction rho_;
  std::map<int, SpMat> axis_d_;
  std::map<int, SpMat> d_, dstar_;
  std::map<std::pair<int, int>, SpMat> cache_;  // (tag,degree) -> matrix

  SpMat build_axis_derivative(int axis) const;
  const SpMat& cached(OpTag tag, int degree);
  SpMat build(OpTag tag, int degree);
};

/// 1-D finite-difference stencil tables (interior + one-sided closures).
struct StencilTable {
  // interior centered coefficients, offsets -w..w
  static const std::vector<double>& centered(int order);
  // rows of one-sided/biased closures for the first `width` bounded-axis
  // nodes; row r gives coefficients on nodes 0..len-1 for node r
  static const std::vector<std::vector<double>>& left_closure(int order);
};

}  // namespace symphodge
