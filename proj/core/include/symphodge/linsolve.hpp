#pragma once

#include <functional>
#include <optional>

#include "symphodge/boundary.hpp"
#include "symphodge/operators.hpp"

namespace symphodge {

/// Composition of tagged operators applied left-to-right, with a scale.
struct OpChain {
  std::vector<std::pair<OpTag, int>> ops;  // (tag, domain degree), applied in order
  double scale = 1.0;
};

/// A bc-constrained (optionally primitive) space of degree-k fields.
struct FieldSpace {
  int degree = 0;
  bool primitive = true;
  std::vector<BcTag> bcs;
};

struct CutoffDiagnostics {
  double largest = 0.0;         // largest singular value of the stacked operator
  double largest_below = 0.0;   // largest singular value classified as zero
  double smallest_above = 0.0;  // smallest singular value classified as nonzero
  double ratio = 0.0;           // smallest_above / largest_below (inf if clean)
  bool ambiguous = false;       // ratio below the straddling threshold (10)
};

struct NullspaceProblem {
  FieldSpace space;
  std::vector<OpChain> forms;  // the defining operators; nullspace of the stack
  double cutoff = 1e-8;
  // false: cutoff is relative to the largest singular value (exact-kernel
  // counting); true: cutoff is an absolute residual threshold, counting
  // epsilon-approximate solutions (the infinite-dimensionality proxy)
  bool absolute_cutoff = false;
};

struct NullspaceResult {
  int dimension = 0;
  std::vector<FormField> basis;     // M-orthonormal
  Eigen::VectorXd small_values;     // relative singular values classified as zero
  CutoffDiagnostics diag;
};

// ---- general path (dense SVD oracle + CG least squares) ----

/// Dense realization of a chain as a global sparse matrix.
SpMat chain_matrix(OperatorFactory& factory, const OpChain& chain);
int chain_codomain_degree(const OpChain& chain);

/// Stacked constraint rows of a FieldSpace (bc rows only; primitivity is
/// handled by the embedding).
SpMat space_constraint_rows(OperatorFactory& factory, const FieldSpace& space);

/// Block-diagonal embedding of the pointwise-primitive subspace (identity
/// when space.primitive is false).
SpMat primitive_embedding(OperatorFactory& factory, const FieldSpace& space);

/// Dense-SVD near-nullspace of the stacked weighted forms on the
/// constrained subspace.  Intended as the independent oracle at small
/// sizes; throws above `max_dense_dim` unknowns.
NullspaceResult dense_nullspace(OperatorFactory& factory, const NullspaceProblem& problem,
                                int max_dense_dim = 20000);

/// Numerical rank of a chain restricted to a constrained space, with the
/// same cutoff/straddling policy.
int dense_rank(OperatorFactory& factory, const OpChain& chain, const FieldSpace& space, double cutoff,
               CutoffDiagnostics* diag = nullptr);

/// Diagonally preconditioned CG on the normal equations for
/// min sum_j ||A_j x - b_j||^2_{W_j}, optionally constrained by a projector.
struct CgOptions {
  double rtol = 1e-10;
  long max_iterations = 0;  // 0: 10 * unknowns
};

struct CgResult {
  Eigen::VectorXd x;
  bool converged = false;
  long iterations = 0;
  double residual = 0.0;  // sqrt of the final objective
};

CgResult cg_least_squares(const std::vector<SpMat>& A, const std::vector<Eigen::VectorXd>& W,
                          const std::vector<Eigen::VectorXd>& b, const CgOptions& opts = {},
                          const std::function<void(Eigen::VectorXd&)>& project = nullptr);

}  // namespace symphodge
