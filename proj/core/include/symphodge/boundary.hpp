#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symphodge/operators.hpp"

namespace symphodge {

enum class BcTag { D, N, JD, JN, Dplus, Nplus, Dminus, Nminus, DplusMinus, NplusMinus, Bn, Cn };

std::string bc_tag_name(BcTag tag);
std::optional<BcTag> bc_tag_from_name(const std::string& name);

struct BoundaryCondition {
  BcTag tag = BcTag::D;
  int degree = 0;  // domain degree of the constrained fields
};

/// One clause of a boundary condition: the trace of sigma(trace_op)(d rho)
/// applied to (chain applied to eta).  Simple conditions have an empty
/// chain; D_{+-}, N_{+-}, B and C carry grid operators inside the trace.
struct BcClause {
  OpTag trace_op = OpTag::d;
  int inner_degree = 0;                        // degree the trace operator acts on
  std::vector<std::pair<OpTag, int>> chain;    // applied to eta first, in order
};

/// Clause list for a tag at a domain degree.  Degenerate clauses (zero trace
/// operators) are dropped; an empty list means the condition is vacuous.
std::vector<BcClause> bc_clauses(const SymplecticModel& model, BcTag tag, int degree);

/// Whether the condition's defining expression needs a primitive field.
bool bc_needs_primitive(BcTag tag);

/// Boundary-quadrature norm of the discrete defining trace P(rho eta)|_dM
/// (all clauses stacked).  Rejects primitive-domain conditions on
/// non-primitive fields.
double bc_residual(OperatorFactory& factory, const BoundaryCondition& bc, const FormField& eta);

/// Constraint rows whose kernel is the discrete bc-satisfying subspace.
/// Rows apply the exact boundary symbol at each face node (orthonormalized
/// per face), composed with the clause's grid operators.
SpMat bc_rows(OperatorFactory& factory, BcTag tag, int degree);

/// Orthonormalized rows of the fiber-level symbol of the clause's trace
/// operator at the face conormal (face 0: -dx1, face 1: +dx1).
Eigen::MatrixXd clause_face_rows(const SymplecticModel& model, const BcClause& clause, int face);

}  // namespace symphodge
