#pragma once

#include "symphodge/harmonic.hpp"

namespace symphodge {

enum class PoincareOp { dplus, dplusstar, dminus, dminusstar, dpm, dpmstar };
enum class SolveStatus { solved, integrability_violated, not_converged };

std::string poincare_op_name(PoincareOp op);
std::string solve_status_name(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::not_converged;
  FormField solution;                         // the potential phi
  double equation_residual = 0.0;             // ||Op phi - eta|| / ||eta||
  double boundary_residual = 0.0;             // trace mismatch (boundary-data problems)
  double gauge_residual = 0.0;                // ||dplus* phi|| / ||eta|| when the gauge is active
  double closedness_residual = 0.0;           // relative residual of the closedness condition
  std::vector<double> integrability_values;   // (eta, lambda_i) minus the boundary pairing, relative
  double integrability_tolerance = 0.0;
};

struct PoincareOptions {
  // discretization-aware integrability tolerance: pairings and closedness
  // are relative to ||eta|| and carry O(h^order) truncation noise
  double integrability_tol = 0.05;
};

/// Exactness solver: checks the integrability conditions (closedness plus
/// orthogonality to the matching harmonic space) and then solves the least
/// squares problem for a potential.  With boundary data x the problem is
/// the boundary value problem "Op phi = eta, trace(phi) = trace(x)" whose
/// obstruction pairing carries the boundary term, and the solution is
/// gauged by "dplus* phi = 0".
SolveReport poincare_solve(HodgeEngine& engine, PoincareOp op, const FormField& eta,
                           const std::optional<FormField>& boundary_x = std::nullopt,
                           const PoincareOptions& opts = {});

}  // namespace symphodge
