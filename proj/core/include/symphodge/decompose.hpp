#pragma once

#include "symphodge/harmonic.hpp"

namespace symphodge {

/// The twelve decomposition lines: three per Laplacian, named by the
/// boundary condition carried by the harmonic summand ("mixed" is the
/// no-boundary-condition harmonic space with both potentials constrained).
enum class DecompFlavor {
  plus_D,
  plus_N,
  plus_mixed,
  minus_D,
  minus_N,
  minus_mixed,
  pp_N,
  pp_D,
  pp_mixed,
  mm_D,
  mm_N,
  mm_mixed,
};

std::string flavor_name(DecompFlavor f);
const std::vector<DecompFlavor>& all_flavors();

struct FlavorSpec {
  HarmonicKind kind = HarmonicKind::plus;
  std::optional<BcTag> harmonic_bc;
  int degree = 0;                     // degree of the decomposed field
  bool has_c2 = false;
  OpChain chain2;
  FieldSpace space2;
  bool has_c3 = false;
  OpChain chain3;
  FieldSpace space3;
};

/// Potential spaces and operators of one Table-3 line at a given degree
/// (degree is only free for the second-order flavors, k < n).
FlavorSpec flavor_spec(const SymplecticModel& model, DecompFlavor flavor, int degree);

struct DecompositionResult {
  DecompFlavor flavor = DecompFlavor::plus_N;
  FormField c1, c2, c3;
  double reconstruction_residual = 0.0;  // ||eta - c1 - c2 - c3|| / ||eta||
  Eigen::Matrix3d gram;                   // cross inner products of the components
  double gram_offdiag = 0.0;              // max |gram_ij| / (norm_i norm_j), i != j
  double ls_residual = 0.0;               // joint potential fit residual = ||c1||/||eta||
  // diagnostics that converge at the stencil order
  double c1_equation_residual = 0.0;      // defining-equation residual of c1, relative
  double harmonic_projection_gap = -1.0;  // ||c1 - P_H eta|| / ||eta|| if the basis was requested
  bool converged = true;
};

/// Decompose a primitive field along one Table-3 line.  Components 2 and 3
/// come from one joint least squares over the bc-constrained potential
/// spaces followed by an exact in-plane re-orthogonalization; component 1
/// is the remainder, cross-checked against the harmonic projection when
/// `with_harmonic_check` is set.
DecompositionResult hodge_decompose(HodgeEngine& engine, const FormField& eta, DecompFlavor flavor,
                                    bool with_harmonic_check = false);

}  // namespace symphodge
