#pragma once

#include "symphodge/harmonic.hpp"

namespace symphodge {

struct GaffneyResult {
  double constant = 0.0;  // min of (Dirichlet integral + L2) / H1 over the constrained space
  int space_dim = 0;      // dimension of the constrained minimization domain
};

/// Discrete coercivity constant of the second-order Laplacian pair:
/// min over {eta primitive degree k, eta in bc} of
/// (||A eta||^2 + ||B eta||^2 + ||eta||^2) / (sum_a ||D_a eta||^2 + ||eta||^2),
/// as a generalized eigenvalue computed per Fourier mode.  which is plus or
/// minus, bc is D or JD, k < n.
GaffneyResult gaffney_constant(HodgeEngine& engine, HarmonicKind which, BcTag bc, int degree);

/// Relative gap of the conjugation identity between the primed minus
/// Dirichlet integral and the plus integral of the J-transformed field,
/// sampled on seeded random primitive fields.  Exact to rounding.
double gaffney_conjugation_gap(HodgeEngine& engine, int degree, std::uint64_t seed, int samples = 5);

}  // namespace symphodge
