#pragma once

#include "symphodge/harmonic.hpp"

namespace symphodge {

enum class CohomLevel { dplus_k, dminus_k, dplus_n, dminus_n };
enum class CohomVariant { absolute, dual, relative_D, relative_N };

std::string cohom_level_name(CohomLevel l);
std::string cohom_variant_name(CohomVariant v);

struct CohomResult {
  int dimension = 0;        // classes with a smooth minimal-gradient representative
  int naive_dimension = 0;  // plain ker/im count of the collocated complex
  CutoffDiagnostics diag_out;  // outgoing-map kernel diagnostics
  CutoffDiagnostics diag_in;   // smoothness-split diagnostics (largest = threshold)
  std::vector<double> smoothness_values;  // per-class |grad r|/|r| of the best representative
  bool ambiguous = false;
};

/// Quotient dimension dim ker(out) - dim im(in) of one spot of the chosen
/// complex, computed by numerical rank on the bc-constrained subspaces
/// (independent of the harmonic eigen-count route).
CohomResult cohomology_dim(HodgeEngine& engine, CohomLevel level, CohomVariant variant, int k);

/// Isomorphism battery entry: the harmonic space matched to one cohomology.
struct IsoPair {
  CohomLevel level;
  CohomVariant variant;
  int k;
  HarmonicKind kind;
  std::optional<BcTag> bc;
  int hdegree;
};

/// All dimension equalities claimed for this (n, degree range), paired with
/// their harmonic counterparts.
std::vector<IsoPair> isomorphism_battery(int n);

/// Lefschetz cross-check: dim PH^k(dplus, D+) against
/// ker[L: H^{k-1}(d,D) -> H^{k+1}(d,D)] + coker[L: H^{k-2}(d,D) -> H^k(d,D)]
/// computed from the discrete relative de Rham harmonic spaces.
struct LefschetzCheck {
  int lhs = 0;
  int ker_dim = 0;
  int coker_dim = 0;
  int rhs = 0;
  std::vector<int> deRham_dims;  // dim H^j(d, D) for j = 0..2n
  bool ambiguous = false;
};

LefschetzCheck lefschetz_relative_check(HodgeEngine& engine, int k);

}  // namespace symphodge
