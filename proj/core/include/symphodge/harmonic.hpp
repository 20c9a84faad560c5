#pragma once

#include <functional>
#include <map>
#include <optional>

#include "symphodge/modal.hpp"

namespace symphodge {

/// The four harmonic-field equations plus the de Rham pair (the oracle for
/// the Lefschetz cross-check).
enum class HarmonicKind { plus, minus, plusplus, minusminus, deRham };

std::string harmonic_kind_name(HarmonicKind k);

struct HarmonicSpace {
  HarmonicKind kind = HarmonicKind::plus;
  std::optional<BcTag> bc;
  int degree = 0;
  double cutoff = 1e-8;
  int dimension = 0;
  std::vector<FormField> basis;         // M-orthonormal
  Eigen::VectorXd residual_values;      // relative singular values of the members
  CutoffDiagnostics diag;
};

/// Defining operators of a kind at a degree (the two-chain stack whose
/// near-nullspace is the harmonic space).
std::vector<OpChain> harmonic_forms(const SymplecticModel& model, HarmonicKind kind, int degree);

/// Shared per-grid state: operator factory, modal engine, harmonic cache.
class HodgeEngine {
 public:
  HodgeEngine(int n, std::vector<int> shape, int stencil_order = 2, double cutoff = 1e-8);

  std::shared_ptr<const Grid> grid() const { return grid_; }
  std::shared_ptr<const SymplecticModel> model() const { return model_; }
  OperatorFactory& factory() { return *factory_; }
  ModalEngine& modal() { return *modal_; }
  double cutoff() const { return cutoff_; }

  /// Cached harmonic space (basis included).
  const HarmonicSpace& harmonic(HarmonicKind kind, std::optional<BcTag> bc, int degree);
  /// Dimension only (still cached via the full computation).
  int harmonic_dim(HarmonicKind kind, std::optional<BcTag> bc, int degree);

  /// Count of epsilon-approximate harmonic fields: directions whose
  /// defining-equation residual is at most tau * ||eta|| in the quadrature
  /// norm.  The proxy for the infinite-dimensionality statements: the count
  /// grows without bound under refinement exactly when the continuum space
  /// is infinite-dimensional, while bc-constrained spaces keep a spectral
  /// gap and report their finite dimension.
  int approximate_harmonic_count(HarmonicKind kind, std::optional<BcTag> bc, int degree, double tau = 0.1);

  /// Cached epsilon-approximate harmonic space with basis (used for
  /// projections onto the unconstrained kinds, whose continuum spaces are
  /// infinite-dimensional and whose near-kernel content is physical).
  const HarmonicSpace& harmonic_approximate(HarmonicKind kind, std::optional<BcTag> bc, int degree,
                                            double tau = 0.1);

  /// M-orthogonal projection of a field onto a harmonic basis.
  FormField project_onto(const std::vector<FormField>& basis, const FormField& f) const;

  /// Cached joint-LS systems keyed by caller-chosen name.
  std::shared_ptr<ModalEngine::LsSystem> ls_system(
      const std::string& key, const std::function<std::vector<ModalEngine::LsBlock>()>& blocks_fn,
      int target_degree);

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const SymplecticModel> model_;
  std::unique_ptr<OperatorFactory> factory_;
  std::unique_ptr<ModalEngine> modal_;
  double cutoff_;
  std::map<std::tuple<int, int, int>, HarmonicSpace> harmonic_cache_;
  std::map<std::string, std::shared_ptr<ModalEngine::LsSystem>> ls_cache_;
};

/// Compute a harmonic space with the quadratic-form route: the span of
/// generalized-eigenvalue directions below cutoff (relative to the largest)
/// of ||A eta||^2 + ||B eta||^2 on the bc-constrained subspace.
HarmonicSpace harmonic_space(HodgeEngine& engine, HarmonicKind kind, std::optional<BcTag> bc, int degree,
                             double cutoff, bool want_basis = true);

}  // namespace symphodge
