#pragma once

#include <complex>
#include <map>
#include <memory>

#include "symphodge/linsolve.hpp"

namespace symphodge {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Exact block-diagonalization of the translation-invariant discrete
/// operators along the periodic axes.  Every assembled operator, boundary
/// row and the quadrature mass are constant-coefficient in those
/// directions, so each Fourier mode carries an independent dense problem
/// of size (N1 * fiber_dim); eigenvalue, rank and least-squares
/// computations run per mode and recombine exactly.
class ModalEngine {
 public:
  ModalEngine(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model);

  const Grid& grid() const { return *grid_; }
  const SymplecticModel& model() const { return *model_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  std::shared_ptr<const SymplecticModel> model_ptr() const { return model_; }

  int num_modes() const { return num_modes_; }
  int n1() const { return n1_; }
  std::vector<int> mode_tuple(int mode) const;
  int conjugate_mode(int mode) const;
  // purely imaginary derivative symbol of a periodic axis at one mode
  std::complex<double> axis_symbol(int axis, int mode_index) const;
  const Eigen::MatrixXd& bounded_derivative() const { return D1_; }

  // x1-profile of the quadrature weight (same for every mode)
  const Eigen::VectorXd& mass_profile() const { return mass_profile_; }
  Eigen::VectorXd mass_diag(int fiber_dim) const;  // length n1 * fiber_dim

  // ---- transforms (unitary DFT per periodic axis) ----
  // forward: per-mode vectors of length n1 * fiber_dim, node-major in x1
  std::vector<CVec> forward(const FormField& f) const;
  FormField inverse(const std::vector<CVec>& modes, int degree, bool primitive_flag = false) const;
  // lift a single-mode complex vector to a real field (sqrt(2) Re / Im part)
  FormField lift_real(const CVec& v, int mode, int degree, bool imag_part) const;

  // ---- per-mode solves ----
  NullspaceResult nullspace(const NullspaceProblem& problem, bool want_basis = true) const;
  int nullity(const NullspaceProblem& problem, CutoffDiagnostics* diag = nullptr) const;
  /// dimension of the constrained space minus the nullity of the chain
  int rank(const OpChain& chain, const FieldSpace& space, double cutoff, CutoffDiagnostics* diag = nullptr) const;
  int space_dimension(const FieldSpace& space) const;

  struct LsBlock {
    OpChain chain;
    FieldSpace space;
  };
  class LsSystem;
  std::shared_ptr<LsSystem> build_ls(const std::vector<LsBlock>& blocks, int target_degree) const;
  struct LsOutput {
    std::vector<FormField> fitted;  // one per block, chain applied to the potential
    double residual = 0.0;          // quadrature norm of rhs minus total fit
    bool converged = true;
  };
  LsOutput solve_ls(const LsSystem& sys, const FormField& rhs) const;

  friend class ModeContext;

 private:
  std::shared_ptr<const Grid> grid_;
  std::shared_ptr<const SymplecticModel> model_;
  int n1_ = 0;
  int num_modes_ = 0;
  std::vector<int> periodic_shape_;
  std::vector<CMat> axis_dft_;  // unitary DFT matrix per periodic axis
  Eigen::MatrixXd D1_;
  Eigen::VectorXd mass_profile_;
  double periodic_weight_ = 1.0;

  void transform_axis(std::vector<CVec>& data, int axis, bool inverse, int fiber_dim) const;
};

/// Per-mode dense operator algebra mirroring OperatorFactory, with a local
/// cache so compositions reuse shared factors within one mode.
class ModeContext {
 public:
  ModeContext(const ModalEngine& eng, int mode);

  const CMat& op(OpTag tag, int degree);
  CMat chain(const OpChain& c);
  CMat bc_rows(BcTag tag, int degree);
  /// M-orthonormal basis of the constrained (primitive, bc) subspace
  CMat space_basis(const FieldSpace& space);

  const ModalEngine& engine() const { return eng_; }

 private:
  const ModalEngine& eng_;
  int mode_;
  std::map<std::pair<int, int>, CMat> cache_;
  std::map<int, CMat> d_, dstar_;

  CMat lift(const Eigen::MatrixXd& F) const;  // kron over x1 nodes
  const CMat& exterior_d(int k);
  const CMat& codifferential(int k);
  CMat build(OpTag tag, int degree);
};

}  // namespace symphodge
