#pragma once

#include <Eigen/Dense>
#include <vector>

namespace symphodge {

/// Multi-index basis bookkeeping for the exterior algebra over R^{2n}.
///
/// Degree-k covectors are expanded over k-subsets of {0,...,2n-1} in
/// lexicographic order; every sign convention in the library flows from
/// this ordering.
class FiberBasis {
 public:
  static int dim(int n, int k);  // C(2n, k), 0 outside 0..2n
  // all k-subsets of {0..2n-1}, lexicographic
  static const std::vector<std::vector<int>>& subsets(int n, int k);
  // position of a sorted subset in the lexicographic list, -1 if absent
  static int index_of(int n, int k, const std::vector<int>& subset);
};

/// Coefficient vector of a k-covector on the 2n-dimensional model fiber.
struct FiberForm {
  int n = 1;
  int degree = 0;
  Eigen::VectorXd coeffs;  // length C(2n, degree)

  FiberForm() = default;
  FiberForm(int n_, int degree_);
  FiberForm(int n_, int degree_, Eigen::VectorXd c);
  double norm() const { return coeffs.norm(); }
};

/// One Lefschetz component: a primitive form B of degree k-2r at level r.
struct LefschetzComponent {
  int r = 0;
  FiberForm primitive_part;
};
using LefschetzComponents = std::vector<LefschetzComponent>;

/// The compatible triple (omega, J, g) in standard Darboux/Euclidean form,
/// with every per-degree fiber operator matrix precomputed.
///
/// omega = sum_i w_{2i-1} ^ w_{2i} (1-based pairing), J maps e_{2i-1} to
/// e_{2i}, the metric is the identity and the orientation is +1.  All
/// matrices are immutable after construction; reads are thread-safe.
class SymplecticModel {
 public:
  explicit SymplecticModel(int n);  // supported n in {1, 2}

  int n() const { return n_; }
  int dimension() const { return 2 * n_; }
  int fiber_dim(int k) const { return FiberBasis::dim(n_, k); }
  int primitive_dim(int k) const;

  // 2n x 2n structure matrices
  const Eigen::MatrixXd& omega_matrix() const { return omega_mat_; }
  const Eigen::MatrixXd& omega_inverse() const { return omega_inv_; }
  const Eigen::MatrixXd& complex_structure() const { return J_vec_; }

  const Eigen::VectorXd& omega_form() const { return omega_form_; }  // as a 2-form

  // per-degree operators; empty (0x0) when out of range
  const Eigen::MatrixXd& L(int k) const;        // wedge with omega, k -> k+2
  const Eigen::MatrixXd& lambda(int k) const;   // dual Lefschetz, k -> k-2
  const Eigen::MatrixXd& J(int k) const;        // i^{p-q} on (p,q) parts
  const Eigen::MatrixXd& star(int k) const;     // Hodge star, k -> 2n-k
  double degree_weight(int k) const { return static_cast<double>(n_ - k); }  // H on degree k

  // orthonormal basis of the primitive subspace of the degree-k fiber
  const Eigen::MatrixXd& primitive_basis(int k) const;
  // orthogonal projector onto the r=0 Lefschetz component (self-adjoint)
  const Eigen::MatrixXd& primitive_projector(int k) const;
  // weight operator R, R(L^r B) = r L^r B, as a matrix per degree
  const Eigen::MatrixXd& weight_R(int k) const;

  // columns of the weight-space synthesis matrix: (1/r!) L^r (primitive basis
  // of degree k-2r), blocks ordered by increasing r; square and invertible
  const Eigen::MatrixXd& lefschetz_synthesis(int k) const;
  const std::vector<int>& lefschetz_levels(int k) const;  // the r values

 private:
  int n_;
  Eigen::MatrixXd omega_mat_, omega_inv_, J_vec_;
  Eigen::VectorXd omega_form_;
  std::vector<Eigen::MatrixXd> L_, lambda_, J_, star_, prim_basis_, prim_proj_, weight_R_;
  std::vector<Eigen::MatrixXd> synthesis_;
  std::vector<Eigen::MatrixXd> synthesis_inv_;
  std::vector<std::vector<int>> levels_;

  friend LefschetzComponents lefschetz_decompose(const SymplecticModel&, const FiberForm&);
};

// ---- pointwise operations ----

// exterior product with sign bookkeeping in the ordered basis
FiberForm wedge(const FiberForm& a, const FiberForm& b);

// interior product with the vector whose (Euclidean) components are `v`
FiberForm contract(const Eigen::VectorXd& v, const FiberForm& a);

// matrix of (wedge with covector c) on degree-k forms
Eigen::MatrixXd wedge_matrix(int n, const Eigen::VectorXd& c, int k);
// matrix of (interior product with vector v) on degree-k forms
Eigen::MatrixXd contraction_matrix(int n, const Eigen::VectorXd& v, int k);

FiberForm apply_L(const SymplecticModel& m, const FiberForm& a);
FiberForm apply_lambda(const SymplecticModel& m, const FiberForm& a);
FiberForm apply_H(const SymplecticModel& m, const FiberForm& a);
FiberForm apply_J(const SymplecticModel& m, const FiberForm& a);
FiberForm hodge_star(const SymplecticModel& m, const FiberForm& a);

double fiber_inner(const FiberForm& a, const FiberForm& b);

bool is_primitive(const SymplecticModel& m, const FiberForm& a, double tol = 1e-12);

/// Unique decomposition a = sum_r (1/r!) L^r B_{k-2r} with B primitive,
/// computed by a linear solve on the sl(2) weight spaces.  Throws if the
/// synthesis matrix is ill-conditioned (condition number > 1e8).
LefschetzComponents lefschetz_decompose(const SymplecticModel& m, const FiberForm& a);

FiberForm lefschetz_reassemble(const SymplecticModel& m, const LefschetzComponents& comps);

/// r=0 Lefschetz component; idempotent and self-adjoint, degree <= n only.
FiberForm primitive_project(const SymplecticModel& m, const FiberForm& a);

}  // namespace symphodge
