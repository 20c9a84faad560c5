#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "symphodge/fiber.hpp"

namespace symphodge {

/// Structured grid on the flat cylinder [0,1] x T^{2n-1}.
///
/// Axis 0 is the bounded interval including both endpoint nodes; axes
/// 1..2n-1 are periodic with period 1 and no duplicated seam node.
/// Node indices are row-major over the axes.
class Grid {
 public:
  static std::shared_ptr<const Grid> make(int n, std::vector<int> shape, int stencil_order = 2);

  int n() const { return n_; }
  int dimension() const { return 2 * n_; }
  const std::vector<int>& shape() const { return shape_; }
  int stencil_order() const { return stencil_order_; }
  int num_nodes() const { return num_nodes_; }
  double spacing(int axis) const { return spacing_[axis]; }
  bool axis_periodic(int axis) const { return axis != 0; }

  // node index <-> per-axis index vector (row-major)
  int node_index(const std::vector<int>& idx) const;
  std::vector<int> node_coords(int node) const;
  double coordinate(int axis, int axis_idx) const;
  std::vector<double> position(int node) const;

  // boundary faces: 0 is x1=0, 1 is x1=1
  bool is_boundary(int node) const;
  int boundary_face(int node) const;  // -1 for interior
  int face_num_nodes() const { return face_nodes_; }
  // node on the given face from the index over periodic axes (row-major)
  int face_node(int face, int face_idx) const;

  // trapezoid weights on axis 0, uniform 1/N on periodic axes
  const Eigen::VectorXd& quadrature_weights() const { return weights_; }
  double face_weight() const { return face_weight_; }  // uniform weight of one face node

 private:
  Grid() = default;
  int n_ = 1;
  std::vector<int> shape_;
  int stencil_order_ = 2;
  int num_nodes_ = 0;
  int face_nodes_ = 0;
  std::vector<double> spacing_;
  std::vector<int> strides_;
  Eigen::VectorXd weights_;
  double face_weight_ = 0.0;
};

/// Boundary defining function rho: rho = -min(x1, 1-x1) away from the
/// middle, joined by a fixed quintic blend on [0.35, 0.65].  rho vanishes
/// exactly on the two faces and |grad rho| = 1 within distance 1/4 of them.
struct DefiningFunction {
  Eigen::VectorXd values;        // rho at nodes
  Eigen::MatrixXd gradient;      // nodes x 2n
  static double rho_at(double x1);
  static double drho_at(double x1);
};

DefiningFunction make_rho(const Grid& grid);

/// Degree-k form field sampled at grid nodes; coefficients are stored
/// node-major (node * fiber_dim + fiber index).
struct FormField {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const SymplecticModel> model;
  int degree = 0;
  bool primitive_flag = false;
  Eigen::VectorXd values;

  FormField() = default;
  FormField(std::shared_ptr<const Grid> g, std::shared_ptr<const SymplecticModel> m, int k);

  int fiber_dim() const { return model->fiber_dim(degree); }
  Eigen::Map<const Eigen::VectorXd> at_node(int node) const;
  void set_node(int node, const Eigen::VectorXd& v);
  FiberForm fiber_at(int node) const;
};

/// Closed-form test form: one scalar function per ordered basis component.
struct FormExpression {
  int n = 1;
  int degree = 0;
  std::vector<std::function<double(const std::vector<double>&)>> components;
};

/// Pointwise evaluation on the grid.  The expression must be periodic in
/// axes 1..2n-1; a seam mismatch is rejected with a report.  The primitive
/// flag is set iff the pointwise primitivity check passes everywhere.
FormField sample_form(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model,
                      const FormExpression& expr);

/// Pointwise primitivity check: ||Lambda eta|| <= tol * max ||eta|| at every node.
bool pointwise_primitive(const FormField& f, double tol = 1e-10);

double inner_product(const FormField& a, const FormField& b);
double field_norm(const FormField& a);

FormField rho_multiply(const DefiningFunction& rho, const FormField& a);

/// Restriction of a field to one boundary face.
struct BoundaryTrace {
  int face = 0;  // 0: x1=0, 1: x1=1
  int degree = 0;
  std::shared_ptr<const Grid> grid;
  Eigen::MatrixXd values;  // face_nodes x fiber_dim
};

BoundaryTrace restrict_boundary(const FormField& a, int face);
double boundary_integral(const BoundaryTrace& t1, const BoundaryTrace& t2);
// boundary L2 norm of a trace pair (both faces) of a field-sized vector
double trace_norm(const Grid& grid, const std::vector<BoundaryTrace>& traces);

// ---- serialization (format: magic "SYHF", little-endian) ----
void save_field(const FormField& f, const std::string& path);
FormField load_field(const std::string& path, std::shared_ptr<const Grid> grid,
                     std::shared_ptr<const SymplecticModel> model);
void export_trace_csv(const BoundaryTrace& t, const std::string& path);

}  // namespace symphodge
