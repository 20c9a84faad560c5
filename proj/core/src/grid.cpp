#include "symphodge/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace symphodge {

std::shared_ptr<const Grid> Grid::make(int n, std::vector<int> shape, int stencil_order) {
  if (n != 1 && n != 2) throw std::invalid_argument("Grid: supported n are 1 and 2");
  if (static_cast<int>(shape.size()) != 2 * n) throw std::invalid_argument("Grid: shape must have 2n axes");
  if (stencil_order != 2 && stencil_order != 4) throw std::invalid_argument("Grid: stencil order must be 2 or 4");
  if (shape[0] < 5) throw std::invalid_argument("Grid: bounded axis needs at least 5 nodes");
  for (std::size_t a = 1; a < shape.size(); ++a)
    if (shape[a] < stencil_order + 1)
      throw std::invalid_argument("Grid: periodic axes must cover the stencil width");

  auto g = std::shared_ptr<Grid>(new Grid());
  g->n_ = n;
  g->shape_ = std::move(shape);
  g->stencil_order_ = stencil_order;
  int d = 2 * n;
  g->spacing_.resize(d);
  g->spacing_[0] = 1.0 / (g->shape_[0] - 1);
  for (int a = 1; a < d; ++a) g->spacing_[a] = 1.0 / g->shape_[a];
  g->strides_.assign(d, 1);
  for (int a = d - 2; a >= 0; --a) g->strides_[a] = g->strides_[a + 1] * g->shape_[a + 1];
  g->num_nodes_ = g->strides_[0] * g->shape_[0];
  g->face_nodes_ = g->num_nodes_ / g->shape_[0];

  g->weights_ = Eigen::VectorXd::Zero(g->num_nodes_);
  double periodic_weight = 1.0;
  for (int a = 1; a < d; ++a) periodic_weight *= g->spacing_[a];
  for (int node = 0; node < g->num_nodes_; ++node) {
    int i0 = node / g->strides_[0];
    double w0 = g->spacing_[0] * ((i0 == 0 || i0 == g->shape_[0] - 1) ? 0.5 : 1.0);
    g->weights_[node] = w0 * periodic_weight;
  }
  g->face_weight_ = periodic_weight;
  return g;
}

int Grid::node_index(const std::vector<int>& idx) const {
  int node = 0;
  for (int a = 0; a < dimension(); ++a) node += idx[a] * strides_[a];
  return node;
}

std::vector<int> Grid::node_coords(int node) const {
  std::vector<int> idx(dimension());
  for (int a = 0; a < dimension(); ++a) {
    idx[a] = node / strides_[a];
    node -= idx[a] * strides_[a];
  }
  return idx;
}

double Grid::coordinate(int axis, int axis_idx) const { return axis_idx * spacing_[axis]; }

std::vector<double> Grid::position(int node) const {
  auto idx = node_coords(node);
  std::vector<double> x(dimension());
  for (int a = 0; a < dimension(); ++a) x[a] = coordinate(a, idx[a]);
  return x;
}

bool Grid::is_boundary(int node) const { return boundary_face(node) >= 0; }

int Grid::boundary_face(int node) const {
  int i0 = node / strides_[0];
  if (i0 == 0) return 0;
  if (i0 == shape_[0] - 1) return 1;
  return -1;
}

int Grid::face_node(int face, int face_idx) const {
  int i0 = (face == 0) ? 0 : shape_[0] - 1;
  return i0 * strides_[0] + face_idx;
}

// quintic smoothstep: s(0)=0, s(1)=1, first and second derivatives vanish at both ends
static double quintic(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
static double dquintic(double t) { return t * t * (30.0 + t * (-60.0 + 30.0 * t)); }

double DefiningFunction::rho_at(double x1) {
  if (x1 <= 0.35) return -x1;
  if (x1 >= 0.65) return x1 - 1.0;
  double t = (x1 - 0.35) / 0.3;
  double s = quintic(t);
  return (1.0 - s) * (-x1) + s * (x1 - 1.0);
}

double DefiningFunction::drho_at(double x1) {
  if (x1 <= 0.35) return -1.0;
  if (x1 >= 0.65) return 1.0;
  double t = (x1 - 0.35) / 0.3;
  double s = quintic(t);
  double ds = dquintic(t) / 0.3;
  return (2.0 * s - 1.0) + ds * (2.0 * x1 - 1.0);
}

DefiningFunction make_rho(const Grid& grid) {
  DefiningFunction f;
  f.values = Eigen::VectorXd::Zero(grid.num_nodes());
  f.gradient = Eigen::MatrixXd::Zero(grid.num_nodes(), grid.dimension());
  for (int node = 0; node < grid.num_nodes(); ++node) {
    double x1 = grid.position(node)[0];
    f.values[node] = DefiningFunction::rho_at(x1);
    f.gradient(node, 0) = DefiningFunction::drho_at(x1);
  }
  return f;
}

FormField::FormField(std::shared_ptr<const Grid> g, std::shared_ptr<const SymplecticModel> m, int k)
    : grid(std::move(g)), model(std::move(m)), degree(k) {
  values = Eigen::VectorXd::Zero(static_cast<long>(grid->num_nodes()) * model->fiber_dim(k));
}

Eigen::Map<const Eigen::VectorXd> FormField::at_node(int node) const {
  int fd = fiber_dim();
  return Eigen::Map<const Eigen::VectorXd>(values.data() + static_cast<long>(node) * fd, fd);
}

void FormField::set_node(int node, const Eigen::VectorXd& v) {
  int fd = fiber_dim();
  values.segment(static_cast<long>(node) * fd, fd) = v;
}

FiberForm FormField::fiber_at(int node) const { return FiberForm(model->n(), degree, at_node(node)); }

FormField sample_form(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model,
                      const FormExpression& expr) {
  if (expr.n != grid->n()) throw std::invalid_argument("sample_form: model dimension mismatch");
  int fd = model->fiber_dim(expr.degree);
  if (static_cast<int>(expr.components.size()) != fd)
    throw std::invalid_argument("sample_form: component count does not match C(2n,k)");

  // seam check: component values at x_a = 0 and x_a = 1 must agree on
  // a probe set for every periodic axis
  const int probes = 7;
  for (int a = 1; a < grid->dimension(); ++a) {
    for (int p = 0; p < probes; ++p) {
      std::vector<double> x(grid->dimension());
      for (int b = 0; b < grid->dimension(); ++b) x[b] = 0.137 + 0.61 * p / probes + 0.053 * b;
      for (int c = 0; c < fd; ++c) {
        x[a] = 0.0;
        double v0 = expr.components[c](x);
        x[a] = 1.0;
        double v1 = expr.components[c](x);
        if (std::abs(v0 - v1) > 1e-10 * (1.0 + std::abs(v0))) {
          std::ostringstream msg;
          msg << "sample_form: seam mismatch on periodic axis " << a << ", component " << c << ": f(0)=" << v0
              << " vs f(1)=" << v1;
          throw std::invalid_argument(msg.str());
        }
      }
    }
  }

  FormField f(grid, model, expr.degree);
  for (int node = 0; node < grid->num_nodes(); ++node) {
    auto x = grid->position(node);
    Eigen::VectorXd v(fd);
    for (int c = 0; c < fd; ++c) v[c] = expr.components[c](x);
    f.set_node(node, v);
  }
  f.primitive_flag = pointwise_primitive(f);
  return f;
}

bool pointwise_primitive(const FormField& f, double tol) {
  if (f.degree > f.model->n()) return false;
  if (f.degree < 2) return true;
  const Eigen::MatrixXd& Lam = f.model->lambda(f.degree);
  double scale = 0.0;
  for (int node = 0; node < f.grid->num_nodes(); ++node) scale = std::max(scale, f.at_node(node).norm());
  if (scale == 0.0) return true;
  for (int node = 0; node < f.grid->num_nodes(); ++node)
    if ((Lam * f.at_node(node)).norm() > tol * scale) return false;
  return true;
}

double inner_product(const FormField& a, const FormField& b) {
  if (a.degree != b.degree || a.grid != b.grid)
    throw std::invalid_argument("inner_product: mismatched fields");
  const Eigen::VectorXd& w = a.grid->quadrature_weights();
  int fd = a.fiber_dim();
  double acc = 0.0;
  for (int node = 0; node < a.grid->num_nodes(); ++node)
    acc += w[node] * a.values.segment(static_cast<long>(node) * fd, fd)
                        .dot(b.values.segment(static_cast<long>(node) * fd, fd));
  return acc;
}

double field_norm(const FormField& a) { return std::sqrt(std::max(inner_product(a, a), 0.0)); }

FormField rho_multiply(const DefiningFunction& rho, const FormField& a) {
  FormField out = a;
  int fd = a.fiber_dim();
  for (int node = 0; node < a.grid->num_nodes(); ++node)
    out.values.segment(static_cast<long>(node) * fd, fd) *= rho.values[node];
  return out;
}

BoundaryTrace restrict_boundary(const FormField& a, int face) {
  BoundaryTrace t;
  t.face = face;
  t.degree = a.degree;
  t.grid = a.grid;
  int fd = a.fiber_dim();
  t.values.resize(a.grid->face_num_nodes(), fd);
  for (int i = 0; i < a.grid->face_num_nodes(); ++i) t.values.row(i) = a.at_node(a.grid->face_node(face, i));
  return t;
}

double boundary_integral(const BoundaryTrace& t1, const BoundaryTrace& t2) {
  if (t1.face != t2.face || t1.values.rows() != t2.values.rows() || t1.values.cols() != t2.values.cols())
    throw std::invalid_argument("boundary_integral: mismatched traces");
  return t1.grid->face_weight() * (t1.values.array() * t2.values.array()).sum();
}

double trace_norm(const Grid& grid, const std::vector<BoundaryTrace>& traces) {
  double acc = 0.0;
  for (const auto& t : traces) acc += grid.face_weight() * t.values.squaredNorm();
  return std::sqrt(acc);
}

}  // namespace symphodge
