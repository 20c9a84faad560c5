#pragma once

#include <cstdint>

#include "symphodge/grid.hpp"

namespace symphodge {

/// Truncated Fourier series with decaying spectrum; closed under exact
/// differentiation, so manufactured solutions carry analytic derivatives.
class SmoothScalar {
 public:
  struct Term {
    double amplitude = 0.0;
    std::vector<int> mode;      // per axis; axis 0 uses cos(pi m x), others cos(2 pi m x)
    std::vector<double> phase;  // per axis
  };

  SmoothScalar() = default;
  explicit SmoothScalar(int dim) : dim_(dim) {}

  int dimension() const { return dim_; }
  void add_term(Term t) { terms_.push_back(std::move(t)); }
  double eval(const std::vector<double>& x) const;
  SmoothScalar derivative(int axis) const;  // exact
  SmoothScalar scaled(double s) const;
  static SmoothScalar sum(const SmoothScalar& a, const SmoothScalar& b);
  bool empty() const { return terms_.empty(); }

 private:
  int dim_ = 0;
  std::vector<Term> terms_;
};

/// Analytic degree-k form with SmoothScalar coefficients over the ordered
/// fiber basis; supports exact exterior derivative and constant fiber maps.
struct SmoothForm {
  int n = 1;
  int degree = 0;
  std::vector<SmoothScalar> comps;

  FormExpression to_expression() const;
  SmoothForm exterior_derivative() const;
  SmoothForm apply_fiber(const Eigen::MatrixXd& F, int out_degree) const;
  FormField sample(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model) const;
};

struct RandomFieldOptions {
  int terms = 6;
  int max_mode = 2;
  double decay = 0.6;
};

/// Seeded random smooth form over the full fiber basis.
SmoothForm random_smooth_form(int n, int degree, std::uint64_t seed, const RandomFieldOptions& opts = {});

/// Seeded random smooth pointwise-primitive form (combination of the
/// constant primitive fiber basis with smooth scalar coefficients).
SmoothForm random_primitive_smooth_form(const SymplecticModel& model, int degree, std::uint64_t seed,
                                        const RandomFieldOptions& opts = {});

}  // namespace symphodge
