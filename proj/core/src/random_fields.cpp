#include "symphodge/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace symphodge {

namespace {
const double kPi = 3.14159265358979323846;
}

double SmoothScalar::eval(const std::vector<double>& x) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    double v = t.amplitude;
    for (int a = 0; a < dim_; ++a) {
      double freq = (a == 0) ? kPi * t.mode[a] : 2.0 * kPi * t.mode[a];
      v *= std::cos(freq * x[a] + t.phase[a]);
    }
    acc += v;
  }
  return acc;
}

SmoothScalar SmoothScalar::derivative(int axis) const {
  SmoothScalar out(dim_);
  for (const auto& t : terms_) {
    double freq = (axis == 0) ? kPi * t.mode[axis] : 2.0 * kPi * t.mode[axis];
    if (freq == 0.0) continue;
    Term d = t;
    // d/dx cos(fx + p) = f cos(fx + p + pi/2)
    d.amplitude = t.amplitude * freq;
    d.phase[axis] = t.phase[axis] + kPi / 2.0;
    out.add_term(std::move(d));
  }
  return out;
}

SmoothScalar SmoothScalar::scaled(double s) const {
  SmoothScalar out(dim_);
  if (s == 0.0) return out;
  for (auto t : terms_) {
    t.amplitude *= s;
    out.add_term(std::move(t));
  }
  return out;
}

SmoothScalar SmoothScalar::sum(const SmoothScalar& a, const SmoothScalar& b) {
  SmoothScalar out(std::max(a.dim_, b.dim_));
  for (const auto& t : a.terms_) out.add_term(t);
  for (const auto& t : b.terms_) out.add_term(t);
  return out;
}

FormExpression SmoothForm::to_expression() const {
  FormExpression e;
  e.n = n;
  e.degree = degree;
  for (const auto& c : comps)
    e.components.push_back([c](const std::vector<double>& x) { return c.eval(x); });
  return e;
}

SmoothForm SmoothForm::exterior_derivative() const {
  SmoothForm out;
  out.n = n;
  out.degree = degree + 1;
  int dout = FiberBasis::dim(n, degree + 1);
  out.comps.assign(dout, SmoothScalar(2 * n));
  if (dout == 0) return out;
  const auto& sin_ = FiberBasis::subsets(n, degree);
  for (int i = 0; i < static_cast<int>(sin_.size()); ++i) {
    if (comps[i].empty()) continue;
    for (int a = 0; a < 2 * n; ++a) {
      // e_a ^ e_S with its merge sign
      const auto& S = sin_[i];
      if (std::binary_search(S.begin(), S.end(), a)) continue;
      std::vector<int> merged = S;
      auto pos = std::lower_bound(merged.begin(), merged.end(), a);
      int before = static_cast<int>(pos - merged.begin());
      merged.insert(pos, a);
      double sign = (before % 2 == 0) ? 1.0 : -1.0;
      int j = FiberBasis::index_of(n, degree + 1, merged);
      out.comps[j] = SmoothScalar::sum(out.comps[j], comps[i].derivative(a).scaled(sign));
    }
  }
  return out;
}

SmoothForm SmoothForm::apply_fiber(const Eigen::MatrixXd& F, int out_degree) const {
  if (F.cols() != static_cast<int>(comps.size()))
    throw std::invalid_argument("SmoothForm::apply_fiber: dimension mismatch");
  SmoothForm out;
  out.n = n;
  out.degree = out_degree;
  out.comps.assign(F.rows(), SmoothScalar(2 * n));
  for (int r = 0; r < F.rows(); ++r)
    for (int c = 0; c < F.cols(); ++c)
      if (F(r, c) != 0.0) out.comps[r] = SmoothScalar::sum(out.comps[r], comps[c].scaled(F(r, c)));
  return out;
}

FormField SmoothForm::sample(std::shared_ptr<const Grid> grid, std::shared_ptr<const SymplecticModel> model) const {
  return sample_form(std::move(grid), std::move(model), to_expression());
}

namespace {

SmoothScalar random_scalar(int dim, std::mt19937_64& rng, const RandomFieldOptions& opts) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> mode(0, opts.max_mode);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
  SmoothScalar s(dim);
  for (int t = 0; t < opts.terms; ++t) {
    SmoothScalar::Term term;
    term.mode.resize(dim);
    term.phase.resize(dim);
    double m2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      term.mode[a] = mode(rng);
      term.phase[a] = ph(rng);
      m2 += term.mode[a] * term.mode[a];
    }
    term.amplitude = gauss(rng) * std::exp(-opts.decay * m2);
    s.add_term(std::move(term));
  }
  return s;
}

}  // namespace

SmoothForm random_smooth_form(int n, int degree, std::uint64_t seed, const RandomFieldOptions& opts) {
  std::mt19937_64 rng(seed);
  SmoothForm f;
  f.n = n;
  f.degree = degree;
  int dk = FiberBasis::dim(n, degree);
  for (int c = 0; c < dk; ++c) f.comps.push_back(random_scalar(2 * n, rng, opts));
  return f;
}

SmoothForm random_primitive_smooth_form(const SymplecticModel& model, int degree, std::uint64_t seed,
                                        const RandomFieldOptions& opts) {
  if (degree > model.n()) throw std::invalid_argument("random_primitive_smooth_form: degree exceeds n");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd& P = model.primitive_basis(degree);
  SmoothForm f;
  f.n = model.n();
  f.degree = degree;
  f.comps.assign(model.fiber_dim(degree), SmoothScalar(2 * model.n()));
  for (int j = 0; j < P.cols(); ++j) {
    SmoothScalar s = random_scalar(2 * model.n(), rng, opts);
    for (int r = 0; r < P.rows(); ++r)
      if (P(r, j) != 0.0) f.comps[r] = SmoothScalar::sum(f.comps[r], s.scaled(P(r, j)));
  }
  return f;
}

}  // namespace symphodge
