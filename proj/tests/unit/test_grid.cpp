#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "symphodge/grid.hpp"

using namespace symphodge;

namespace {
const double kPi = 3.14159265358979323846;

FormExpression scalar_expr(int n, std::function<double(const std::vector<double>&)> f) {
  FormExpression e;
  e.n = n;
  e.degree = 0;
  e.components = {std::move(f)};
  return e;
}
}  // namespace

TEST_CASE("grid construction and node bookkeeping") {
  auto g = Grid::make(1, {9, 8});
  CHECK(g->num_nodes() == 72);
  CHECK(g->spacing(0) == doctest::Approx(1.0 / 8));
  CHECK(g->spacing(1) == doctest::Approx(1.0 / 8));
  CHECK_FALSE(g->axis_periodic(0));
  CHECK(g->axis_periodic(1));
  // boundary mask marks exactly the two x1 faces
  int nb = 0;
  for (int i = 0; i < g->num_nodes(); ++i)
    if (g->is_boundary(i)) ++nb;
  CHECK(nb == 2 * g->face_num_nodes());
  CHECK_THROWS(Grid::make(1, {4, 8}));
  CHECK_THROWS(Grid::make(1, {9, 4}, 4));
  CHECK_THROWS(Grid::make(1, {9, 8}, 3));
}

TEST_CASE("defining function: boundary values, unit collar gradient, C2 blend") {
  auto g = Grid::make(1, {17, 8});
  auto rho = make_rho(*g);
  for (int node = 0; node < g->num_nodes(); ++node) {
    double x1 = g->position(node)[0];
    if (g->boundary_face(node) == 0) {
      CHECK(rho.values[node] == 0.0);
      CHECK(rho.gradient(node, 0) == doctest::Approx(-1.0));
    }
    if (g->boundary_face(node) == 1) {
      CHECK(rho.values[node] == 0.0);
      CHECK(rho.gradient(node, 0) == doctest::Approx(1.0));
    }
    if (!g->is_boundary(node)) CHECK(rho.values[node] < 0.0);
    if (x1 <= 0.25 || x1 >= 0.75) CHECK(std::abs(std::abs(rho.gradient(node, 0)) - 1.0) < 1e-15);
  }
  // x1 = 0.125 has rho = -0.125 on this grid
  CHECK(DefiningFunction::rho_at(0.1) == doctest::Approx(-0.1));
  CHECK(DefiningFunction::drho_at(0.1) == doctest::Approx(-1.0));

  // collar gradient stays exactly unit under refinement
  for (int N : {17, 33, 65}) {
    auto gg = Grid::make(1, {N, 8});
    auto r = make_rho(*gg);
    double worst = 0.0;
    for (int node = 0; node < gg->num_nodes(); ++node) {
      double x1 = gg->position(node)[0];
      if (x1 <= 0.25 || x1 >= 0.75)
        worst = std::max(worst, std::abs(std::abs(r.gradient(node, 0)) - 1.0));
    }
    CHECK(worst < 1e-12);
  }

  // C2 continuity of the quintic blend at the junctions
  for (double x : {0.35, 0.65}) {
    double eps = 1e-7;
    double dl = (DefiningFunction::rho_at(x) - DefiningFunction::rho_at(x - eps)) / eps;
    double dr = (DefiningFunction::rho_at(x + eps) - DefiningFunction::rho_at(x)) / eps;
    CHECK(std::abs(dl - dr) < 1e-5);
    double d2l = (DefiningFunction::drho_at(x) - DefiningFunction::drho_at(x - eps)) / eps;
    double d2r = (DefiningFunction::drho_at(x + eps) - DefiningFunction::drho_at(x)) / eps;
    CHECK(std::abs(d2l - d2r) < 1e-4);
  }
}

TEST_CASE("sample_form sets the primitive flag from the pointwise check") {
  auto m = std::make_shared<SymplecticModel>(2);
  auto g = Grid::make(2, {5, 4, 4, 4});

  auto f = sample_form(g, m, scalar_expr(2, [](const std::vector<double>& x) { return std::sin(2 * kPi * x[1]); }));
  CHECK(f.primitive_flag);

  // omega as a constant 2-form is not primitive
  FormExpression omega;
  omega.n = 2;
  omega.degree = 2;
  for (int c = 0; c < m->fiber_dim(2); ++c) {
    double v = m->omega_form()[c];
    omega.components.push_back([v](const std::vector<double>&) { return v; });
  }
  FormField fo = sample_form(g, m, omega);
  CHECK_FALSE(fo.primitive_flag);

  // constant dx1 ^ dx3 is primitive
  FormExpression p13;
  p13.n = 2;
  p13.degree = 2;
  int idx13 = FiberBasis::index_of(2, 2, {0, 2});
  for (int c = 0; c < m->fiber_dim(2); ++c)
    p13.components.push_back([c, idx13](const std::vector<double>&) { return c == idx13 ? 1.0 : 0.0; });
  CHECK(sample_form(g, m, p13).primitive_flag);
}

TEST_CASE("sample_form rejects non-periodic expressions with a seam report") {
  auto m = std::make_shared<SymplecticModel>(1);
  auto g = Grid::make(1, {9, 8});
  auto bad = scalar_expr(1, [](const std::vector<double>& x) { return x[1]; });
  CHECK_THROWS_WITH_AS(sample_form(g, m, bad), doctest::Contains("seam mismatch"), std::invalid_argument);
  // non-periodic in x1 is fine
  auto ok = scalar_expr(1, [](const std::vector<double>& x) { return x[0]; });
  CHECK_NOTHROW(sample_form(g, m, ok));
}

TEST_CASE("quadrature: volume, orthogonality, exactness for low trigonometric modes") {
  auto m = std::make_shared<SymplecticModel>(1);
  auto g = Grid::make(1, {17, 16});

  auto one = sample_form(g, m, scalar_expr(1, [](const std::vector<double>&) { return 1.0; }));
  CHECK(inner_product(one, one) == doctest::Approx(1.0).epsilon(1e-14));

  auto s = sample_form(g, m, scalar_expr(1, [](const std::vector<double>& x) { return std::sin(2 * kPi * x[1]); }));
  auto c = sample_form(g, m, scalar_expr(1, [](const std::vector<double>& x) { return std::cos(2 * kPi * x[1]); }));
  CHECK(std::abs(inner_product(s, c)) < 1e-12);
  // trapezoid is exact for products of modes below N/2 on the periodic axis
  CHECK(inner_product(s, s) == doctest::Approx(0.5).epsilon(1e-13));
  auto s3 = sample_form(g, m, scalar_expr(1, [](const std::vector<double>& x) { return std::sin(6 * kPi * x[1]); }));
  CHECK(std::abs(inner_product(s, s3)) < 1e-12);

  // constant dx1 field has unit norm
  FormExpression dx1;
  dx1.n = 1;
  dx1.degree = 1;
  dx1.components = {[](const std::vector<double>&) { return 1.0; }, [](const std::vector<double>&) { return 0.0; }};
  auto f1 = sample_form(g, m, dx1);
  CHECK(inner_product(f1, f1) == doctest::Approx(1.0).epsilon(1e-14));

  // positive definiteness on random fields
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  FormField r(g, m, 1);
  for (long i = 0; i < r.values.size(); ++i) r.values[i] = gauss(rng);
  CHECK(inner_product(r, r) > 0.0);
}

TEST_CASE("rho multiplication and boundary restriction") {
  auto m = std::make_shared<SymplecticModel>(1);
  auto g = Grid::make(1, {9, 8});
  auto rho = make_rho(*g);

  FormExpression dx1;
  dx1.n = 1;
  dx1.degree = 1;
  dx1.components = {[](const std::vector<double>&) { return 1.0; }, [](const std::vector<double>&) { return 0.0; }};
  auto f = sample_form(g, m, dx1);

  auto rf = rho_multiply(rho, f);
  for (int face = 0; face < 2; ++face) {
    auto t = restrict_boundary(rf, face);
    CHECK(t.values.cwiseAbs().maxCoeff() == 0.0);
    auto tf = restrict_boundary(f, face);
    CHECK((tf.values.col(0).array() - 1.0).abs().maxCoeff() == 0.0);
    CHECK(tf.values.col(1).cwiseAbs().maxCoeff() == 0.0);
  }
  // boundary integral of the unit trace over one face is the face area (1)
  auto t0 = restrict_boundary(f, 0);
  CHECK(boundary_integral(t0, t0) == doctest::Approx(1.0));
}

TEST_CASE("field serialization round-trips bit-exactly") {
  auto m = std::make_shared<SymplecticModel>(1);
  auto g = Grid::make(1, {9, 8});
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  FormField f(g, m, 1);
  for (long i = 0; i < f.values.size(); ++i) f.values[i] = gauss(rng) * std::pow(10.0, (i % 7) - 3);
  f.primitive_flag = true;
  std::string path = "/tmp/symphodge_field_test.syhf";
  save_field(f, path);
  FormField back = load_field(path, g, m);
  CHECK(back.degree == f.degree);
  CHECK(back.primitive_flag == f.primitive_flag);
  REQUIRE(back.values.size() == f.values.size());
  for (long i = 0; i < f.values.size(); ++i) {
    CHECK(std::memcmp(&back.values[i], &f.values[i], sizeof(double)) == 0);
  }
  std::remove(path.c_str());

  // trace CSV export writes one row per face node
  auto t = restrict_boundary(f, 0);
  std::string csv = "/tmp/symphodge_trace_test.csv";
  export_trace_csv(t, csv);
  std::ifstream is(csv);
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == g->face_num_nodes() + 1);
  std::remove(csv.c_str());
}
