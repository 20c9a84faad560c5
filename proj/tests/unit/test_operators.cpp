#include <doctest.h>

#include <cmath>
#include <random>

#include "symphodge/operators.hpp"
#include "symphodge/random_fields.hpp"
#include "symphodge/symbols.hpp"

using namespace symphodge;

namespace {

struct Setup {
  std::shared_ptr<const SymplecticModel> model;
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<OperatorFactory> factory;
  Setup(int n, std::vector<int> shape, int order = 2) {
    model = std::make_shared<SymplecticModel>(n);
    grid = Grid::make(n, std::move(shape), order);
    factory = std::make_shared<OperatorFactory>(grid, model);
  }
};

double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

FormField random_node_noise(const Setup& s, int degree, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FormField f(s.grid, s.model, degree);
  for (long i = 0; i < f.values.size(); ++i) f.values[i] = g(rng);
  return f;
}

}  // namespace

TEST_CASE("discrete exterior derivative squares to zero exactly") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    for (int k = 0; k + 2 <= 2 * n; ++k) {
      FormField f = random_node_noise(s, k, 17 + k);
      FormField df = s.factory->apply(s.factory->assemble(OpTag::d, k), f);
      FormField ddf = s.factory->apply(s.factory->assemble(OpTag::d, k + 1), df);
      double scale = df.values.lpNorm<Eigen::Infinity>() / s.grid->spacing(0);
      CHECK(rel(ddf.values.lpNorm<Eigen::Infinity>(), scale) < 1e-12);
    }
  }
}

TEST_CASE("dplus on functions is exactly the exterior derivative") {
  Setup s(1, {9, 8});
  auto dplus = s.factory->assemble(OpTag::dplus, 0);
  auto d = s.factory->assemble(OpTag::d, 0);
  CHECK((dplus.mat - d.mat).norm() == 0.0);
  Setup s2(2, {5, 4, 4, 4});
  CHECK((s2.factory->assemble(OpTag::dplus, 0).mat - s2.factory->assemble(OpTag::d, 0).mat).norm() == 0.0);
}

TEST_CASE("splitting d = dplus + L dminus is exact on pointwise-primitive fields") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    for (int k = 1; k <= n; ++k) {
      SmoothForm eta = random_primitive_smooth_form(*s.model, k, 1234 + k);
      FormField f = eta.sample(s.grid, s.model);
      REQUIRE(f.primitive_flag);
      FormField df = s.factory->apply(s.factory->assemble(OpTag::d, k), f);
      FormField pf = s.factory->apply(s.factory->assemble(OpTag::dplus, k), f);
      FormField mf = s.factory->apply(s.factory->assemble(OpTag::dminus, k), f);
      double dscale = df.values.lpNorm<Eigen::Infinity>();
      if (k < n) {
        // both halves of the splitting are pointwise primitive
        CHECK(pointwise_primitive(pf, 1e-10));
      } else {
        // dplus vanishes identically on P^n
        CHECK(rel(pf.values.lpNorm<Eigen::Infinity>(), dscale) < 1e-12);
      }
      CHECK(pointwise_primitive(mf, 1e-10));
      Eigen::VectorXd lhs = df.values;
      Eigen::VectorXd rhs = pf.values;
      if (mf.values.size() > 0 && k >= 1) {
        SpMat L = s.factory->lift_fiber(s.model->L(k - 1));
        rhs += L * mf.values;
      }
      double scale = df.values.lpNorm<Eigen::Infinity>();
      CHECK(rel((lhs - rhs).lpNorm<Eigen::Infinity>(), scale) < 1e-12);
    }
  }
}

TEST_CASE("dplus squares to zero and dminusprime squares to zero on primitives") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    for (int k = 0; k + 2 <= n; ++k) {
      SmoothForm eta = random_primitive_smooth_form(*s.model, k, 7 + k);
      FormField f = eta.sample(s.grid, s.model);
      FormField p1 = s.factory->apply(s.factory->assemble(OpTag::dplus, k), f);
      FormField p2 = s.factory->apply(s.factory->assemble(OpTag::dplus, k + 1), p1);
      double scale = f.values.lpNorm<Eigen::Infinity>() / (s.grid->spacing(0) * s.grid->spacing(0));
      CHECK(rel(p2.values.lpNorm<Eigen::Infinity>(), scale) < 1e-11);
    }
    for (int k = n; k >= 2; --k) {
      SmoothForm eta = random_primitive_smooth_form(*s.model, k, 19 + k);
      FormField f = eta.sample(s.grid, s.model);
      FormField m1 = s.factory->apply(s.factory->assemble(OpTag::dminusprime, k), f);
      FormField m2 = s.factory->apply(s.factory->assemble(OpTag::dminusprime, k - 1), m1);
      double scale = f.values.lpNorm<Eigen::Infinity>() / (s.grid->spacing(0) * s.grid->spacing(0));
      CHECK(rel(m2.values.lpNorm<Eigen::Infinity>(), scale) < 1e-11);
    }
  }
}

TEST_CASE("dminus recovers the analytic coefficient at the stencil order") {
  // eta primitive with closed-form d eta; compare the discrete dminus
  // against the sampled analytic H^{-1} Lambda d eta under refinement
  for (int order : {2, 4}) {
    double e[2];
    std::vector<int> shapes = {17, 33};
    for (int i = 0; i < 2; ++i) {
      Setup s(1, {shapes[i], 2 * (shapes[i] - 1)}, order);
      SmoothForm eta = random_primitive_smooth_form(*s.model, 1, 99);
      SmoothForm deta = eta.exterior_derivative();
      SmoothForm dminus_exact = deta.apply_fiber(s.model->lambda(2), 0);  // H^{-1} = 1 at k=1, n=1
      FormField f = eta.sample(s.grid, s.model);
      FormField got = s.factory->apply(s.factory->assemble(OpTag::dminus, 1), f);
      FormField want = dminus_exact.sample(s.grid, s.model);
      FormField diff = got;
      diff.values -= want.values;
      e[i] = field_norm(diff) / std::max(field_norm(want), 1e-300);
    }
    double observed = std::log2(e[0] / e[1]);
    CHECK(observed > 0.8 * order);
    CHECK(observed < 1.2 * order);
  }
}

TEST_CASE("conjugation identities hold at matrix level") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    // dlamstar = -J d J^{-1} on every degree (random node noise, no smoothness)
    for (int k = 0; k + 1 <= 2 * n; ++k) {
      FormField f = random_node_noise(s, k, 31 + k);
      SpMat Jk = s.factory->lift_fiber(s.model->J(k));
      SpMat Jk1 = s.factory->lift_fiber(s.model->J(k + 1));
      double ksign = (k % 2 == 0) ? 1.0 : -1.0;  // J^{-1} = (-1)^k J on degree k
      Eigen::VectorXd rhs = -ksign * (Jk1 * (s.factory->assemble(OpTag::d, k).mat * (Jk * f.values)));
      Eigen::VectorXd lhs = s.factory->assemble(OpTag::dlamstar, k).mat * f.values;
      double scale = lhs.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
      CHECK(rel((lhs - rhs).lpNorm<Eigen::Infinity>(), scale) < 1e-12);
    }
    // dminusprime = J dplus* J^{-1} on primitive fields
    for (int k = 1; k <= n; ++k) {
      SmoothForm eta = random_primitive_smooth_form(*s.model, k, 77 + k);
      FormField f = eta.sample(s.grid, s.model);
      SpMat Jk = s.factory->lift_fiber(s.model->J(k));
      SpMat Jkm1 = s.factory->lift_fiber(s.model->J(k - 1));
      double ksign = (k % 2 == 0) ? 1.0 : -1.0;
      Eigen::VectorXd rhs = ksign * (Jkm1 * (s.factory->assemble(OpTag::dplusstar, k).mat * (Jk * f.values)));
      Eigen::VectorXd lhs = s.factory->assemble(OpTag::dminusprime, k).mat * f.values;
      double scale = lhs.lpNorm<Eigen::Infinity>() + f.values.lpNorm<Eigen::Infinity>() / s.grid->spacing(0);
      CHECK(rel((lhs - rhs).lpNorm<Eigen::Infinity>(), scale) < 1e-12);
    }
  }
}

TEST_CASE("commutator [dlam, L] = d at matrix level") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    for (int k = 0; k + 1 <= 2 * n && k + 2 <= 2 * n; ++k) {
      FormField f = random_node_noise(s, k, 53 + k);
      SpMat Lk = s.factory->lift_fiber(s.model->L(k));
      Eigen::VectorXd t1 = s.factory->assemble(OpTag::dlam, k + 2).mat * (Lk * f.values);
      Eigen::VectorXd t2(t1.size());
      t2.setZero();
      if (k >= 1) {
        SpMat Lkm1 = s.factory->lift_fiber(s.model->L(k - 1));
        t2 = Lkm1 * (s.factory->assemble(OpTag::dlam, k).mat * f.values);
      }
      Eigen::VectorXd rhs = s.factory->assemble(OpTag::d, k).mat * f.values;
      double scale = rhs.lpNorm<Eigen::Infinity>();
      CHECK(rel((t1 - t2 - rhs).lpNorm<Eigen::Infinity>(), scale) < 1e-12);
    }
  }
}

TEST_CASE("the fourth-order Laplacian pair agrees with lap_pp / lap_mm on primitive n-forms") {
  for (int n : {1, 2}) {
    Setup s(n, n == 1 ? std::vector<int>{9, 8} : std::vector<int>{5, 4, 4, 4});
    SmoothForm eta = random_primitive_smooth_form(*s.model, n, 4242);
    FormField f = eta.sample(s.grid, s.model);
    Eigen::VectorXd a = s.factory->assemble(OpTag::lap_ddlam, n).mat * f.values;
    Eigen::VectorXd b = s.factory->assemble(OpTag::lap_pp, n).mat * f.values;
    CHECK(rel((a - b).lpNorm<Eigen::Infinity>(), a.lpNorm<Eigen::Infinity>()) < 1e-10);
    Eigen::VectorXd c = s.factory->assemble(OpTag::lap_dplusdlam, n).mat * f.values;
    Eigen::VectorXd d = s.factory->assemble(OpTag::lap_mm, n).mat * f.values;
    CHECK(rel((c - d).lpNorm<Eigen::Infinity>(), c.lpNorm<Eigen::Infinity>()) < 1e-10);
  }
}

TEST_CASE("assemble rejects invalid degree/tag combinations") {
  Setup s(2, {5, 4, 4, 4});
  CHECK_THROWS(s.factory->assemble(OpTag::lap_plus, 2));   // k = n rejected
  CHECK_THROWS(s.factory->assemble(OpTag::lap_pp, 1));     // needs k = n
  CHECK_THROWS(s.factory->assemble(OpTag::dplus, 3));      // beyond primitive range
  CHECK_THROWS(s.factory->assemble(OpTag::dminusstar, 2)); // needs k < n
}

TEST_CASE("Green's defect vanishes to rounding for fields supported away from the boundary") {
  Setup s(1, {17, 8});
  for (OpTag tag : {OpTag::d, OpTag::dlam}) {
    FormField phi = random_node_noise(s, 1, 3);
    FormField psi = random_node_noise(s, tag == OpTag::d ? 2 : 0, 4);
    for (auto* f : {&phi, &psi})
      for (int node = 0; node < s.grid->num_nodes(); ++node) {
        double x1 = s.grid->position(node)[0];
        if (x1 < 0.3 || x1 > 0.7) f->set_node(node, Eigen::VectorXd::Zero(f->fiber_dim()));
      }
    CHECK(s.factory->greens_defect(tag, phi, psi) < 1e-12);
  }
}

TEST_CASE("Green's defects decay at the stencil order for all first-order formulas") {
  struct Case {
    OpTag tag;
    int kphi;
    int kpsi;
    bool prim;
  };
  // degrees chosen so all operands live inside the n=1 primitive range
  for (Case c : {Case{OpTag::d, 1, 2, false}, Case{OpTag::dlam, 1, 0, false}, Case{OpTag::dplus, 0, 1, true},
                 Case{OpTag::dminus, 1, 0, true}}) {
    double e[2];
    std::vector<int> Ns = {17, 33};
    for (int i = 0; i < 2; ++i) {
      Setup s(1, {Ns[i], Ns[i] - 1});
      SmoothForm phi_s =
          c.prim ? random_primitive_smooth_form(*s.model, c.kphi, 5150) : random_smooth_form(1, c.kphi, 5150);
      FormField phi = phi_s.sample(s.grid, s.model);
      SmoothForm psi_s =
          c.prim ? random_primitive_smooth_form(*s.model, c.kpsi, 6160) : random_smooth_form(1, c.kpsi, 6160);
      FormField psi = psi_s.sample(s.grid, s.model);
      e[i] = s.factory->greens_defect(c.tag, phi, psi);
    }
    double observed = std::log2(e[0] / e[1]);
    INFO("tag ", op_tag_name(c.tag), " defect order ", observed);
    CHECK(observed > 1.6);
    CHECK(observed < 2.4);
  }
}

TEST_CASE("symbols match the adapted-frame formulas") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int n : {1, 2}) {
    SymplecticModel m(n);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd xi(2 * n);
      for (int i = 0; i < xi.size(); ++i) xi[i] = g(rng);
      xi.normalize();
      Eigen::VectorXd w2 = -(m.J(1) * xi);  // omega = w1 ^ w2 + (rest)
      for (int k = 1; k <= 2 * n - 1; ++k) {
        // sigma(d) = xi ^ .
        Eigen::MatrixXd sd = fiber_symbol(m, OpTag::d, k, xi);
        CHECK((sd - wedge_matrix(n, xi, k)).cwiseAbs().maxCoeff() < 1e-12);
        // sigma(d*) = -i_{e1}
        Eigen::MatrixXd sds = fiber_symbol(m, OpTag::dstar, k, xi);
        CHECK((sds + contraction_matrix(n, xi, k)).cwiseAbs().maxCoeff() < 1e-12);
        // sigma(dlam) = -i_{e2}
        Eigen::MatrixXd sdl = fiber_symbol(m, OpTag::dlam, k, xi);
        CHECK((sdl + contraction_matrix(n, w2, k)).cwiseAbs().maxCoeff() < 1e-12);
        // sigma(dlamstar) = w2 ^ .
        Eigen::MatrixXd sdls = fiber_symbol(m, OpTag::dlamstar, k, xi);
        CHECK((sdls - wedge_matrix(n, w2, k)).cwiseAbs().maxCoeff() < 1e-12);
        // symbol of a composition = product of symbols: d dlam vs the two factors
        Eigen::MatrixXd comp = fiber_symbol(m, OpTag::d, k - 1, xi) * fiber_symbol(m, OpTag::dlam, k, xi);
        Eigen::MatrixXd direct = wedge_matrix(n, xi, k - 1) * (-contraction_matrix(n, w2, k));
        CHECK((comp - direct).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("symbol of the dd^Lambda Laplacian has block multipliers {1,1,1/4,1/4} and is elliptic") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int n : {1, 2}) {
    SymplecticModel m(n);
    for (int k = 1; k <= 2 * n - 1; ++k) {
      double min_sv = 1e30;
      for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd xi(2 * n);
        for (int i = 0; i < xi.size(); ++i) xi[i] = g(rng);
        xi.normalize();
        Eigen::MatrixXd sym = fiber_symbol(m, OpTag::lap_ddlam, k, xi);
        auto blocks = adapted_block_projectors(m, xi, k);
        double mult[4] = {1.0, 1.0, 0.25, 0.25};
        for (int b = 0; b < 4; ++b)
          CHECK((sym * blocks[b] - mult[b] * blocks[b]).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(sym);
        min_sv = std::min(min_sv, svd.singularValues().minCoeff());
      }
      CHECK(min_sv >= 0.25 - 1e-10);
    }
  }
}

TEST_CASE("symbol_at rejects the zero covector and non-unit covectors") {
  SymplecticModel m(1);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK_THROWS(symbol_at(m, OpTag::d, Eigen::VectorXd::Zero(2), zero, 1));
  Eigen::VectorXd big = 2.0 * Eigen::VectorXd::Unit(2, 0);
  CHECK_THROWS(symbol_at(m, OpTag::d, Eigen::VectorXd::Zero(2), big, 1));
  Eigen::VectorXd unit = Eigen::VectorXd::Unit(2, 0);
  auto s = symbol_at(m, OpTag::d, Eigen::VectorXd::Zero(2), unit, 1);
  CHECK(s.matrix.rows() == 1);
}
