#include "symphodge/gaffney.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "symphodge/random_fields.hpp"

namespace symphodge {

GaffneyResult gaffney_constant(HodgeEngine& engine, HarmonicKind which, BcTag bc, int degree) {
  const auto& model = *engine.model();
  const int n = model.n();
  const int k = degree;
  if (which != HarmonicKind::plus && which != HarmonicKind::minus)
    throw std::invalid_argument("gaffney_constant: which must be plus or minus");
  if (bc != BcTag::D && bc != BcTag::JD) throw std::invalid_argument("gaffney_constant: bc must be D or JD");
  if (k >= n) throw std::invalid_argument("gaffney_constant: needs k < n");

  auto& modal = engine.modal();
  FieldSpace space{k, true, {bc}};
  std::vector<OpChain> forms = harmonic_forms(model, which, k);

  GaffneyResult res;
  res.constant = std::numeric_limits<double>::infinity();
  const int fd = model.fiber_dim(k);
  const int n1 = modal.n1();
  for (int m = 0; m < modal.num_modes(); ++m) {
    ModeContext ctx(modal, m);
    CMat ZE = ctx.space_basis(space);
    if (ZE.cols() == 0) continue;
    res.space_dim += static_cast<int>(ZE.cols());
    // numerator: Dirichlet integral + L2 (the L2 part is the identity on the
    // M-orthonormal ZE columns)
    CMat HN = CMat::Identity(ZE.cols(), ZE.cols());
    for (const auto& c : forms) {
      CMat A = ctx.chain(c) * ZE;
      Eigen::VectorXd w = modal.mass_diag(static_cast<int>(A.rows() / n1));
      HN += A.adjoint() * w.asDiagonal() * A;
    }
    // denominator: componentwise H1 form
    CMat HD = CMat::Identity(ZE.cols(), ZE.cols());
    Eigen::VectorXd w = modal.mass_diag(fd);
    // bounded axis
    {
      CMat D = CMat::Zero(n1 * fd, n1 * fd);
      const Eigen::MatrixXd& D1 = modal.bounded_derivative();
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n1; ++j)
          if (D1(i, j) != 0.0) D.block(i * fd, j * fd, fd, fd) =
              D1(i, j) * Eigen::MatrixXd::Identity(fd, fd).cast<std::complex<double>>();
      CMat G = D * ZE;
      HD += G.adjoint() * w.asDiagonal() * G;
    }
    auto t = modal.mode_tuple(m);
    for (int a = 1; a < 2 * n; ++a) {
      std::complex<double> s = modal.axis_symbol(a, t[a - 1]);
      if (s == std::complex<double>(0.0, 0.0)) continue;
      CMat G = s * ZE;
      HD += G.adjoint() * w.asDiagonal() * G;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(HN, HD, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw std::runtime_error("gaffney_constant: eigensolver failed");
    res.constant = std::min(res.constant, es.eigenvalues().minCoeff());
  }
  if (!std::isfinite(res.constant)) res.constant = 0.0;
  return res;
}

double gaffney_conjugation_gap(HodgeEngine& engine, int degree, std::uint64_t seed, int samples) {
  const auto& model = *engine.model();
  const int n = model.n();
  const int k = degree;
  if (k >= n) throw std::invalid_argument("gaffney_conjugation_gap: needs k < n");
  auto& factory = engine.factory();

  // D_{-'}(eta,eta) = (n-k+1)^2 ||dminus eta||^2 + (n-k)^2 ||dminusstar eta||^2
  // versus D_{+}(J eta, J eta)
  SpMat Jk = factory.lift_fiber(model.J(k));
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    SmoothForm f = random_primitive_smooth_form(model, k, seed + 7919 * s);
    FormField eta = f.sample(engine.grid(), engine.model());
    double dm = 0.0;
    if (k >= 1) {
      FormField a = factory.apply(factory.assemble(OpTag::dminus, k), eta);
      dm += std::pow(double(n - k + 1), 2) * inner_product(a, a);
    }
    FormField b = factory.apply(factory.assemble(OpTag::dminusstar, k), eta);
    dm += std::pow(double(n - k), 2) * inner_product(b, b);

    FormField je = eta;
    je.values = Jk * eta.values;
    je.primitive_flag = true;
    double dp = 0.0;
    FormField c = factory.apply(factory.assemble(OpTag::dplus, k), je);
    dp += inner_product(c, c);
    if (k >= 1) {
      FormField d = factory.apply(factory.assemble(OpTag::dplusstar, k), je);
      dp += inner_product(d, d);
    }
    worst = std::max(worst, std::abs(dm - dp) / std::max({dm, dp, 1e-300}));
  }
  return worst;
}

}  // namespace symphodge
