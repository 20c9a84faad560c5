#include "symphodge/poincare.hpp"

#include <stdexcept>

#include "symphodge/symbols.hpp"

namespace symphodge {

std::string poincare_op_name(PoincareOp op) {
  switch (op) {
    case PoincareOp::dplus: return "dplus";
    case PoincareOp::dplusstar: return "dplusstar";
    case PoincareOp::dminus: return "dminus";
    case PoincareOp::dminusstar: return "dminusstar";
    case PoincareOp::dpm: return "dpm";
    case PoincareOp::dpmstar: return "dpmstar";
  }
  return "?";
}

std::string solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::integrability_violated: return "integrability_violated";
    case SolveStatus::not_converged: return "not_converged";
  }
  return "?";
}

namespace {

struct OpConfig {
  int potential_degree = 0;
  OpChain solve_chain;
  bool has_closedness = false;
  OpChain closedness;
  HarmonicKind kind = HarmonicKind::plus;
  std::optional<BcTag> harmonic_bc;        // obstruction space for the exactness lemma
  bool supports_boundary_data = false;
  BcTag trace_bc = BcTag::Dplus;           // trace operator for the boundary-data problem
  bool has_gauge = false;
  OpChain gauge;
};

OpConfig configure(const SymplecticModel& model, PoincareOp op, int k) {
  const int n = model.n();
  OpConfig c;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("poincare_solve: ") + msg);
  };
  switch (op) {
    case PoincareOp::dplus:
      need(k >= 1 && k <= n, "dplus needs 1 <= k <= n");
      c.potential_degree = k - 1;
      c.solve_chain = {{{OpTag::dplus, k - 1}}, 1.0};
      c.has_closedness = true;
      if (k < n)
        c.closedness = {{{OpTag::dplus, k}}, 1.0};
      else
        c.closedness = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
      c.kind = (k < n) ? HarmonicKind::plus : HarmonicKind::plusplus;
      c.harmonic_bc = BcTag::Nplus;
      c.supports_boundary_data = true;
      c.trace_bc = BcTag::Dplus;
      if (k - 1 >= 1) {
        c.has_gauge = true;
        c.gauge = {{{OpTag::dplusstar, k - 1}}, 1.0};
      }
      return c;
    case PoincareOp::dplusstar:
      need(k >= 0 && k < n, "dplusstar needs 0 <= k < n");
      c.potential_degree = k + 1;
      c.solve_chain = {{{OpTag::dplusstar, k + 1}}, 1.0};
      c.has_closedness = k >= 1;
      if (c.has_closedness) c.closedness = {{{OpTag::dplusstar, k}}, 1.0};
      c.kind = HarmonicKind::plus;
      c.harmonic_bc = BcTag::Dplus;
      c.supports_boundary_data = true;
      c.trace_bc = BcTag::Nplus;
      if (k + 1 < n) {
        c.has_gauge = true;
        c.gauge = {{{OpTag::dplus, k + 1}}, 1.0};
      } else if (k + 1 == n) {
        c.has_gauge = true;
        c.gauge = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
      }
      return c;
    case PoincareOp::dminus:
      need(k >= 0 && k < n, "dminus needs 0 <= k < n");
      c.potential_degree = k + 1;
      c.solve_chain = {{{OpTag::dminus, k + 1}}, 1.0};
      c.has_closedness = k >= 1;
      if (c.has_closedness) c.closedness = {{{OpTag::dminus, k}}, 1.0};
      c.kind = HarmonicKind::minus;
      c.harmonic_bc = BcTag::Nminus;
      return c;
    case PoincareOp::dminusstar:
      need(k >= 1 && k <= n, "dminusstar needs 1 <= k <= n");
      c.potential_degree = k - 1;
      c.solve_chain = {{{OpTag::dminusstar, k - 1}}, 1.0};
      c.has_closedness = true;
      if (k < n)
        c.closedness = {{{OpTag::dminusstar, k}}, 1.0};
      else
        c.closedness = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
      c.kind = (k < n) ? HarmonicKind::minus : HarmonicKind::minusminus;
      c.harmonic_bc = BcTag::Dminus;
      return c;
    case PoincareOp::dpm:
      need(k == n, "dpm lives on P^n");
      c.potential_degree = n;
      c.solve_chain = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
      c.has_closedness = true;
      c.closedness = {{{OpTag::dminus, n}}, 1.0};
      // the decomposition with a free dplus dminus potential is the
      // N_{+-} line of Table 3, so the obstruction space carries N_{+-}
      c.kind = HarmonicKind::minusminus;
      c.harmonic_bc = BcTag::NplusMinus;
      return c;
    case PoincareOp::dpmstar:
      need(k == n, "dpmstar lives on P^n");
      c.potential_degree = n;
      c.solve_chain = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
      c.has_closedness = true;
      c.closedness = {{{OpTag::dplusstar, n}}, 1.0};
      // dually, the free dminus* dplus* potential line carries D_{+-}
      c.kind = HarmonicKind::plusplus;
      c.harmonic_bc = BcTag::DplusMinus;
      return c;
  }
  throw std::invalid_argument("poincare_solve: unknown operator");
}

}  // namespace

SolveReport poincare_solve(HodgeEngine& engine, PoincareOp op, const FormField& eta,
                           const std::optional<FormField>& boundary_x, const PoincareOptions& opts) {
  const int k = eta.degree;
  OpConfig cfg = configure(*engine.model(), op, k);
  if (!pointwise_primitive(eta)) throw std::invalid_argument("poincare_solve: eta must be primitive");
  if (boundary_x && !cfg.supports_boundary_data)
    throw std::invalid_argument("poincare_solve: boundary data is only supported for dplus and dplusstar");
  if (boundary_x && boundary_x->degree != cfg.potential_degree)
    throw std::invalid_argument("poincare_solve: boundary data degree must match the potential");

  auto& factory = engine.factory();
  auto& modal = engine.modal();
  SolveReport rep;
  rep.integrability_tolerance = opts.integrability_tol;
  const double eta_norm = std::max(field_norm(eta), 1e-300);

  // closedness
  if (cfg.has_closedness) {
    SpMat C = chain_matrix(factory, cfg.closedness);
    if (C.rows() > 0) {
      FormField r(engine.grid(), engine.model(), chain_codomain_degree(cfg.closedness));
      r.values = C * eta.values;
      rep.closedness_residual = field_norm(r) / eta_norm;
    }
  }

  // obstruction pairings against the harmonic space; for the boundary-data
  // problem the space is unconstrained and the pairing carries a boundary term
  std::optional<BcTag> hbc = boundary_x ? std::nullopt : cfg.harmonic_bc;
  const HarmonicSpace& hs = engine.harmonic(cfg.kind, hbc, k);
  std::vector<double> bterm(hs.dimension, 0.0);
  if (boundary_x) {
    // integral over dM of <Op(rho x), lambda>
    OpTag trace_op = (op == PoincareOp::dplus) ? OpTag::dplus : OpTag::dplusstar;
    FormField rx = rho_multiply(factory.rho(), *boundary_x);
    FormField t = factory.apply(factory.assemble(trace_op, cfg.potential_degree), rx);
    for (int i = 0; i < hs.dimension; ++i) {
      double acc = 0.0;
      for (int face = 0; face < 2; ++face) {
        BoundaryTrace tt = restrict_boundary(t, face);
        BoundaryTrace tl = restrict_boundary(hs.basis[i], face);
        acc += boundary_integral(tt, tl);
      }
      bterm[i] = acc;
    }
  }
  for (int i = 0; i < hs.dimension; ++i)
    rep.integrability_values.push_back(inner_product(eta, hs.basis[i]) - bterm[i]);

  double worst_pairing = 0.0;
  for (double v : rep.integrability_values) worst_pairing = std::max(worst_pairing, std::abs(v));
  bool ok = rep.closedness_residual <= opts.integrability_tol && worst_pairing <= opts.integrability_tol * eta_norm;
  if (!ok) {
    rep.status = SolveStatus::integrability_violated;
    rep.solution = FormField(engine.grid(), engine.model(), cfg.potential_degree);
    return rep;
  }

  // least squares for the potential, mode by mode
  FieldSpace pot{cfg.potential_degree, true, {}};
  auto eta_modes = modal.forward(eta);
  std::vector<CVec> x_modes;
  if (boundary_x) x_modes = modal.forward(*boundary_x);
  const int fd_pot = engine.model()->fiber_dim(cfg.potential_degree);
  std::vector<CVec> phi_modes(modal.num_modes(), CVec::Zero(modal.n1() * fd_pot));
  double face_w = std::sqrt(engine.grid()->face_weight());

  for (int m = 0; m < modal.num_modes(); ++m) {
    ModeContext ctx(modal, m);
    CMat ZE = ctx.space_basis(pot);
    if (ZE.cols() == 0) continue;
    CMat A = ctx.chain(cfg.solve_chain) * ZE;
    Eigen::VectorXd wA = modal.mass_diag(static_cast<int>(A.rows() / modal.n1())).array().sqrt();
    long rows = A.rows();
    CMat G;
    CVec rhs;
    std::vector<std::pair<CMat, CVec>> stacks;
    stacks.emplace_back(wA.asDiagonal() * A, wA.asDiagonal() * eta_modes[m]);
    if (cfg.has_gauge) {
      CMat Gg = ctx.chain(cfg.gauge) * ZE;
      if (Gg.rows() > 0) {
        Eigen::VectorXd wG = modal.mass_diag(static_cast<int>(Gg.rows() / modal.n1())).array().sqrt();
        stacks.emplace_back(wG.asDiagonal() * Gg, CVec::Zero(Gg.rows()));
      }
    }
    if (boundary_x) {
      CMat R = ctx.bc_rows(cfg.trace_bc, cfg.potential_degree);
      if (R.rows() > 0) stacks.emplace_back(face_w * (R * ZE), face_w * (R * x_modes[m]));
    }
    rows = 0;
    for (const auto& s : stacks) rows += s.first.rows();
    G = CMat(rows, ZE.cols());
    rhs = CVec(rows);
    long off = 0;
    for (const auto& s : stacks) {
      G.middleRows(off, s.first.rows()) = s.first;
      rhs.segment(off, s.second.size()) = s.second;
      off += s.first.rows();
    }
    CVec y = Eigen::JacobiSVD<CMat>(G, Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    phi_modes[m] = ZE * y;
  }
  rep.solution = modal.inverse(phi_modes, cfg.potential_degree, true);

  // honest residuals in real space
  SpMat A = chain_matrix(factory, cfg.solve_chain);
  FormField fit(engine.grid(), engine.model(), k);
  fit.values = A * rep.solution.values;
  fit.values -= eta.values;
  rep.equation_residual = field_norm(fit) / eta_norm;
  if (cfg.has_gauge) {
    SpMat Gm = chain_matrix(factory, cfg.gauge);
    if (Gm.rows() > 0) {
      FormField g(engine.grid(), engine.model(), chain_codomain_degree(cfg.gauge));
      g.values = Gm * rep.solution.values;
      rep.gauge_residual = field_norm(g) / eta_norm;
    }
  }
  if (boundary_x) {
    FormField diff = rep.solution;
    diff.values -= boundary_x->values;
    diff.primitive_flag = true;
    rep.boundary_residual =
        bc_residual(factory, {cfg.trace_bc, cfg.potential_degree}, diff) / eta_norm;
  }
  rep.status = (rep.equation_residual <= 1e-6) ? SolveStatus::solved : SolveStatus::not_converged;
  return rep;
}

}  // namespace symphodge
