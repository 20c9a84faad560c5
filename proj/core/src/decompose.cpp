#include "symphodge/decompose.hpp"

#include <stdexcept>

namespace symphodge {

std::string flavor_name(DecompFlavor f) {
  switch (f) {
    case DecompFlavor::plus_D: return "plus_D";
    case DecompFlavor::plus_N: return "plus_N";
    case DecompFlavor::plus_mixed: return "plus_mixed";
    case DecompFlavor::minus_D: return "minus_D";
    case DecompFlavor::minus_N: return "minus_N";
    case DecompFlavor::minus_mixed: return "minus_mixed";
    case DecompFlavor::pp_N: return "pp_N";
    case DecompFlavor::pp_D: return "pp_D";
    case DecompFlavor::pp_mixed: return "pp_mixed";
    case DecompFlavor::mm_D: return "mm_D";
    case DecompFlavor::mm_N: return "mm_N";
    case DecompFlavor::mm_mixed: return "mm_mixed";
  }
  return "?";
}

const std::vector<DecompFlavor>& all_flavors() {
  static const std::vector<DecompFlavor> v = {
      DecompFlavor::plus_D, DecompFlavor::plus_N, DecompFlavor::plus_mixed,
      DecompFlavor::minus_D, DecompFlavor::minus_N, DecompFlavor::minus_mixed,
      DecompFlavor::pp_N, DecompFlavor::pp_D, DecompFlavor::pp_mixed,
      DecompFlavor::mm_D, DecompFlavor::mm_N, DecompFlavor::mm_mixed,
  };
  return v;
}

FlavorSpec flavor_spec(const SymplecticModel& model, DecompFlavor flavor, int degree) {
  const int n = model.n();
  const int k = degree;
  FlavorSpec s;
  s.degree = k;
  auto second_order = [&](HarmonicKind kind, std::optional<BcTag> hbc, OpTag up, OpTag down,
                          std::optional<BcTag> bc2, std::optional<BcTag> bc3) {
    if (k >= n) throw std::invalid_argument("flavor_spec: second-order flavors need k < n");
    s.kind = kind;
    s.harmonic_bc = hbc;
    bool raising = (up == OpTag::dplus);
    // component 2: up-operator from degree k-1 (plus) or k+1 (minus)
    int k2 = raising ? k - 1 : k + 1;
    if (k2 >= 0 && k2 <= n) {
      s.has_c2 = true;
      s.chain2 = {{{up, k2}}, 1.0};
      s.space2 = {k2, true, bc2 ? std::vector<BcTag>{*bc2} : std::vector<BcTag>{}};
    }
    int k3 = raising ? k + 1 : k - 1;
    if (k3 >= 0 && k3 <= n) {
      s.has_c3 = true;
      s.chain3 = {{{down, k3}}, 1.0};
      s.space3 = {k3, true, bc3 ? std::vector<BcTag>{*bc3} : std::vector<BcTag>{}};
    }
  };
  switch (flavor) {
    case DecompFlavor::plus_D:
      second_order(HarmonicKind::plus, BcTag::Dplus, OpTag::dplus, OpTag::dplusstar, BcTag::Dplus, std::nullopt);
      return s;
    case DecompFlavor::plus_N:
      second_order(HarmonicKind::plus, BcTag::Nplus, OpTag::dplus, OpTag::dplusstar, std::nullopt, BcTag::Nplus);
      return s;
    case DecompFlavor::plus_mixed:
      second_order(HarmonicKind::plus, std::nullopt, OpTag::dplus, OpTag::dplusstar, BcTag::Dplus, BcTag::Nplus);
      return s;
    case DecompFlavor::minus_D:
      second_order(HarmonicKind::minus, BcTag::Dminus, OpTag::dminus, OpTag::dminusstar, BcTag::Dminus,
                   std::nullopt);
      return s;
    case DecompFlavor::minus_N:
      second_order(HarmonicKind::minus, BcTag::Nminus, OpTag::dminus, OpTag::dminusstar, std::nullopt,
                   BcTag::Nminus);
      return s;
    case DecompFlavor::minus_mixed:
      second_order(HarmonicKind::minus, std::nullopt, OpTag::dminus, OpTag::dminusstar, BcTag::Dminus,
                   BcTag::Nminus);
      return s;
    default:
      break;
  }
  // fourth-order flavors live on P^n
  if (k != n) throw std::invalid_argument("flavor_spec: fourth-order flavors live on P^n");
  auto pp = [&](std::optional<BcTag> hbc, std::optional<BcTag> bc2, std::optional<BcTag> bc3) {
    s.kind = HarmonicKind::plusplus;
    s.harmonic_bc = hbc;
    s.has_c2 = true;
    s.chain2 = {{{OpTag::dplus, n - 1}}, 1.0};
    s.space2 = {n - 1, true, bc2 ? std::vector<BcTag>{*bc2} : std::vector<BcTag>{}};
    s.has_c3 = true;
    s.chain3 = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
    s.space3 = {n, true, bc3 ? std::vector<BcTag>{*bc3} : std::vector<BcTag>{}};
  };
  auto mm = [&](std::optional<BcTag> hbc, std::optional<BcTag> bc2, std::optional<BcTag> bc3) {
    s.kind = HarmonicKind::minusminus;
    s.harmonic_bc = hbc;
    s.has_c2 = true;
    s.chain2 = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
    s.space2 = {n, true, bc2 ? std::vector<BcTag>{*bc2} : std::vector<BcTag>{}};
    s.has_c3 = true;
    s.chain3 = {{{OpTag::dminusstar, n - 1}}, 1.0};
    s.space3 = {n - 1, true, bc3 ? std::vector<BcTag>{*bc3} : std::vector<BcTag>{}};
  };
  switch (flavor) {
    case DecompFlavor::pp_N:
      pp(BcTag::Nplus, std::nullopt, BcTag::NplusMinus);
      return s;
    case DecompFlavor::pp_D:
      pp(BcTag::DplusMinus, BcTag::Dplus, std::nullopt);
      return s;
    case DecompFlavor::pp_mixed:
      pp(std::nullopt, BcTag::Dplus, BcTag::NplusMinus);
      return s;
    case DecompFlavor::mm_D:
      mm(BcTag::Dminus, BcTag::DplusMinus, std::nullopt);
      return s;
    case DecompFlavor::mm_N:
      mm(BcTag::NplusMinus, std::nullopt, BcTag::Nminus);
      return s;
    case DecompFlavor::mm_mixed:
      mm(std::nullopt, BcTag::DplusMinus, BcTag::Nminus);
      return s;
    default:
      throw std::invalid_argument("flavor_spec: unknown flavor");
  }
}

DecompositionResult hodge_decompose(HodgeEngine& engine, const FormField& eta, DecompFlavor flavor,
                                    bool with_harmonic_check) {
  FlavorSpec spec = flavor_spec(*engine.model(), flavor, eta.degree);
  if (!pointwise_primitive(eta)) throw std::invalid_argument("hodge_decompose: eta must be primitive");

  DecompositionResult res;
  res.flavor = flavor;
  const double eta_norm = std::max(field_norm(eta), 1e-300);

  std::vector<ModalEngine::LsBlock> blocks;
  if (spec.has_c2) blocks.push_back({spec.chain2, spec.space2});
  if (spec.has_c3) blocks.push_back({spec.chain3, spec.space3});
  std::string key = "decomp:" + flavor_name(flavor) + ":" + std::to_string(eta.degree);
  auto sys = engine.ls_system(key, [&] { return blocks; }, eta.degree);
  auto out = engine.modal().solve_ls(*sys, eta);

  FormField u2(engine.grid(), engine.model(), eta.degree);
  FormField u3(engine.grid(), engine.model(), eta.degree);
  int bi = 0;
  if (spec.has_c2) u2 = out.fitted[bi++];
  if (spec.has_c3) u3 = out.fitted[bi++];
  res.ls_residual = out.residual / eta_norm;

  // exact in-plane re-orthogonalization: keep c2 + c3 = u2 + u3 while
  // rotating the pair inside span{u2, u3} until <c2, c3> = 0
  FormField s_field = u2;
  s_field.values += u3.values;
  FormField v0 = u2;
  v0.values = 0.5 * (u2.values - u3.values);
  double s_norm = field_norm(s_field);
  double v0_norm = field_norm(v0);
  res.c2 = u2;
  res.c3 = u3;
  if (s_norm > 1e-13 * eta_norm && v0_norm > 1e-13 * eta_norm) {
    double scale = 0.5 * s_norm / v0_norm;
    res.c2.values = 0.5 * s_field.values + scale * v0.values;
    res.c3.values = 0.5 * s_field.values - scale * v0.values;
  }
  res.c1 = eta;
  res.c1.values -= res.c2.values;
  res.c1.values -= res.c3.values;

  // sum-preserving polish: move the residual solver-level cross terms of c1
  // into c2 and c3 (rescaling each), which zeroes all three pairwise
  // products without touching c1 + c2 + c3
  for (FormField* c : {&res.c2, &res.c3}) {
    double nc2 = inner_product(*c, *c);
    if (nc2 <= 1e-24 * eta_norm * eta_norm) continue;
    double a = inner_product(res.c1, *c) / nc2;
    res.c1.values -= a * c->values;
    c->values *= (1.0 + a);
  }

  // invariants
  FormField recon = res.c1;
  recon.values += res.c2.values;
  recon.values += res.c3.values;
  recon.values -= eta.values;
  res.reconstruction_residual = field_norm(recon) / eta_norm;

  const FormField* comps[3] = {&res.c1, &res.c2, &res.c3};
  double norms[3];
  for (int i = 0; i < 3; ++i) norms[i] = field_norm(*comps[i]);
  res.gram_offdiag = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      res.gram(i, j) = inner_product(*comps[i], *comps[j]);
      if (i != j) {
        // floor the denominator so negligible components cannot blow up the
        // relative measure through a 0/0
        double denom = std::max(norms[i] * norms[j], 1e-10 * eta_norm * eta_norm);
        res.gram_offdiag = std::max(res.gram_offdiag, std::abs(res.gram(i, j)) / denom);
      }
    }

  // diagnostics: c1 should satisfy the defining equations of the kind
  double eqres = 0.0;
  for (const auto& chain : harmonic_forms(*engine.model(), spec.kind, eta.degree)) {
    SpMat A = chain_matrix(engine.factory(), chain);
    if (A.rows() == 0) continue;
    FormField Ac1(engine.grid(), engine.model(), chain_codomain_degree(chain));
    Ac1.values = A * res.c1.values;
    eqres = std::max(eqres, field_norm(Ac1) / eta_norm);
  }
  res.c1_equation_residual = eqres;

  if (with_harmonic_check) {
    // for the no-boundary-condition lines the continuum harmonic space is
    // infinite-dimensional, so the projection uses the epsilon-approximate
    // basis; the bc-constrained lines use the exact-kernel basis
    const HarmonicSpace& h = spec.harmonic_bc
                                 ? engine.harmonic(spec.kind, spec.harmonic_bc, eta.degree)
                                 : engine.harmonic_approximate(spec.kind, std::nullopt, eta.degree);
    FormField proj = engine.project_onto(h.basis, eta);
    proj.values -= res.c1.values;
    res.harmonic_projection_gap = field_norm(proj) / eta_norm;
  }
  return res;
}

}  // namespace symphodge
