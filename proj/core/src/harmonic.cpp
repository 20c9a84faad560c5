#include "symphodge/harmonic.hpp"

#include <stdexcept>

namespace symphodge {

std::string harmonic_kind_name(HarmonicKind k) {
  switch (k) {
    case HarmonicKind::plus: return "plus";
    case HarmonicKind::minus: return "minus";
    case HarmonicKind::plusplus: return "plusplus";
    case HarmonicKind::minusminus: return "minusminus";
    case HarmonicKind::deRham: return "deRham";
  }
  return "?";
}

std::vector<OpChain> harmonic_forms(const SymplecticModel& model, HarmonicKind kind, int degree) {
  const int n = model.n();
  const int k = degree;
  switch (kind) {
    case HarmonicKind::plus:
      if (k >= n) throw std::invalid_argument("harmonic_forms: kind plus needs k < n");
      if (k >= 1) return {{{{OpTag::dplus, k}}, 1.0}, {{{OpTag::dplusstar, k}}, 1.0}};
      return {{{{OpTag::dplus, k}}, 1.0}};
    case HarmonicKind::minus:
      if (k >= n) throw std::invalid_argument("harmonic_forms: kind minus needs k < n");
      if (k >= 1) return {{{{OpTag::dminus, k}}, 1.0}, {{{OpTag::dminusstar, k}}, 1.0}};
      return {{{{OpTag::dminusstar, k}}, 1.0}};
    case HarmonicKind::plusplus:
      if (k != n) throw std::invalid_argument("harmonic_forms: kind plusplus lives on P^n");
      return {{{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0}, {{{OpTag::dplusstar, n}}, 1.0}};
    case HarmonicKind::minusminus:
      if (k != n) throw std::invalid_argument("harmonic_forms: kind minusminus lives on P^n");
      return {{{{OpTag::dminus, n}}, 1.0}, {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0}};
    case HarmonicKind::deRham: {
      std::vector<OpChain> forms;
      if (k < 2 * n) forms.push_back({{{OpTag::d, k}}, 1.0});
      if (k > 0) forms.push_back({{{OpTag::dstar, k}}, 1.0});
      return forms;
    }
  }
  throw std::invalid_argument("harmonic_forms: unknown kind");
}

HodgeEngine::HodgeEngine(int n, std::vector<int> shape, int stencil_order, double cutoff)
    : grid_(Grid::make(n, std::move(shape), stencil_order)),
      model_(std::make_shared<SymplecticModel>(n)),
      factory_(std::make_unique<OperatorFactory>(grid_, model_)),
      modal_(std::make_unique<ModalEngine>(grid_, model_)),
      cutoff_(cutoff) {}

const HarmonicSpace& HodgeEngine::harmonic(HarmonicKind kind, std::optional<BcTag> bc, int degree) {
  auto key = std::make_tuple(static_cast<int>(kind), bc ? static_cast<int>(*bc) : -1, degree);
  auto it = harmonic_cache_.find(key);
  if (it == harmonic_cache_.end())
    it = harmonic_cache_.emplace(key, harmonic_space(*this, kind, bc, degree, cutoff_)).first;
  return it->second;
}

int HodgeEngine::harmonic_dim(HarmonicKind kind, std::optional<BcTag> bc, int degree) {
  return harmonic(kind, bc, degree).dimension;
}

int HodgeEngine::approximate_harmonic_count(HarmonicKind kind, std::optional<BcTag> bc, int degree, double tau) {
  return harmonic_approximate(kind, bc, degree, tau).dimension;
}

const HarmonicSpace& HodgeEngine::harmonic_approximate(HarmonicKind kind, std::optional<BcTag> bc, int degree,
                                                       double tau) {
  auto key = std::make_tuple(1000 + static_cast<int>(kind), bc ? static_cast<int>(*bc) : -1, degree);
  auto it = harmonic_cache_.find(key);
  if (it == harmonic_cache_.end()) {
    NullspaceProblem p;
    p.space.degree = degree;
    p.space.primitive = (kind != HarmonicKind::deRham);
    if (bc) p.space.bcs = {*bc};
    p.forms = harmonic_forms(*model_, kind, degree);
    p.cutoff = tau;
    p.absolute_cutoff = true;
    NullspaceResult r = modal_->nullspace(p, true);
    HarmonicSpace h;
    h.kind = kind;
    h.bc = bc;
    h.degree = degree;
    h.cutoff = tau;
    h.dimension = r.dimension;
    h.basis = std::move(r.basis);
    h.residual_values = std::move(r.small_values);
    h.diag = r.diag;
    it = harmonic_cache_.emplace(key, std::move(h)).first;
  }
  return it->second;
}

FormField HodgeEngine::project_onto(const std::vector<FormField>& basis, const FormField& f) const {
  FormField out(grid_, model_, f.degree);
  out.primitive_flag = f.primitive_flag;
  for (const auto& b : basis) out.values += inner_product(b, f) * b.values;
  return out;
}

std::shared_ptr<ModalEngine::LsSystem> HodgeEngine::ls_system(
    const std::string& key, const std::function<std::vector<ModalEngine::LsBlock>()>& blocks_fn,
    int target_degree) {
  auto it = ls_cache_.find(key);
  if (it == ls_cache_.end()) it = ls_cache_.emplace(key, modal_->build_ls(blocks_fn(), target_degree)).first;
  return it->second;
}

HarmonicSpace harmonic_space(HodgeEngine& engine, HarmonicKind kind, std::optional<BcTag> bc, int degree,
                             double cutoff, bool want_basis) {
  NullspaceProblem p;
  p.space.degree = degree;
  p.space.primitive = (kind != HarmonicKind::deRham);
  if (bc) p.space.bcs = {*bc};
  p.forms = harmonic_forms(*engine.model(), kind, degree);
  p.cutoff = cutoff;
  NullspaceResult r = engine.modal().nullspace(p, want_basis);
  HarmonicSpace h;
  h.kind = kind;
  h.bc = bc;
  h.degree = degree;
  h.cutoff = cutoff;
  h.dimension = r.dimension;
  h.basis = std::move(r.basis);
  h.residual_values = std::move(r.small_values);
  h.diag = r.diag;
  return h;
}

}  // namespace symphodge
