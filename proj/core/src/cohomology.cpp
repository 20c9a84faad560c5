#include "symphodge/cohomology.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <stdexcept>

namespace symphodge {

std::string cohom_level_name(CohomLevel l) {
  switch (l) {
    case CohomLevel::dplus_k: return "dplus_k";
    case CohomLevel::dminus_k: return "dminus_k";
    case CohomLevel::dplus_n: return "dplus_n";
    case CohomLevel::dminus_n: return "dminus_n";
  }
  return "?";
}

std::string cohom_variant_name(CohomVariant v) {
  switch (v) {
    case CohomVariant::absolute: return "absolute";
    case CohomVariant::dual: return "dual";
    case CohomVariant::relative_D: return "relative_D";
    case CohomVariant::relative_N: return "relative_N";
  }
  return "?";
}

namespace {

struct Spot {
  FieldSpace here;   // C_k
  OpChain out;       // outgoing map on C_k
  bool has_out = true;
  FieldSpace prev;   // domain of the incoming map
  OpChain in;
  bool has_in = true;
};

std::vector<BcTag> tags(std::optional<BcTag> t) {
  return t ? std::vector<BcTag>{*t} : std::vector<BcTag>{};
}

// the complex spot (spaces + maps) for one (level, variant, k)
Spot make_spot(const SymplecticModel& model, CohomLevel level, CohomVariant variant, int k) {
  const int n = model.n();
  Spot s;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("cohomology_dim: ") + msg);
  };
  switch (variant) {
    case CohomVariant::absolute:
      switch (level) {
        case CohomLevel::dplus_k:
          need(k >= 0 && k < n, "dplus_k needs 0 <= k < n");
          s.here = {k, true, {}};
          s.out = {{{OpTag::dplus, k}}, 1.0};
          s.has_in = k >= 1;
          if (s.has_in) {
            s.prev = {k - 1, true, {}};
            s.in = {{{OpTag::dplus, k - 1}}, 1.0};
          }
          return s;
        case CohomLevel::dplus_n:
          s.here = {n, true, {}};
          s.out = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
          s.prev = {n - 1, true, {}};
          s.in = {{{OpTag::dplus, n - 1}}, 1.0};
          return s;
        case CohomLevel::dminus_k:
          need(k >= 0 && k < n, "dminus_k needs 0 <= k < n");
          s.here = {k, true, {}};
          s.has_out = k >= 1;
          if (s.has_out) s.out = {{{OpTag::dminus, k}}, 1.0};
          s.prev = {k + 1, true, {}};
          s.in = {{{OpTag::dminus, k + 1}}, 1.0};
          return s;
        case CohomLevel::dminus_n:
          s.here = {n, true, {}};
          s.out = {{{OpTag::dminus, n}}, 1.0};
          s.prev = {n, true, {}};
          s.in = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
          return s;
      }
      break;
    case CohomVariant::dual:
      switch (level) {
        case CohomLevel::dplus_k:
          need(k >= 0 && k < n, "dual dplus_k needs 0 <= k < n");
          s.here = {k, true, {}};
          s.has_out = k >= 1;
          if (s.has_out) s.out = {{{OpTag::dplusstar, k}}, 1.0};
          s.prev = {k + 1, true, {}};
          s.in = {{{OpTag::dplusstar, k + 1}}, 1.0};
          return s;
        case CohomLevel::dplus_n:
          s.here = {n, true, {}};
          s.out = {{{OpTag::dplusstar, n}}, 1.0};
          s.prev = {n, true, {}};
          s.in = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
          return s;
        case CohomLevel::dminus_k:
          need(k >= 0 && k < n, "dual dminus_k needs 0 <= k < n");
          s.here = {k, true, {}};
          s.out = {{{OpTag::dminusstar, k}}, 1.0};
          s.has_in = k >= 1;
          if (s.has_in) {
            s.prev = {k - 1, true, {}};
            s.in = {{{OpTag::dminusstar, k - 1}}, 1.0};
          }
          return s;
        case CohomLevel::dminus_n:
          s.here = {n, true, {}};
          s.out = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
          s.prev = {n - 1, true, {}};
          s.in = {{{OpTag::dminusstar, n - 1}}, 1.0};
          return s;
      }
      break;
    case CohomVariant::relative_D:
      switch (level) {
        case CohomLevel::dplus_k:
          need(k >= 0 && k < n, "relative dplus_k needs 0 <= k < n");
          s.here = {k, true, {BcTag::Dplus}};
          s.out = {{{OpTag::dplus, k}}, 1.0};
          s.has_in = k >= 1;
          if (s.has_in) {
            s.prev = {k - 1, true, {BcTag::Dplus}};
            s.in = {{{OpTag::dplus, k - 1}}, 1.0};
          }
          return s;
        case CohomLevel::dplus_n:
          s.here = {n, true, {BcTag::Bn}};
          s.out = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
          s.prev = {n - 1, true, {BcTag::Dplus}};
          s.in = {{{OpTag::dplus, n - 1}}, 1.0};
          return s;
        case CohomLevel::dminus_k:
          need(k >= 0 && k < n, "relative dminus_k needs 0 <= k < n");
          s.here = {k, true, tags(k >= 1 ? std::optional<BcTag>(BcTag::Dminus) : std::nullopt)};
          s.has_out = k >= 1;
          if (s.has_out) s.out = {{{OpTag::dminus, k}}, 1.0};
          s.prev = {k + 1, true, {BcTag::Dminus}};
          s.in = {{{OpTag::dminus, k + 1}}, 1.0};
          return s;
        case CohomLevel::dminus_n:
          s.here = {n, true, {BcTag::Dminus}};
          s.out = {{{OpTag::dminus, n}}, 1.0};
          s.prev = {n, true, {BcTag::Bn}};
          s.in = {{{OpTag::dminus, n}, {OpTag::dplus, n - 1}}, 1.0};
          return s;
      }
      break;
    case CohomVariant::relative_N:
      switch (level) {
        case CohomLevel::dplus_k:
          need(k >= 0 && k < n, "relative_N dplus_k needs 0 <= k < n");
          s.here = {k, true, tags(k >= 1 ? std::optional<BcTag>(BcTag::Nplus) : std::nullopt)};
          s.has_out = k >= 1;
          if (s.has_out) s.out = {{{OpTag::dplusstar, k}}, 1.0};
          s.prev = {k + 1, true, {BcTag::Nplus}};
          s.in = {{{OpTag::dplusstar, k + 1}}, 1.0};
          return s;
        case CohomLevel::dplus_n:
          s.here = {n, true, {BcTag::Nplus}};
          s.out = {{{OpTag::dplusstar, n}}, 1.0};
          s.prev = {n, true, {BcTag::Cn}};
          s.in = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
          return s;
        case CohomLevel::dminus_k: {
          // the N- condition is applied at every degree of the lower dual
          // complex; unlike N+ on functions it is not vacuous at k = 0,
          // and the isomorphism to the harmonic spaces requires it there
          need(k >= 0 && k < n, "relative_N dminus_k needs 0 <= k < n");
          s.here = {k, true, {BcTag::Nminus}};
          s.out = {{{OpTag::dminusstar, k}}, 1.0};
          s.has_in = k >= 1;
          if (s.has_in) {
            s.prev = {k - 1, true, {BcTag::Nminus}};
            s.in = {{{OpTag::dminusstar, k - 1}}, 1.0};
          }
          return s;
        }
        case CohomLevel::dminus_n:
          s.here = {n, true, {BcTag::Cn}};
          s.out = {{{OpTag::dplusstar, n}, {OpTag::dminusstar, n - 1}}, 1.0};
          s.prev = {n - 1, true, {BcTag::Nminus}};
          s.in = {{{OpTag::dminusstar, n - 1}}, 1.0};
          return s;
      }
      break;
  }
  throw std::invalid_argument("cohomology_dim: unsupported combination");
}

// orthonormalize columns, keeping those with singular value above the
// absolute threshold (the inputs here are distances in [0, 1])
CMat orthonormal_range_abs(const CMat& A, double abs_thresh) {
  if (A.cols() == 0 || A.rows() == 0) return CMat::Zero(A.rows(), 0);
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > abs_thresh) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace

CohomResult cohomology_dim(HodgeEngine& engine, CohomLevel level, CohomVariant variant, int k) {
  // The collocated complex carries spurious classes: the square bounded-axis
  // derivative has a one-dimensional range defect, so ker/im exceeds the
  // continuum quotient by classes whose representatives are rough at the
  // grid scale (their minimal-gradient representative has |grad r|/|r| of
  // order 1/h, while true classes keep O(1) representatives).  The quotient
  // is therefore counted per class through its smoothest representative;
  // the plain ker/im count is kept as a diagnostic.
  Spot s = make_spot(*engine.model(), level, variant, k);
  auto& modal = engine.modal();
  const double cutoff = engine.cutoff();
  const int n1 = modal.n1();
  const int fd = engine.model()->fiber_dim(s.here.degree);
  Eigen::VectorXd wsq = modal.mass_diag(fd).array().sqrt();

  CohomResult res;

  // pass 1: global singular-value scales of the out and in maps
  struct ModeWork {
    CMat ZE;                    // constrained space (M-orthonormal columns)
    CMat Aout;                  // weighted out map on ZE
    CMat Bin;                   // weighted image columns (in map applied to prev space)
    Eigen::JacobiSVD<CMat> out_svd;
  };
  std::vector<ModeWork> work(modal.num_modes());
  double smax_out = 0.0, smax_in = 0.0;
  for (int m = 0; m < modal.num_modes(); ++m) {
    ModeContext ctx(modal, m);
    auto& wk = work[m];
    wk.ZE = ctx.space_basis(s.here);
    if (wk.ZE.cols() == 0) continue;
    if (s.has_out) {
      CMat A = ctx.chain(s.out);
      Eigen::VectorXd wa = modal.mass_diag(static_cast<int>(A.rows() / n1)).array().sqrt();
      wk.Aout = wa.asDiagonal() * (A * wk.ZE);
      wk.out_svd = Eigen::JacobiSVD<CMat>(wk.Aout, Eigen::ComputeFullV);
      if (wk.out_svd.singularValues().size())
        smax_out = std::max(smax_out, wk.out_svd.singularValues()[0]);
    }
    if (s.has_in) {
      ModeContext pctx(modal, m);
      CMat ZEp = pctx.space_basis(s.prev);
      if (ZEp.cols() > 0) {
        CMat B = pctx.chain(s.in) * ZEp;
        // compress onto the constrained subspace so the incoming map lands
        // inside C_k; discrete preservation of the boundary rows only holds
        // to truncation order, and the compressed map is the complex map
        CMat ZEw = wsq.asDiagonal() * wk.ZE;
        wk.Bin = ZEw * (ZEw.adjoint() * (wsq.asDiagonal() * B));
        Eigen::JacobiSVD<CMat> svd(wk.Bin);
        if (svd.singularValues().size()) smax_in = std::max(smax_in, svd.singularValues()[0]);
      }
    }
  }

  // pass 2: per mode, kernel of the out map, image basis, quotient classes,
  // and the smoothness spectrum of their minimal-gradient representatives
  res.diag_out.largest = smax_out;
  res.diag_in.largest = smax_in;
  double below_out = 0.0, above_out = std::numeric_limits<double>::infinity();
  int naive_ker = 0, naive_im = 0;
  std::vector<double> smoothness;

  for (int m = 0; m < modal.num_modes(); ++m) {
    auto& wk = work[m];
    if (wk.ZE.cols() == 0) continue;
    // kernel basis (in full per-mode coordinates, M-orthonormal)
    CMat K;
    if (s.has_out && wk.Aout.rows() > 0) {
      const auto& sv = wk.out_svd.singularValues();
      double thresh = cutoff * std::max(smax_out, 1e-300);
      int rank = 0;
      for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > thresh) {
          ++rank;
          above_out = std::min(above_out, sv[i]);
        } else {
          below_out = std::max(below_out, sv[i]);
        }
      }
      K = wk.ZE * wk.out_svd.matrixV().rightCols(wk.ZE.cols() - rank);
    } else {
      K = wk.ZE;
    }
    naive_ker += static_cast<int>(K.cols());
    if (K.cols() == 0) continue;

    // image basis in the weighted metric
    CMat Bw = CMat::Zero(wsq.size(), 0);
    if (s.has_in && wk.Bin.cols() > 0) {
      // image basis with the global singular-value policy
      Eigen::JacobiSVD<CMat> svd(wk.Bin, Eigen::ComputeThinU);
      int rank = 0;
      double thresh = cutoff * std::max(smax_in, 1e-300);
      for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > thresh) ++rank;
      Bw = svd.matrixU().leftCols(rank);
      naive_im += rank;
    }

    // quotient directions: kernel directions away from the image
    CMat Kw = wsq.asDiagonal() * K;  // M-orthonormal -> euclidean-orthonormal
    CMat R = Kw;
    if (Bw.cols() > 0) R = Kw - Bw * (Bw.adjoint() * Kw);
    CMat Q = orthonormal_range_abs(R, 0.5);  // classes at distance >= ~0.5 from im
    if (Q.cols() == 0) continue;

    // smoothness of the canonical (minimal-norm, image-orthogonal) class
    // representatives.  A true class keeps an O(1)-smooth canonical
    // representative; the bounded-axis range-defect classes are carried by
    // the grid sawtooth with |grad q| / |q| near the Nyquist scale 2/h.
    ModeContext ctx(modal, m);
    auto grad_apply = [&](const CMat& X) {
      // X in weighted coordinates -> stacked componentwise gradient rows
      CMat fields = wsq.cwiseInverse().asDiagonal() * X;
      std::vector<CMat> rows;
      const Eigen::MatrixXd& D1 = modal.bounded_derivative();
      CMat D = CMat::Zero(n1 * fd, n1 * fd);
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n1; ++j)
          if (D1(i, j) != 0.0)
            D.block(i * fd, j * fd, fd, fd) =
                D1(i, j) * Eigen::MatrixXd::Identity(fd, fd).cast<std::complex<double>>();
      rows.push_back(wsq.asDiagonal() * (D * fields));
      auto t = modal.mode_tuple(m);
      for (int a = 1; a < 2 * engine.model()->n(); ++a) {
        std::complex<double> sym = modal.axis_symbol(a, t[a - 1]);
        rows.push_back(wsq.asDiagonal() * (sym * fields));
      }
      CMat out(static_cast<long>(rows.size()) * n1 * fd, X.cols());
      long off = 0;
      for (auto& r : rows) {
        out.middleRows(off, r.rows()) = r;
        off += r.rows();
      }
      return out;
    };
    CMat GQ = grad_apply(Q);
    CMat H = GQ.adjoint() * GQ;
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      smoothness.push_back(std::sqrt(std::max(es.eigenvalues()[i], 0.0)));
  }

  res.diag_out.largest_below = below_out;
  res.diag_out.smallest_above = std::isfinite(above_out) ? above_out : 0.0;
  res.diag_out.ratio = (below_out > 0.0 && std::isfinite(above_out)) ? above_out / below_out
                                                                     : std::numeric_limits<double>::infinity();
  res.diag_out.ambiguous = res.diag_out.ratio < 10.0;
  res.naive_dimension = naive_ker - naive_im;

  // canonical representatives rougher than the fixed scale 6 are the
  // range-defect classes (their roughness grows like 1/h; true classes
  // stay O(1), bounded by the low mode content of the flat cylinder)
  std::sort(smoothness.begin(), smoothness.end());
  double tau = 6.0;
  res.dimension = 0;
  double below = 0.0, above = std::numeric_limits<double>::infinity();
  for (double sv : smoothness) {
    if (sv <= tau) {
      ++res.dimension;
      below = std::max(below, sv);
    } else {
      above = std::min(above, sv);
    }
  }
  res.smoothness_values = smoothness;
  res.diag_in.largest = tau;
  res.diag_in.largest_below = below;
  res.diag_in.smallest_above = std::isfinite(above) ? above : 0.0;
  res.diag_in.ratio =
      (below > 0.0 && std::isfinite(above)) ? above / below : std::numeric_limits<double>::infinity();
  res.diag_in.ambiguous = smoothness.size() > 0 && res.diag_in.ratio < 3.0 && std::isfinite(above);
  res.ambiguous = res.diag_out.ambiguous || res.diag_in.ambiguous;
  return res;
}

std::vector<IsoPair> isomorphism_battery(int n) {
  std::vector<IsoPair> out;
  using CL = CohomLevel;
  using CV = CohomVariant;
  using HK = HarmonicKind;
  for (int k = 0; k < n; ++k) {
    out.push_back({CL::dplus_k, CV::absolute, k, HK::plus, BcTag::Nplus, k});
    out.push_back({CL::dminus_k, CV::absolute, k, HK::minus, BcTag::Nminus, k});
    out.push_back({CL::dplus_k, CV::dual, k, HK::plus, BcTag::Dplus, k});
    out.push_back({CL::dminus_k, CV::dual, k, HK::minus, BcTag::Dminus, k});
    out.push_back({CL::dplus_k, CV::relative_D, k, HK::plus, BcTag::Dplus, k});
    out.push_back({CL::dminus_k, CV::relative_D, k, HK::minus, BcTag::Dminus, k});
    out.push_back({CL::dplus_k, CV::relative_N, k, HK::plus, BcTag::Nplus, k});
    out.push_back({CL::dminus_k, CV::relative_N, k, HK::minus, BcTag::Nminus, k});
  }
  out.push_back({CL::dplus_n, CV::absolute, n, HK::plusplus, BcTag::Nplus, n});
  out.push_back({CL::dminus_n, CV::absolute, n, HK::minusminus, BcTag::NplusMinus, n});
  out.push_back({CL::dplus_n, CV::dual, n, HK::plusplus, BcTag::DplusMinus, n});
  out.push_back({CL::dminus_n, CV::dual, n, HK::minusminus, BcTag::Dminus, n});
  return out;
}

LefschetzCheck lefschetz_relative_check(HodgeEngine& engine, int k) {
  const int n = engine.model()->n();
  LefschetzCheck res;
  auto c = cohomology_dim(engine, CohomLevel::dplus_k, CohomVariant::relative_D, k);
  res.lhs = c.dimension;
  res.ambiguous = c.ambiguous;

  for (int j = 0; j <= 2 * n; ++j)
    res.deRham_dims.push_back(engine.harmonic_dim(HarmonicKind::deRham, BcTag::D, j));

  auto& factory = engine.factory();
  auto rank_of_L_on_cohomology = [&](int from) -> int {
    // rank of the Lefschetz map H^from(d,D) -> H^{from+2}(d,D) via harmonic
    // representatives and harmonic projection of L h
    if (from < 0) return 0;
    const auto& hlow = engine.harmonic(HarmonicKind::deRham, BcTag::D, from);
    const auto& hhigh = engine.harmonic(HarmonicKind::deRham, BcTag::D, from + 2);
    if (hlow.dimension == 0 || hhigh.dimension == 0) return 0;
    SpMat L = factory.lift_fiber(engine.model()->L(from));
    Eigen::MatrixXd G(hhigh.dimension, hlow.dimension);
    for (int j = 0; j < hlow.dimension; ++j) {
      FormField Lh(engine.grid(), engine.model(), from + 2);
      Lh.values = L * hlow.basis[j].values;
      for (int i = 0; i < hhigh.dimension; ++i) G(i, j) = inner_product(hhigh.basis[i], Lh);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
    double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-6 * std::max(smax, 1.0)) ++r;
    return r;
  };

  int rank1 = rank_of_L_on_cohomology(k - 1);  // L: H^{k-1} -> H^{k+1}
  res.ker_dim = (k - 1 >= 0 ? res.deRham_dims[k - 1] : 0) - rank1;
  int rank2 = rank_of_L_on_cohomology(k - 2);  // L: H^{k-2} -> H^k
  res.coker_dim = res.deRham_dims[k] - rank2;
  res.rhs = res.ker_dim + res.coker_dim;
  return res;
}

}  // namespace symphodge
