#pragma once

// Robust pipeline for k-high-SNR signals: HeavyTest, batched Estimate, the
// inner loop RobustPromiseSFT and the outer loop RobustSparseFT.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "sfft/exact.hpp"
#include "sfft/filter.hpp"
#include "sfft/signal.hpp"
#include "sfft/tree.hpp"

namespace sfft {

struct RobustParams {
  double mu = 0;
  double eps = 0.1;
  double c_heavy = 8;
  bool theory = false;           // HeavyTest m uses log^3 N instead of c_heavy * log N
  std::uint64_t heavy_reps = 0;  // 0: ceil(32 log2 N)
  std::uint64_t est_reps = 0;    // 0: ceil(16 log2 N)
  bool early_stop = true;        // stop HeavyTest once the median is decided
  std::uint64_t seed = 0;
};

struct RobustStats {
  std::uint64_t heavy_tests = 0;
  std::uint64_t heavy_true = 0;
  std::uint64_t estimate_calls = 0;
  std::uint64_t promise_calls = 0;
  std::uint64_t recursive_calls = 0;
  std::uint64_t fallbacks = 0;  // all leaves marked with the lazy trigger off
  std::uint64_t caps_hit = 0;
};

// Shared state of one robust run: the signal, parameters and RNG stream.
class RobustCtx {
 public:
  RobustCtx(const SignalOracle& x, RobustParams p) : x_(x), p_(p), tw_(x.dims().n) {
    const std::uint64_t D = x.dims().depth;
    if (p_.heavy_reps == 0) p_.heavy_reps = 32 * D;
    if (p_.est_reps == 0) p_.est_reps = 16 * D;
    if (p_.mu < 0) throw std::domain_error("mu must be non-negative");
  }

  const SignalOracle& x() const { return x_; }
  const Dims& dims() const { return x_.dims(); }
  const RobustParams& params() const { return p_; }
  const Twiddles& tw() const { return tw_; }
  RobustStats& stats() { return stats_; }
  const RobustStats& stats() const { return stats_; }
  double theta() const { return 6.0 * p_.mu * p_.mu; }

  // HeavyTest sample parameter for budget b
  std::uint64_t heavy_m(std::uint64_t b) const {
    const double D = dims().depth;
    const double lf = p_.theory ? D * D * D : p_.c_heavy * D;
    return std::max<std::uint64_t>(1, ceil_u(static_cast<double>(b) * lf));
  }

  std::mt19937_64 next_rng() { return std::mt19937_64(mix_seed(p_.seed, calls_++)); }

 private:
  const SignalOracle& x_;
  RobustParams p_;
  Twiddles tw_;
  RobustStats stats_;
  std::uint64_t calls_ = 0;
};

namespace detail {

// N * conv(G, x, t) - sum_xi e^{2 pi i xi.t/n} chi(xi) G^(xi)
// The chi term is tabulated by one dense inverse FFT when that is cheaper
// than `evals` pointwise sums; samples of x are unaffected.
class FilteredResidual {
 public:
  FilteredResidual(const RobustCtx& ctx, const SparseSpectrum& chi, const SubTree& T, NodeId v, double evals)
      : ctx_(ctx), F_(build_filter_multidim(T, v)), c_(filtered_chi(F_, chi)) {
    const Dims& dims = ctx.dims();
    const double dense_cost = 4.0 * static_cast<double>(dims.N) * (dims.depth + 1);
    if (!c_.empty() && dims.N <= (std::uint64_t{1} << 22) && dense_cost < evals * static_cast<double>(c_.size())) {
      std::vector<cplx> a(dims.N);
      for (auto& [f, val] : c_) a[f] = val;
      fft_nd(a, dims, +1);
      table_ = std::move(a);
    }
  }
  cplx operator()(std::uint64_t t) const {
    const Dims& dims = ctx_.dims();
    const cplx h = table_.empty() ? chi_at(c_, dims, ctx_.tw(), t) : table_[t];
    return static_cast<double>(dims.N) * conv_at(F_, ctx_.x(), t) - h;
  }

 private:
  const RobustCtx& ctx_;
  IsolatingFilter F_;
  std::vector<std::pair<std::uint64_t, cplx>> c_;
  std::vector<cplx> table_;
};

inline double median_of(std::vector<double> v) {
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  if (v.size() % 2) return v[h];
  const double hi = v[h];
  return (hi + *std::max_element(v.begin(), v.begin() + h)) / 2;
}

}  // namespace detail

// False iff the upper median of the per-round filtered energies is <= theta.
inline bool heavy_test(RobustCtx& ctx, const SparseSpectrum& chi, const SubTree& T, NodeId v, std::uint64_t m,
                       double theta) {
  if (m < 1) throw std::domain_error("heavy_test needs m >= 1");
  ++ctx.stats().heavy_tests;
  const std::uint64_t R = ctx.params().heavy_reps;
  const detail::FilteredResidual r(ctx, chi, T, v, static_cast<double>(R / 2 + 1) * static_cast<double>(m));
  const std::uint64_t need_low = R / 2 + 1, need_high = R - R / 2;
  auto rng = ctx.next_rng();
  const std::uint64_t mask = ctx.dims().N - 1;
  std::uint64_t low = 0, high = 0;
  for (std::uint64_t z = 0; z < R; ++z) {
    double e = 0;
    for (std::uint64_t i = 0; i < m; ++i) e += std::norm(r(rng() & mask));
    (e / static_cast<double>(m) <= theta ? low : high) += 1;
    if (ctx.params().early_stop && (low >= need_low || high >= need_high)) break;
  }
  const bool heavy = low < need_low;
  ctx.stats().heavy_true += heavy;
  return heavy;
}

// Per-leaf median-of-means estimates of (x^ - chi)(f_v), v in S.
template <class Range>
std::map<NodeId, cplx> estimate_set(RobustCtx& ctx, const SparseSpectrum& chi, const SubTree& T, const Range& S,
                                    std::uint64_t m) {
  if (m < 1) throw std::domain_error("estimate_set needs m >= 1");
  const Dims& dims = ctx.dims();
  std::map<NodeId, cplx> out;
  const std::uint64_t R = ctx.params().est_reps;
  const std::uint64_t mask = dims.N - 1;
  for (NodeId v : S) {
    if (!is_full_leaf(v, dims)) throw std::domain_error("estimate_set needs full-depth leaves");
    ++ctx.stats().estimate_calls;
    const detail::FilteredResidual r(ctx, chi, T, v, static_cast<double>(R) * static_cast<double>(m));
    const std::uint64_t f = label_index(v, dims);
    auto rng = ctx.next_rng();
    std::vector<double> re(R), im(R);
    for (std::uint64_t z = 0; z < R; ++z) {
      cplx acc(0, 0);
      for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t t = rng() & mask;
        acc += std::conj(ctx.tw()[dims.dot_mod(f, t)]) * r(t);
      }
      acc /= static_cast<double>(m);
      re[z] = acc.real();
      im[z] = acc.imag();
    }
    out[v] = cplx(detail::median_of(std::move(re)), detail::median_of(std::move(im)));
  }
  return out;
}

struct PromiseResult {
  bool ok = false;
  SparseSpectrum chi;
};

// Inner loop: recover the heads of cone(v) assuming at most b of them.
inline PromiseResult robust_promise_sft(RobustCtx& ctx, const SparseSpectrum& chi_in, const SubTree& side, NodeId v,
                                        std::uint64_t b, std::uint64_t k) {
  const Dims& dims = ctx.dims();
  if (!side.is_leaf(v)) throw std::domain_error("v must be a leaf of SideTree");
  if (b < 1) throw std::domain_error("budget must be >= 1");
  ++ctx.stats().promise_calls;
  const double theta = ctx.theta();
  const PromiseResult fail{false, SparseSpectrum(dims)};
  SparseSpectrum chi_out(dims);
  SubTree T(dims);
  T.add_path(v);
  std::set<NodeId> marked;
  const double lazy_ratio = 1.0 / (4.0 + 2.0 * std::log2(static_cast<double>(b)));
  const std::uint64_t cap = 64 * (b + 1) * (dims.depth + 1);

  auto lazy = [&] {
    SubTree H = side;
    H.merge(T);
    const std::uint64_t m = ceil_div(368 * b, marked.size());
    for (auto& [u, val] : estimate_set(ctx, chi_in + chi_out, H, marked, m)) {
      chi_out.set(label_index(u, dims), val);
      if (u != v) T.remove_leaf(u, v);
    }
    marked.clear();
  };

  std::uint64_t iter = 0;
  do {
    if (++iter > cap) {
      ++ctx.stats().caps_hit;
      return fail;
    }
    if (T.leaves().size() + chi_out.size() > b) return fail;
    if (!marked.empty()) {
      int wmax = 0;
      for (NodeId u : marked) wmax = std::max(wmax, T.weight(u));
      if (static_cast<double>(marked.size()) / std::ldexp(1.0, wmax) >= lazy_ratio) {
        lazy();
        continue;
      }
    }
    if (marked.size() == T.leaves().size()) {
      ++ctx.stats().fallbacks;
      lazy();
      continue;
    }
    const NodeId z = min_weight_leaf(T, marked);
    if (is_full_leaf(z, dims)) {
      marked.insert(z);
      continue;
    }
    const NodeId zl = z.left(), zr = z.right();
    SubTree H = side;
    H.merge(T);
    H.add_path(zl);
    H.add_path(zr);
    const SparseSpectrum chi = chi_in + chi_out;
    const std::uint64_t m = ctx.heavy_m(b);
    const bool hl = heavy_test(ctx, chi, H, zl, m, theta);
    const bool hr = heavy_test(ctx, chi, H, zr, m, theta);
    if (hl) T.add_path(zl);
    if (hr) T.add_path(zr);
    if (z != v && !hl && !hr) return fail;
  } while (!(T.leaves().size() == 1 && T.is_leaf(v)));

  if (heavy_test(ctx, chi_in + chi_out, side, v, ctx.heavy_m(k), theta)) return fail;
  return {true, std::move(chi_out)};
}

struct RobustResult {
  SparseSpectrum spectrum;
  bool ok = true;
  RobustStats stats;
};

// Outer loop with budget ceil(k^{1/3}) per inner call.
inline RobustResult robust_sparse_ft(const SignalOracle& x, std::uint64_t k, const RobustParams& params) {
  const Dims& dims = x.dims();
  RobustResult res;
  res.spectrum = SparseSpectrum(dims);
  if (k == 0) return res;
  if (!(params.eps > 0)) throw std::domain_error("eps must be positive");
  RobustCtx ctx(x, params);
  const std::uint64_t b = static_cast<std::uint64_t>(std::ceil(std::cbrt(static_cast<double>(k)) - 1e-9));
  SubTree frontier(dims);
  std::set<NodeId> marked;
  SparseSpectrum& chi = res.spectrum;
  const std::uint64_t cap = 64 * (k + 1) * (dims.depth + 1);
  std::uint64_t iter = 0;
  do {
    if (++iter > cap) {
      ++ctx.stats().caps_hit;
      res.ok = false;
      break;
    }
    if (!marked.empty() && kraft_mass(frontier, marked) >= Dyadic::half()) {
      const auto cheap = extract_cheap_subset(frontier, marked);
      const std::uint64_t m = ceil_u(32.0 * static_cast<double>(k) / (params.eps * static_cast<double>(cheap.size())));
      for (auto& [u, val] : estimate_set(ctx, chi, frontier, cheap, m)) {
        chi.set(label_index(u, dims), val);
        frontier.remove_leaf(u);
        marked.erase(u);
      }
      continue;
    }
    const NodeId v = min_weight_leaf(frontier, marked);
    if (is_full_leaf(v, dims)) {
      marked.insert(v);
      continue;
    }
    const NodeId vl = v.left(), vr = v.right();
    SubTree T = frontier;
    T.add_path(vl);
    T.add_path(vr);
    PromiseResult rl = robust_promise_sft(ctx, chi, T, vl, b, k);
    PromiseResult rr = robust_promise_sft(ctx, chi, T, vr, b, k);
    for (auto* r : {&rl, &rr}) {
      const NodeId child = r == &rl ? vl : vr;
      if (r->ok) {
        for (auto f : r->chi.support()) {
          NodeId leaf = leaf_of(f, dims);
          frontier.add_path(leaf);
          marked.insert(leaf);
        }
      } else {
        frontier.add_path(child);
      }
    }
    if (rl.ok && rr.ok && frontier.is_leaf(v) && !v.is_root()) frontier.remove_leaf(v);
  } while (frontier.size() > 1);
  res.stats = ctx.stats();
  return res;
}

}  // namespace sfft
