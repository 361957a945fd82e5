#pragma once

// Recursive robust sparse FFT with backtracking, lazy and multi-scale
// estimation, and the RobustSFT wrapper that re-estimates to precision eps.

#include <algorithm>
#include <cmath>
#include <set>

#include "sfft/robust.hpp"

namespace sfft {

// 2^{-ceil(sqrt(log2 k * log2(2 log2 N)))}, at most 1/2
inline double recursive_default_alpha(std::uint64_t k, std::uint64_t N) {
  if (k < 1 || N < 2) throw std::domain_error("recursive_default_alpha needs k >= 1 and N >= 2");
  const double e = std::sqrt(std::log2(static_cast<double>(k)) * std::log2(2.0 * std::log2(static_cast<double>(N))));
  const auto ex = std::max<std::uint64_t>(1, ceil_u(e));
  return std::ldexp(1.0, -static_cast<int>(ex));
}

namespace detail {

inline std::uint32_t recursion_cap(std::uint64_t k, double alpha) {
  const double lk = std::log2(static_cast<double>(std::max<std::uint64_t>(k, 2)));
  return static_cast<std::uint32_t>(ceil_u(lk / std::log2(1.0 / alpha))) + 2;
}

inline PromiseResult recursive_impl(RobustCtx& ctx, const SparseSpectrum& chi_in, const SubTree& frontier, NodeId v,
                                    std::uint64_t k, double alpha, std::uint32_t depth_left) {
  const Dims& dims = ctx.dims();
  const PromiseResult fail{false, SparseSpectrum(dims)};
  if (static_cast<double>(k) <= 1.0 / alpha)
    return robust_promise_sft(ctx, chi_in, frontier, v, k, ceil_u(static_cast<double>(k) / alpha));
  if (depth_left == 0) {
    ++ctx.stats().caps_hit;
    return fail;
  }
  if (!frontier.is_leaf(v)) throw std::domain_error("v must be a leaf of Frontier");
  ++ctx.stats().recursive_calls;
  const double theta = ctx.theta();
  const double D = dims.depth;
  SubTree T(dims);
  T.add_path(v);
  SparseSpectrum chi_v(dims);
  const std::uint64_t b = ceil_u(alpha * static_cast<double>(k));
  std::set<NodeId> marked;
  const std::uint64_t cap = 64 * (k + 1) * (dims.depth + 1);
  std::uint64_t iter = 0;
  do {
    if (++iter > cap) {
      ++ctx.stats().caps_hit;
      return fail;
    }
    const std::uint64_t unmarked = T.leaves().size() - marked.size();
    if ((b + 1) * unmarked + marked.size() + chi_v.size() > k) return fail;
    if (!marked.empty() && kraft_mass(T, marked) >= Dyadic::half()) {
      const auto cheap = extract_cheap_subset(T, marked);
      SubTree H = frontier;
      H.merge(T);
      const std::uint64_t m = ceil_u(736.0 * static_cast<double>(k) * D * D / static_cast<double>(cheap.size()));
      for (auto& [u, val] : estimate_set(ctx, chi_in + chi_v, H, cheap, m)) {
        chi_v.set(label_index(u, dims), val);
        if (u != v) T.remove_leaf(u, v);
        marked.erase(u);
      }
      continue;
    }
    const NodeId z = min_weight_leaf(T, marked);
    if (is_full_leaf(z, dims)) {
      marked.insert(z);
      continue;
    }
    const NodeId zl = z.left(), zr = z.right();
    SubTree H = frontier;
    H.merge(T);
    H.add_path(zl);
    H.add_path(zr);
    const SparseSpectrum chi = chi_in + chi_v;
    PromiseResult rl = recursive_impl(ctx, chi, H, zl, b, alpha, depth_left - 1);
    PromiseResult rr = recursive_impl(ctx, chi, H, zr, b, alpha, depth_left - 1);
    if (rl.ok && rr.ok && z != v && rl.chi.size() + rr.chi.size() <= b) return fail;
    for (auto* r : {&rl, &rr}) {
      const NodeId child = r == &rl ? zl : zr;
      if (r->ok) {
        for (auto f : r->chi.support()) {
          NodeId leaf = leaf_of(f, dims);
          T.add_path(leaf);
          marked.insert(leaf);
        }
      } else {
        T.add_path(child);
      }
    }
  } while (!(T.leaves().size() == 1 && T.is_leaf(v)));

  const std::uint64_t kfinal = ceil_u(static_cast<double>(k) / alpha);
  if (heavy_test(ctx, chi_in + chi_v, frontier, v, ctx.heavy_m(kfinal), theta)) return fail;
  return {true, std::move(chi_v)};
}

}  // namespace detail

inline PromiseResult recursive_robust_sft(RobustCtx& ctx, const SparseSpectrum& chi_in, const SubTree& frontier,
                                          NodeId v, std::uint64_t k, double alpha) {
  if (!(alpha > 0 && alpha <= 0.5)) throw std::domain_error("alpha must lie in (0, 1/2]");
  if (k < 1) throw std::domain_error("budget must be >= 1");
  return detail::recursive_impl(ctx, chi_in, frontier, v, k, alpha, detail::recursion_cap(k, alpha));
}

struct RobustSftResult {
  SparseSpectrum spectrum;
  SparseSpectrum stage1;
  bool ok = true;
  double alpha = 0;
  RobustStats stats;
};

// Stage 1 locates the heads; stage 2 re-estimates them to precision eps.
// alpha <= 0 selects recursive_default_alpha(k, N).
inline RobustSftResult robust_sft(const SignalOracle& x, std::uint64_t k, const RobustParams& params,
                                  double alpha = 0) {
  const Dims& dims = x.dims();
  RobustSftResult res;
  res.spectrum = res.stage1 = SparseSpectrum(dims);
  if (k == 0) return res;
  if (!(params.eps > 0)) throw std::domain_error("eps must be positive");
  res.alpha = alpha > 0 ? alpha : recursive_default_alpha(k, dims.N);
  RobustCtx ctx(x, params);
  const SubTree root_tree(dims);
  PromiseResult s1 = recursive_robust_sft(ctx, SparseSpectrum(dims), root_tree, NodeId::root(), k, res.alpha);
  res.ok = s1.ok;
  res.stage1 = s1.chi;
  if (s1.ok && !s1.chi.empty()) {
    SubTree T = splitting_tree_idx(s1.chi.support(), dims);
    SparseSpectrum& chi_eps = res.spectrum;
    while (T.size() > 1) {
      const auto cheap = extract_cheap_subset(T, T.leaves());
      const std::uint64_t m = ceil_u(32.0 * static_cast<double>(k) / (params.eps * static_cast<double>(cheap.size())));
      for (auto& [u, val] : estimate_set(ctx, chi_eps, T, cheap, m)) {
        chi_eps.set(label_index(u, dims), val);
        T.remove_leaf(u);
      }
    }
  }
  res.stats = ctx.stats();
  return res;
}

}  // namespace sfft
