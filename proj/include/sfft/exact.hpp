#pragma once

// Fourier-backed ZeroTest/Estimate and the exact k-sparse FFT entry point.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "sfft/explore.hpp"
#include "sfft/filter.hpp"
#include "sfft/signal.hpp"
#include "sfft/tree.hpp"

namespace sfft {

// Path from the root to v plus, for every Excluded node not comparable with
// v, the off-path child where its path leaves v's. Nodes comparable with v
// carry no isolation information and are skipped.
inline std::pair<SubTree, SparseSpectrum> translate(const Found& found, const Excluded& excluded, NodeId v,
                                                    const Dims& dims) {
  SubTree T(dims);
  T.add_path(v);
  excluded.for_each([&](NodeId e) {
    if (e.comparable(v)) return;
    const std::uint64_t diff = e.prefix() ^ v.prefix();
    const std::uint32_t dv = static_cast<std::uint32_t>(std::countr_zero(diff));
    T.add_path(e.ancestor_at(dv + 1));
  });
  SparseSpectrum chi(dims);
  for (auto& [leaf, val] : found) chi.set(label_index(leaf, dims), val);
  return {std::move(T), std::move(chi)};
}

struct ExactConfig {
  RipConfig rip;
  double c_tol = 1e-7;
  std::uint64_t seed = 0;
  bool fixed_rip = false;  // one sample set per budget s instead of one per call
};

namespace detail {

// c_xi = chi(xi) * G^(xi) over entries with G^(xi) != 0
inline std::vector<std::pair<std::uint64_t, cplx>> filtered_chi(const IsolatingFilter& F,
                                                                const SparseSpectrum& chi) {
  std::vector<std::pair<std::uint64_t, cplx>> out;
  for (auto& [f, v] : chi.entries()) {
    cplx g = F.freq(f);
    if (g != cplx(0, 0)) out.emplace_back(f, v * g);
  }
  return out;
}

inline cplx chi_at(const std::vector<std::pair<std::uint64_t, cplx>>& c, const Dims& dims, const Twiddles& tw,
                   std::uint64_t t) {
  cplx acc(0, 0);
  for (auto& [f, v] : c) acc += v * tw[dims.dot_mod(f, t)];
  return acc;
}

}  // namespace detail

// True iff the filtered residual vanishes on the RIP_s points (to c_tol).
inline bool zero_test_fourier(const SignalOracle& x, const SparseSpectrum& chi, const SubTree& T, NodeId v,
                              std::uint64_t s, const ExactConfig& cfg, std::uint64_t call_index,
                              const Twiddles& tw) {
  const Dims& dims = x.dims();
  const IsolatingFilter F = build_filter_multidim(T, v);
  const auto c = detail::filtered_chi(F, chi);
  RipConfig rc = cfg.rip;
  rc.seed = cfg.fixed_rip ? mix_seed(cfg.seed, s) : mix_seed(cfg.seed, call_index);
  const auto pts = rip_samples(s, dims, rc);
  const double Nd = static_cast<double>(dims.N);
  double energy = 0, scale = 1;
  for (std::uint64_t t : pts) {
    const cplx meas = Nd * conv_at(F, x, t);
    scale = std::max(scale, std::abs(meas));
    energy += std::norm(meas - detail::chi_at(c, dims, tw, t));
  }
  const double tau = cfg.c_tol * scale;
  return energy <= tau * tau;
}

// (x^ - chi)(f_leaf), with values below c_tol of the measurement scale snapped to 0
inline cplx estimate_freq_fourier(const SignalOracle& x, const SparseSpectrum& chi, const SubTree& T, NodeId leaf,
                                  const ExactConfig& cfg) {
  const Dims& dims = x.dims();
  if (!is_full_leaf(leaf, dims)) throw std::domain_error("estimate needs a full-depth leaf");
  const IsolatingFilter F = build_filter_multidim(T, leaf);
  const cplx meas = static_cast<double>(dims.N) * conv_at(F, x, 0);
  cplx h(0, 0);
  for (auto& [f, v] : detail::filtered_chi(F, chi)) h += v;
  const cplx val = meas - h;
  if (std::abs(val) <= cfg.c_tol * std::max(1.0, std::abs(meas))) return {0, 0};
  return val;
}

class FourierOracle {
 public:
  FourierOracle(const SignalOracle& x, ExactConfig cfg) : x_(x), cfg_(cfg), tw_(x.dims().n) {}

  const Dims& dims() const { return x_.dims(); }
  const SignalOracle& signal() const { return x_; }
  std::uint64_t samples() const { return x_.sample_count(); }
  std::uint64_t zero_tests() const { return zero_tests_; }
  std::uint64_t estimates() const { return estimates_; }

  bool zero_test(const Found& found, const Excluded& excluded, NodeId v, std::uint64_t b) {
    auto [T, chi] = translate(found, excluded, v, dims());
    return zero_test_fourier(x_, chi, T, v, b, cfg_, zero_tests_++, tw_);
  }

  cplx estimate(const Found& found, const Excluded& excluded, NodeId leaf) {
    ++estimates_;
    auto [T, chi] = translate(found, excluded, leaf, dims());
    return estimate_freq_fourier(x_, chi, T, leaf, cfg_);
  }

 private:
  const SignalOracle& x_;
  ExactConfig cfg_;
  Twiddles tw_;
  std::uint64_t zero_tests_ = 0;
  std::uint64_t estimates_ = 0;
};

static_assert(ExplorationOracle<FourierOracle>);
static_assert(ExplorationOracle<SyntheticOracle>);

inline SparseSpectrum found_to_spectrum(const Found& found, const Dims& dims, double rel_prune = 1e-9) {
  SparseSpectrum out(dims);
  double scale = 0;
  for (auto& [leaf, v] : found) scale = std::max(scale, std::abs(v));
  for (auto& [leaf, v] : found)
    if (std::abs(v) > rel_prune * scale) out.set(label_index(leaf, dims), v);
  return out;
}

enum class ExactAlgo { Backtracking, Slow };

struct ExactResult {
  SparseSpectrum spectrum;
  double alpha = 0;
  std::uint64_t zero_tests = 0;
  std::uint64_t estimates = 0;
  ExploreStats stats;
};

// alpha <= 0 selects default_alpha(k, N)
inline ExactResult exact_sparse_fft(const SignalOracle& x, std::uint64_t k, const ExactConfig& cfg = {},
                                    double alpha = 0, ExactAlgo algo = ExactAlgo::Backtracking) {
  const Dims& dims = x.dims();
  ExactResult r;
  r.spectrum = SparseSpectrum(dims);
  if (k == 0) return r;
  r.alpha = alpha > 0 ? alpha : default_alpha(k, dims.N);
  FourierOracle oracle(x, cfg);
  Found found = algo == ExactAlgo::Slow
                    ? slow_exact_recovery(oracle, {}, {}, NodeId::root(), k)
                    : exact_recovery(oracle, {}, {}, NodeId::root(), k, k, r.alpha, &r.stats);
  r.spectrum = found_to_spectrum(found, dims);
  r.zero_tests = oracle.zero_tests();
  r.estimates = oracle.estimates();
  return r;
}

}  // namespace sfft
