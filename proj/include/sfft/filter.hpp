#pragma once

// Adaptive aliasing filters. For a leaf v of T with label f, the filter is
// the tensor product over coordinate blocks of
//   G^_c(xi) = prod_{l in Anc_c} (1 + e^{2 pi i (xi_c - f_c) / 2^{l+1}}) / 2
// where Anc_c are the two-child ancestor depths inside coordinate c's band,
// taken relative to the band start. In time domain each factor is
// (delta_0 + e^{-2 pi i f_c / 2^{l+1}} delta_{-n/2^{l+1} e_c}) / 2.

#include <vector>

#include "sfft/common.hpp"
#include "sfft/signal.hpp"
#include "sfft/tree.hpp"

namespace sfft {

struct FilterBlock {
  std::uint32_t coord = 0;  // 0-based coordinate index
  std::uint32_t f = 0;      // label component of v along coord
  std::vector<std::uint32_t> levels;  // local levels in [0, logn)
};

class IsolatingFilter {
 public:
  IsolatingFilter() = default;

  IsolatingFilter(const Dims& dims, std::uint64_t label, const std::vector<std::uint32_t>& anc)
      : dims_(dims), label_(label) {
    for (std::uint32_t lvl : anc) {
      const std::uint32_t q = lvl / dims.logn;
      const std::uint32_t c = dims.d - 1 - q;
      if (blocks_.empty() || blocks_.back().coord != c)
        blocks_.push_back({c, dims.coord(label, c), {}});
      blocks_.back().levels.push_back(lvl % dims.logn);
    }
    build_support();
  }

  const Dims& dims() const { return dims_; }
  std::uint64_t label() const { return label_; }
  const std::vector<FilterBlock>& blocks() const { return blocks_; }
  std::size_t weight() const {
    std::size_t w = 0;
    for (auto& b : blocks_) w += b.levels.size();
    return w;
  }
  std::size_t support_size() const { return offsets_.size(); }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<cplx>& values() const { return values_; }
  // -offset split into its non-top and top coordinate bits, so that
  // t - offset = ((t & ~H) + low) ^ ((t & H) ^ high)
  const std::vector<std::uint64_t>& neg_offsets_low() const { return nlo_; }
  const std::vector<std::uint64_t>& neg_offsets_high() const { return nhi_; }

  // G^(xi); factors that are exactly 1 or 0 are produced exactly
  cplx freq(std::uint64_t xi) const {
    cplx acc(1, 0);
    for (auto& b : blocks_) {
      const std::uint32_t diff = (dims_.coord(xi, b.coord) - b.f) & (dims_.n - 1);
      for (std::uint32_t r : b.levels) {
        const std::uint32_t mod = 2u << r;
        const std::uint32_t j = diff & (mod - 1);
        if (j == 0) continue;
        if (j == mod / 2) return cplx(0, 0);
        acc *= (cplx(1, 0) + std::polar(1.0, kTwoPi * j / mod)) * 0.5;
      }
    }
    return acc;
  }
  cplx freq(const FreqVec& xi) const { return freq(dims_.index(xi)); }

 private:
  void build_support() {
    offsets_.assign(1, 0);
    values_.assign(1, cplx(1, 0));
    for (auto& b : blocks_) {
      for (std::uint32_t r : b.levels) {
        const std::uint32_t mod = 2u << r;
        const std::uint64_t off = std::uint64_t{(dims_.n - dims_.n / mod) & (dims_.n - 1)}
                                  << dims_.shift(b.coord);
        const cplx ph = std::polar(1.0, -kTwoPi * static_cast<double>(b.f % mod) / mod);
        const std::size_t m = offsets_.size();
        for (std::size_t i = 0; i < m; ++i) {
          offsets_.push_back(dims_.add(offsets_[i], off));
          values_.push_back(values_[i] * ph * 0.5);
          values_[i] *= 0.5;
        }
      }
    }
    const std::uint64_t H = dims_.high_mask();
    nlo_.resize(offsets_.size());
    nhi_.resize(offsets_.size());
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      const std::uint64_t nb = dims_.neg(offsets_[i]);
      nlo_[i] = nb & ~H;
      nhi_[i] = nb & H;
    }
  }

  Dims dims_;
  std::uint64_t label_ = 0;
  std::vector<FilterBlock> blocks_;
  std::vector<std::uint64_t> offsets_;
  std::vector<cplx> values_;
  std::vector<std::uint64_t> nlo_, nhi_;
};

inline IsolatingFilter build_filter_multidim(const SubTree& T, NodeId v) {
  if (!T.is_leaf(v)) throw std::domain_error("filter target must be a leaf of T");
  return IsolatingFilter(T.dims(), label_index(v, T.dims()), T.anc_levels(v));
}

inline IsolatingFilter build_filter_1d(const SubTree& T, NodeId v) {
  if (T.dims().d != 1) throw std::domain_error("build_filter_1d needs d = 1");
  return build_filter_multidim(T, v);
}

inline cplx filter_freq(const IsolatingFilter& F, std::uint64_t xi) { return F.freq(xi); }

// sum_j x(j) G(t - j) over supp(G); charges |supp(G)| samples to x
inline cplx conv_at(const IsolatingFilter& F, const SignalOracle& x, std::uint64_t t) {
  const Dims& dims = F.dims();
  const auto& off = F.offsets();
  const auto& val = F.values();
  const std::size_t m = off.size();
  cplx acc(0, 0);
  if (const cplx* data = x.dense_data()) {
    x.charge(m);
    // plain real arithmetic keeps the loop free of the NaN-recovery path of complex *
    const auto& nlo = F.neg_offsets_low();
    const auto& nhi = F.neg_offsets_high();
    const std::uint64_t H = dims.high_mask();
    const std::uint64_t tl = t & ~H, th = t & H;
    double re = 0, im = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const cplx& a = val[i];
      const cplx& b = data[(tl + nlo[i]) ^ (th ^ nhi[i])];
      re += a.real() * b.real() - a.imag() * b.imag();
      im += a.real() * b.imag() + a.imag() * b.real();
    }
    acc = cplx(re, im);
  } else {
    for (std::size_t i = 0; i < m; ++i) acc += val[i] * x.at(dims.sub(t, off[i]));
  }
  return acc;
}

}  // namespace sfft
