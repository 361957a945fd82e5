#pragma once

// Spectra, sample-counting oracles, dense FFT ground truth, RIP sampling and
// the benchmark signal generators.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "sfft/common.hpp"
#include "sfft/tree.hpp"

namespace sfft {

// Frequency (linear index) -> amplitude; zeros are never stored.
class SparseSpectrum {
 public:
  SparseSpectrum() = default;
  explicit SparseSpectrum(const Dims& dims) : dims_(dims) {}

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return m_.size(); }
  bool empty() const { return m_.empty(); }
  const std::map<std::uint64_t, cplx>& entries() const { return m_; }

  void set(std::uint64_t lin, cplx v) {
    if (lin >= dims_.N) throw std::domain_error("frequency out of range");
    if (v == cplx(0, 0)) m_.erase(lin);
    else m_[lin] = v;
  }
  void set(const FreqVec& f, cplx v) { set(dims_.index(f), v); }
  void add(std::uint64_t lin, cplx v) { set(lin, get(lin) + v); }
  cplx get(std::uint64_t lin) const {
    auto it = m_.find(lin);
    return it == m_.end() ? cplx(0, 0) : it->second;
  }
  cplx get(const FreqVec& f) const { return get(dims_.index(f)); }
  bool contains(std::uint64_t lin) const { return m_.count(lin) != 0; }
  void erase(std::uint64_t lin) { m_.erase(lin); }

  // drops entries with |v| <= tol
  void prune(double tol) {
    for (auto it = m_.begin(); it != m_.end();)
      it = std::abs(it->second) <= tol ? m_.erase(it) : std::next(it);
  }

  std::vector<std::uint64_t> support() const {
    std::vector<std::uint64_t> s;
    s.reserve(m_.size());
    for (auto& [f, v] : m_) s.push_back(f);
    return s;
  }

  SparseSpectrum& operator+=(const SparseSpectrum& o) {
    if (!(o.dims_ == dims_)) throw std::domain_error("dims mismatch");
    for (auto& [f, v] : o.m_) add(f, v);
    return *this;
  }
  friend SparseSpectrum operator+(SparseSpectrum a, const SparseSpectrum& b) { return a += b; }

  double norm2() const {
    double s = 0;
    for (auto& [f, v] : m_) s += std::norm(v);
    return s;
  }

 private:
  Dims dims_;
  std::map<std::uint64_t, cplx> m_;
};

namespace detail {

// In-place radix-2 FFT along every coordinate; sign = -1 forward, +1 inverse (unscaled).
inline void fft_nd(std::vector<cplx>& a, const Dims& dims, int sign) {
  if (a.size() != dims.N) throw std::domain_error("array length must equal N");
  const std::uint32_t n = dims.n;
  std::vector<cplx> w(n / 2);
  for (std::uint32_t j = 0; j < n / 2; ++j) {
    if (j == 0) w[j] = 1;
    else if (4 * j == n) w[j] = cplx(0, sign);
    else w[j] = std::polar(1.0, sign * kTwoPi * j / n);
  }
  std::vector<cplx> buf(n);
  for (std::uint32_t c = 0; c < dims.d; ++c) {
    const std::uint64_t stride = std::uint64_t{1} << dims.shift(c);
    for (std::uint64_t base = 0; base < dims.N; ++base) {
      if (((base >> dims.shift(c)) & (n - 1)) != 0) continue;
      for (std::uint32_t j = 0; j < n; ++j) buf[j] = a[base + j * stride];
      // bit reversal
      for (std::uint32_t i = 1, j = 0; i < n; ++i) {
        std::uint32_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(buf[i], buf[j]);
      }
      for (std::uint32_t len = 2; len <= n; len <<= 1) {
        const std::uint32_t step = n / len;
        for (std::uint32_t i = 0; i < n; i += len) {
          for (std::uint32_t j = 0; j < len / 2; ++j) {
            cplx u = buf[i + j];
            cplx v = buf[i + j + len / 2] * w[j * step];
            buf[i + j] = u + v;
            buf[i + j + len / 2] = u - v;
          }
        }
      }
      for (std::uint32_t j = 0; j < n; ++j) a[base + j * stride] = buf[j];
    }
  }
}

}  // namespace detail

// x_hat_f = sum_t x_t e^{-2 pi i f.t / n}
inline std::vector<cplx> dft_dense(std::vector<cplx> x, const Dims& dims) {
  detail::fft_nd(x, dims, -1);
  return x;
}

// inverse, carrying the 1/N factor
inline std::vector<cplx> idft_dense(std::vector<cplx> xh, const Dims& dims) {
  detail::fft_nd(xh, dims, +1);
  const double s = 1.0 / static_cast<double>(dims.N);
  for (auto& v : xh) v *= s;
  return xh;
}

inline std::vector<cplx> to_dense(const SparseSpectrum& s) {
  std::vector<cplx> a(s.dims().N);
  for (auto& [f, v] : s.entries()) a[f] = v;
  return a;
}

// (1/N) sum_f chi_f e^{2 pi i f.t / n}, evaluated naively.
inline cplx nonequispaced_eval(const SparseSpectrum& chi, std::uint64_t t, const Twiddles& tw) {
  const Dims& dims = chi.dims();
  cplx acc = 0;
  for (auto& [f, v] : chi.entries()) acc += v * tw[dims.dot_mod(f, t)];
  return acc / static_cast<double>(dims.N);
}

inline cplx nonequispaced_eval(const SparseSpectrum& chi, const FreqVec& t) {
  Twiddles tw(chi.dims().n);
  return nonequispaced_eval(chi, chi.dims().index(t), tw);
}

// Point-access signal with a sample counter. Copies share the backing data
// but not the counter.
class SignalOracle {
 public:
  enum class Backing { Dense, Spectrum, SpectrumPlusNoise };

  static SignalOracle from_dense(const Dims& dims, std::vector<cplx> time) {
    if (time.size() != dims.N) throw std::domain_error("array length must equal N");
    SignalOracle o(dims, Backing::Dense);
    o.dense_ = std::make_shared<const std::vector<cplx>>(std::move(time));
    return o;
  }

  // values synthesized on demand, O(|supp|) per query
  static SignalOracle from_spectrum(const SparseSpectrum& s) {
    SignalOracle o(s.dims(), Backing::Spectrum);
    o.head_ = std::make_shared<const SparseSpectrum>(s);
    o.tw_ = std::make_shared<const Twiddles>(s.dims().n);
    return o;
  }

  // same signal, materialized through the dense inverse FFT
  static SignalOracle from_spectrum_dense(const SparseSpectrum& s) {
    SignalOracle o = from_dense(s.dims(), idft_dense(to_dense(s), s.dims()));
    o.head_ = std::make_shared<const SparseSpectrum>(s);
    return o;
  }

  // head spectrum plus a dense tail spectrum, materialized densely
  static SignalOracle from_spectrum_noise(const SparseSpectrum& head, std::vector<cplx> tail_hat) {
    const Dims& dims = head.dims();
    if (tail_hat.size() != dims.N) throw std::domain_error("tail length must equal N");
    std::vector<cplx> full = tail_hat;
    for (auto& [f, v] : head.entries()) full[f] += v;
    SignalOracle o(dims, Backing::SpectrumPlusNoise);
    o.dense_ = std::make_shared<const std::vector<cplx>>(idft_dense(full, dims));
    o.head_ = std::make_shared<const SparseSpectrum>(head);
    o.tail_ = std::make_shared<const std::vector<cplx>>(std::move(tail_hat));
    return o;
  }

  const Dims& dims() const { return dims_; }
  Backing backing() const { return backing_; }

  cplx at(std::uint64_t t) const {
    ++count_;
    return peek(t);
  }
  cplx operator()(const FreqVec& t) const { return at(dims_.index(t)); }

  // uncounted read, for ground-truth computations in tests and tools
  cplx peek(std::uint64_t t) const {
    if (dense_) return (*dense_)[t];
    return nonequispaced_eval(*head_, t, *tw_);
  }

  // direct access for the filter hot loop; callers must count via charge()
  const cplx* dense_data() const { return dense_ ? dense_->data() : nullptr; }
  void charge(std::uint64_t samples) const { count_ += samples; }

  std::uint64_t sample_count() const { return count_; }
  void reset_count() { count_ = 0; }
  SignalOracle clone() const {
    SignalOracle o = *this;
    o.count_ = 0;
    return o;
  }

  const SparseSpectrum* head() const { return head_.get(); }
  const std::vector<cplx>* tail() const { return tail_.get(); }

  // full spectrum x_hat (head + tail when present, else DFT of the samples)
  std::vector<cplx> spectrum() const {
    if (backing_ == Backing::SpectrumPlusNoise) {
      std::vector<cplx> full = *tail_;
      for (auto& [f, v] : head_->entries()) full[f] += v;
      return full;
    }
    if (head_) return to_dense(*head_);
    return dft_dense(*dense_, dims_);
  }

 private:
  SignalOracle(const Dims& dims, Backing b) : dims_(dims), backing_(b) {}

  Dims dims_;
  Backing backing_;
  std::shared_ptr<const std::vector<cplx>> dense_;
  std::shared_ptr<const SparseSpectrum> head_;
  std::shared_ptr<const std::vector<cplx>> tail_;
  std::shared_ptr<const Twiddles> tw_;
  mutable std::uint64_t count_ = 0;
};

inline std::uint64_t sample_count(const SignalOracle& x) { return x.sample_count(); }
inline void reset_count(SignalOracle& x) { x.reset_count(); }

enum class RipMode { Practical, Theory };

struct RipConfig {
  RipMode mode = RipMode::Practical;
  double c_theory = 1.0;
  double c_practical = 12.0;
  std::uint64_t floor = 16;
  std::uint64_t seed = 0;
};

inline std::uint64_t rip_count(std::uint64_t s, const Dims& dims, const RipConfig& cfg) {
  if (s < 1) throw std::domain_error("RIP sparsity must be >= 1");
  const double L = dims.depth;  // ceil(log2 N) = D
  if (cfg.mode == RipMode::Theory) {
    std::uint64_t q = ceil_u(cfg.c_theory * static_cast<double>(s) * L * L * L);
    return std::max(q, s);
  }
  std::uint64_t q = ceil_u(cfg.c_practical * static_cast<double>(s) * L);
  return std::max({q, cfg.floor, s});
}

// i.i.d. uniform points of [n]^d as linear indices
inline std::vector<std::uint64_t> uniform_points(std::uint64_t count, const Dims& dims,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> out(count);
  for (auto& p : out) p = rng() & (dims.N - 1);
  return out;
}

inline std::vector<std::uint64_t> rip_samples(std::uint64_t s, const Dims& dims, const RipConfig& cfg) {
  return uniform_points(rip_count(s, dims, cfg), dims, cfg.seed);
}

// ---- generators ----

namespace detail {

inline cplx unit_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  return std::polar(1.0, kTwoPi * U(rng));
}

// Shifted lattice with `counts[c]` points along coordinate c (each a power of
// two dividing n), values e^{2 pi i f.t~/n}.
inline SparseSpectrum shifted_lattice(const std::vector<std::uint32_t>& counts, const Dims& dims,
                                      std::mt19937_64& rng) {
  const std::uint64_t fshift = rng() & (dims.N - 1);
  const std::uint64_t tshift = rng() & (dims.N - 1);
  Twiddles tw(dims.n);
  SparseSpectrum s(dims);
  std::uint64_t total = 1;
  for (auto m : counts) total *= m;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t rem = idx, lin = 0;
    for (std::uint32_t c = 0; c < dims.d; ++c) {
      std::uint64_t i = rem % counts[c];
      rem /= counts[c];
      lin |= (i * (dims.n / counts[c])) << dims.shift(c);
    }
    std::uint64_t f = dims.add(lin, fshift);
    s.set(f, tw[dims.dot_mod(f, tshift)]);
  }
  return s;
}

}  // namespace detail

// k uniformly random distinct frequencies with unit-magnitude random phases
inline SparseSpectrum gen_random_support(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  if (k > dims.N) throw std::domain_error("k exceeds N");
  std::mt19937_64 rng(seed);
  SparseSpectrum s(dims);
  while (s.size() < k) {
    std::uint64_t f = rng() & (dims.N - 1);
    if (!s.contains(f)) s.set(f, detail::unit_phase(rng));
  }
  return s;
}

inline SparseSpectrum gen_random_overtones(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  if (k % (dims.d + 1) != 0) throw std::domain_error("k must be divisible by d+1");
  if (dims.n < 4) throw std::domain_error("overtones need n >= 4");
  if (k > dims.N) throw std::domain_error("k exceeds N");
  std::mt19937_64 rng(seed);
  const std::uint64_t groups = k / (dims.d + 1);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::set<std::uint64_t> supp;
    for (std::uint64_t g = 0; g < groups; ++g) {
      std::uint64_t f = rng() & (dims.N - 1);
      supp.insert(f);
      for (std::uint32_t c = 0; c < dims.d; ++c)
        supp.insert(dims.add(f, std::uint64_t{dims.n / 2} << dims.shift(c)));
    }
    if (supp.size() != k) continue;
    SparseSpectrum s(dims);
    for (auto f : supp) s.set(f, detail::unit_phase(rng));
    return s;
  }
  throw std::domain_error("could not place overtone groups without collisions");
}

// Overtone groups for k not divisible by d+1: floor(k/(d+1)) groups plus
// random frequencies filling the support up to exactly k.
inline SparseSpectrum gen_random_overtones_padded(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  const std::uint64_t core = k - k % (dims.d + 1);
  SparseSpectrum s = core ? gen_random_overtones(core, dims, seed) : SparseSpectrum(dims);
  std::mt19937_64 rng(mix_seed(seed, 0x0ae7));
  while (s.size() < k) {
    std::uint64_t f = rng() & (dims.N - 1);
    if (!s.contains(f)) s.set(f, detail::unit_phase(rng));
  }
  return s;
}

inline SparseSpectrum gen_shifted_dirac_comb(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  const double root = std::pow(static_cast<double>(k), 1.0 / dims.d);
  const auto m = static_cast<std::uint64_t>(std::llround(root));
  std::uint64_t p = 1;
  for (std::uint32_t c = 0; c < dims.d; ++c) p *= m;
  if (k == 0 || p != k || m == 0 || dims.n % m != 0)
    throw std::domain_error("k^(1/d) must be an integer dividing n");
  std::mt19937_64 rng(seed);
  return detail::shifted_lattice(std::vector<std::uint32_t>(dims.d, static_cast<std::uint32_t>(m)),
                                 dims, rng);
}

// Comb whose per-coordinate counts are powers of two as equal as possible
// with product k; equals gen_shifted_dirac_comb when k^(1/d) is a power of two.
inline SparseSpectrum gen_shifted_lattice_comb(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  if (!is_pow2(k)) throw std::domain_error("lattice comb needs k a power of two");
  std::uint32_t e = ilog2(k);
  if (e > dims.depth) throw std::domain_error("k exceeds N");
  std::vector<std::uint32_t> counts(dims.d);
  for (std::uint32_t c = 0; c < dims.d; ++c) {
    // hand the extra bits to the last coordinates
    std::uint32_t bits = e / dims.d + ((dims.d - 1 - c) < e % dims.d ? 1 : 0);
    counts[c] = 1u << bits;
  }
  std::mt19937_64 rng(seed);
  return detail::shifted_lattice(counts, dims, rng);
}

inline SparseSpectrum gen_mixture(const SparseSpectrum& a, const SparseSpectrum& b) {
  if (!(a.dims() == b.dims())) throw std::domain_error("dims mismatch");
  return a + b;
}

struct HighSnrOptions {
  bool rescale_head = false;  // lift head magnitudes up to 3*mu*(1+margin) instead of rejecting
  double margin = 0.0;
};

// x_hat = head + eta_hat with eta_hat dense Gaussian off supp(head), ||eta_hat||_2 = mu.
inline SignalOracle gen_high_snr(SparseSpectrum head, double mu, std::uint64_t seed,
                                 HighSnrOptions opt = {}) {
  const Dims& dims = head.dims();
  if (mu < 0) throw std::domain_error("mu must be non-negative");
  if (dims.N > (std::uint64_t{1} << 26)) throw std::domain_error("N too large to materialize (> 2^26)");
  const double floor_mag = 3.0 * mu;
  for (auto& [f, v] : std::map<std::uint64_t, cplx>(head.entries())) {
    if (std::abs(v) + 1e-12 * floor_mag < floor_mag) {
      if (!opt.rescale_head) throw std::domain_error("head coefficient below 3*mu");
      head.set(f, std::polar(floor_mag * (1.0 + opt.margin), std::arg(v)));
    }
  }
  std::vector<cplx> tail(dims.N);
  if (mu > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double e = 0;
    for (std::uint64_t f = 0; f < dims.N; ++f) {
      if (head.contains(f)) continue;
      tail[f] = cplx(g(rng), g(rng));
      e += std::norm(tail[f]);
    }
    if (e > 0) {
      const double s = mu / std::sqrt(e);
      for (auto& v : tail) v *= s;
    }
  }
  return SignalOracle::from_spectrum_noise(head, std::move(tail));
}

// ||x_hat - chi||_2^2 against a dense reference spectrum
inline double l2_error_sq(const std::vector<cplx>& xhat, const SparseSpectrum& chi) {
  double err = 0;
  for (auto& v : xhat) err += std::norm(v);
  for (auto& [f, v] : chi.entries()) err += std::norm(xhat[f] - v) - std::norm(xhat[f]);
  return std::max(err, 0.0);
}

}  // namespace sfft
