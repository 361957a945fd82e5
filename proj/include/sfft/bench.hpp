#pragma once

// Instance generation, algorithm dispatch, verification against the dense
// FFT, and machine-readable reports for the CLI and benchmarks.

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfft/exact.hpp"
#include "sfft/recursive.hpp"
#include "sfft/robust.hpp"
#include "sfft/signal.hpp"

namespace sfft {

using json = nlohmann::json;

inline constexpr const char* kSchema = "v1";
inline constexpr std::uint64_t kVerifyMaxN = std::uint64_t{1} << 24;
// tail bound handed to the robust algorithms on exactly sparse inputs
inline constexpr double kExactlySparseMu = 1e-7;

struct Instance {
  Dims dims;
  SparseSpectrum head;
  std::string cls;
  std::uint64_t k = 0;
  std::uint64_t seed = 0;
  double mu = 0;
  std::uint64_t noise_seed = 0;
};

namespace detail {

// a + b over disjoint supports; b is redrawn with derived seeds on overlap
template <class GenB>
SparseSpectrum disjoint_mix(const SparseSpectrum& a, GenB&& gen_b, std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 10000; ++attempt) {
    SparseSpectrum b = gen_b(mix_seed(seed, attempt));
    bool overlap = false;
    for (auto& [f, v] : b.entries()) overlap = overlap || a.contains(f);
    if (!overlap) return gen_mixture(a, b);
  }
  throw std::domain_error("could not draw disjoint mixture components");
}

inline bool integer_root_divides(std::uint64_t k, const Dims& dims) {
  const auto m = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(k), 1.0 / dims.d)));
  std::uint64_t p = 1;
  for (std::uint32_t c = 0; c < dims.d; ++c) p *= m;
  return m > 0 && p == k && dims.n % m == 0;
}

inline SparseSpectrum comb_of(std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  return integer_root_divides(k, dims) ? gen_shifted_dirac_comb(k, dims, seed)
                                       : gen_shifted_lattice_comb(k, dims, seed);
}

}  // namespace detail

inline const std::vector<std::string>& signal_classes() {
  static const std::vector<std::string> c{"overtones", "comb", "comb-mix", "rand-comb-mix", "random"};
  return c;
}

// Exactly k-sparse head of the named class.
inline SparseSpectrum gen_class(const std::string& cls, std::uint64_t k, const Dims& dims, std::uint64_t seed) {
  if (k == 0) return SparseSpectrum(dims);
  if (cls == "overtones")
    return k % (dims.d + 1) == 0 ? gen_random_overtones(k, dims, seed) : gen_random_overtones_padded(k, dims, seed);
  if (cls == "comb") return detail::comb_of(k, dims, seed);
  if (cls == "random") return gen_random_support(k, dims, seed);
  if (cls == "comb-mix" || cls == "rand-comb-mix") {
    if (k % 2) throw std::domain_error("mixture classes need even k");
    const std::uint64_t h = k / 2;
    SparseSpectrum a = detail::comb_of(h, dims, seed);
    if (cls == "comb-mix")
      return detail::disjoint_mix(a, [&](std::uint64_t s) { return detail::comb_of(h, dims, s); }, seed + 1);
    return detail::disjoint_mix(a, [&](std::uint64_t s) { return gen_random_support(h, dims, s); }, seed + 1);
  }
  throw std::domain_error("unknown signal class: " + cls);
}

inline Instance make_instance(const std::string& cls, std::int64_t n, std::int64_t d, std::uint64_t k,
                              std::uint64_t seed, double mu = 0, std::uint64_t noise_seed = 0) {
  const Dims dims = Dims::make(n, d);
  Instance in{dims, gen_class(cls, k, dims, seed), cls, k, seed, mu, noise_seed};
  if (mu > 0) {
    // heads carry unit magnitude; the high-SNR floor needs mu <= 1/3
    if (3.0 * mu > 1.0 + 1e-12) throw std::domain_error("mu must be at most 1/3 for unit-magnitude heads");
  }
  return in;
}

inline SignalOracle make_oracle(const Instance& in) {
  if (in.mu > 0) return gen_high_snr(in.head, in.mu, in.noise_seed);
  if (in.dims.N <= kVerifyMaxN) return SignalOracle::from_spectrum_dense(in.head);
  return SignalOracle::from_spectrum(in.head);
}

// ---- JSON ----

inline std::string freq_string(std::uint64_t lin, const Dims& dims) {
  std::string s;
  for (auto c : dims.freq(lin)) s += (s.empty() ? "" : ",") + std::to_string(c);
  return s;
}

inline std::uint64_t parse_freq(const std::string& s, const Dims& dims) {
  FreqVec f;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(std::stoll(tok));
  if (f.size() != dims.d) throw std::domain_error("frequency '" + s + "' has the wrong dimension");
  for (auto c : f)
    if (c < 0 || c >= static_cast<std::int64_t>(dims.n)) throw std::domain_error("frequency out of range: " + s);
  return dims.index(f);
}

inline json spectrum_entries_json(const SparseSpectrum& s) {
  json arr = json::array();
  for (auto& [f, v] : s.entries())
    arr.push_back({{"f", freq_string(f, s.dims())}, {"re", v.real()}, {"im", v.imag()}});
  return arr;
}

inline SparseSpectrum spectrum_from_entries(const json& arr, const Dims& dims) {
  SparseSpectrum s(dims);
  for (auto& e : arr) s.set(parse_freq(e.at("f").get<std::string>(), dims), cplx(e.at("re"), e.at("im")));
  return s;
}

inline json instance_to_json(const Instance& in) {
  return {{"schema", kSchema},   {"n", in.dims.n},   {"d", in.dims.d},
          {"class", in.cls},     {"k", in.k},        {"seed", in.seed},
          {"mu", in.mu},         {"noise_seed", in.noise_seed},
          {"entries", spectrum_entries_json(in.head)}};
}

inline Instance instance_from_json(const json& j) {
  const Dims dims = Dims::make(j.at("n").get<std::int64_t>(), j.at("d").get<std::int64_t>());
  Instance in;
  in.dims = dims;
  in.head = spectrum_from_entries(j.at("entries"), dims);
  in.cls = j.value("class", std::string("custom"));
  in.k = j.value("k", static_cast<std::uint64_t>(in.head.size()));
  in.seed = j.value("seed", std::uint64_t{0});
  in.mu = j.value("mu", 0.0);
  in.noise_seed = j.value("noise_seed", std::uint64_t{0});
  return in;
}

// ---- runs ----

enum class Algo { Exact, Slow, Robust, Recursive };

inline Algo parse_algo(const std::string& s) {
  if (s == "exact") return Algo::Exact;
  if (s == "slow") return Algo::Slow;
  if (s == "robust") return Algo::Robust;
  if (s == "recursive") return Algo::Recursive;
  throw std::domain_error("unknown algorithm: " + s);
}

inline std::string algo_name(Algo a) {
  switch (a) {
    case Algo::Exact: return "exact";
    case Algo::Slow: return "slow";
    case Algo::Robust: return "robust";
    case Algo::Recursive: return "recursive";
  }
  return "?";
}

struct RunOptions {
  Algo algo = Algo::Exact;
  std::optional<double> mu;  // defaults to the instance's mu
  double eps = 0.1;
  RipMode rip = RipMode::Practical;
  std::uint64_t seed = 0;
  double alpha = 0;  // 0: algorithm default
};

struct RunReport {
  Instance instance;
  RunOptions opt;
  SparseSpectrum recovered;
  std::int64_t wall_ns = 0;
  std::uint64_t samples = 0;
  bool completed = false;
  bool algo_ok = true;  // algorithm-level success flag
  double alpha = 0;
  std::optional<double> precision, recall, l2_error_sq, tail_sq;
  std::optional<bool> success;
};

inline RunReport run_instance(const Instance& in, const RunOptions& opt) {
  RunReport rep;
  rep.instance = in;
  rep.opt = opt;
  rep.recovered = SparseSpectrum(in.dims);
  SignalOracle x = make_oracle(in);
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t k = in.k;
  switch (opt.algo) {
    case Algo::Exact:
    case Algo::Slow: {
      ExactConfig cfg;
      cfg.rip.mode = opt.rip;
      cfg.seed = opt.seed;
      auto r = exact_sparse_fft(x, k, cfg, opt.alpha, opt.algo == Algo::Slow ? ExactAlgo::Slow : ExactAlgo::Backtracking);
      rep.recovered = std::move(r.spectrum);
      rep.alpha = r.alpha;
      break;
    }
    case Algo::Robust:
    case Algo::Recursive: {
      RobustParams p;
      p.mu = opt.mu.value_or(in.mu);
      if (p.mu == 0) p.mu = kExactlySparseMu;
      p.eps = opt.eps;
      p.seed = opt.seed;
      p.theory = opt.rip == RipMode::Theory;
      if (opt.algo == Algo::Robust) {
        auto r = robust_sparse_ft(x, k, p);
        rep.recovered = std::move(r.spectrum);
        rep.algo_ok = r.ok;
      } else {
        auto r = robust_sft(x, k, p, opt.alpha);
        rep.recovered = std::move(r.spectrum);
        rep.algo_ok = r.ok;
        rep.alpha = r.alpha;
      }
      break;
    }
  }
  rep.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
  rep.samples = x.sample_count();
  rep.completed = true;
  return rep;
}

// Fills precision, recall and the l2 error against the dense ground truth.
inline void verify_report(RunReport& rep, double rel_tol = 1e-8) {
  const Instance& in = rep.instance;
  if (in.dims.N > kVerifyMaxN) throw std::domain_error("dense verification needs N <= 2^24");
  const SignalOracle x = make_oracle(in);
  const std::vector<cplx> xh = x.spectrum();
  std::size_t hit = 0;
  for (auto& [f, v] : rep.recovered.entries()) hit += in.head.contains(f);
  const double rs = static_cast<double>(rep.recovered.size()), hs = static_cast<double>(in.head.size());
  rep.precision = rs > 0 ? hit / rs : 1.0;
  rep.recall = hs > 0 ? hit / hs : 1.0;
  rep.l2_error_sq = l2_error_sq(xh, rep.recovered);
  double tail = 0;
  for (std::uint64_t f = 0; f < in.dims.N; ++f)
    if (!in.head.contains(f)) tail += std::norm(xh[f]);
  rep.tail_sq = tail;
  if (rep.opt.algo == Algo::Exact || rep.opt.algo == Algo::Slow) {
    double scale = 0;
    for (auto& [f, v] : in.head.entries()) scale = std::max(scale, std::abs(v));
    bool ok = *rep.precision == 1.0 && *rep.recall == 1.0;
    for (auto& [f, v] : in.head.entries()) ok = ok && std::abs(rep.recovered.get(f) - v) <= rel_tol * std::max(scale, 1.0);
    rep.success = ok;
  } else {
    const double floor = 1e-10 * std::max(1.0, rep.instance.head.norm2());
    rep.success = *rep.l2_error_sq <= (1.0 + rep.opt.eps) * tail + floor;
  }
}

inline json report_to_json(const RunReport& r) {
  json j = {{"schema", kSchema},
            {"instance",
             {{"n", r.instance.dims.n},
              {"d", r.instance.dims.d},
              {"k", r.instance.k},
              {"class", r.instance.cls},
              {"seed", r.instance.seed},
              {"mu", r.instance.mu},
              {"noise_seed", r.instance.noise_seed}}},
            {"algo", algo_name(r.opt.algo)},
            {"params",
             {{"eps", r.opt.eps},
              {"mu", r.opt.mu.value_or(r.instance.mu)},
              {"rip", r.opt.rip == RipMode::Theory ? "theory" : "practical"},
              {"seed", r.opt.seed},
              {"alpha", r.alpha}}},
            {"wall_ns", r.wall_ns},
            {"samples", r.samples},
            {"completed", r.completed},
            {"algo_ok", r.algo_ok},
            {"recovered", spectrum_entries_json(r.recovered)}};
  if (r.success) j["success"] = *r.success;
  if (r.precision) j["precision"] = *r.precision;
  if (r.recall) j["recall"] = *r.recall;
  if (r.l2_error_sq) j["l2_error_sq"] = *r.l2_error_sq;
  if (r.tail_sq) j["tail_sq"] = *r.tail_sq;
  return j;
}

inline RunReport report_from_json(const json& j, const Instance& in) {
  RunReport r;
  r.instance = in;
  r.recovered = SparseSpectrum(in.dims);
  r.opt.algo = parse_algo(j.at("algo"));
  const json& p = j.at("params");
  r.opt.eps = p.value("eps", 0.1);
  r.opt.mu = p.value("mu", in.mu);
  r.opt.rip = p.value("rip", std::string("practical")) == "theory" ? RipMode::Theory : RipMode::Practical;
  r.opt.seed = p.value("seed", std::uint64_t{0});
  r.alpha = p.value("alpha", 0.0);
  r.wall_ns = j.value("wall_ns", std::int64_t{0});
  r.samples = j.value("samples", std::uint64_t{0});
  r.completed = j.value("completed", false);
  r.algo_ok = j.value("algo_ok", true);
  r.recovered = spectrum_from_entries(j.at("recovered"), in.dims);
  return r;
}

// ---- aggregation ----

// least-squares slope of log(y) against log(x)
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("slope fit needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::domain_error("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2;
}

inline const char* kCsvHeader = "schema,algo,class,n,d,k,trial,seed,wall_ns,samples,completed,success,precision,recall,l2_error_sq";

inline std::string csv_row(const RunReport& r, std::uint64_t trial) {
  std::ostringstream os;
  os.precision(17);
  os << kSchema << ',' << algo_name(r.opt.algo) << ',' << r.instance.cls << ',' << r.instance.dims.n << ','
     << r.instance.dims.d << ',' << r.instance.k << ',' << trial << ',' << r.instance.seed << ',' << r.wall_ns << ','
     << r.samples << ',' << r.completed << ',' << r.success.value_or(false) << ',' << r.precision.value_or(0) << ','
     << r.recall.value_or(0) << ',' << r.l2_error_sq.value_or(0);
  return os.str();
}

struct BenchPoint {
  std::uint64_t k = 0;
  std::vector<RunReport> runs;
};

inline json aggregate_json(const std::vector<BenchPoint>& pts) {
  json per_k = json::array();
  std::vector<double> ks, meds;
  bool all_completed = true;
  for (auto& p : pts) {
    std::vector<double> t, s;
    std::size_t succ = 0, done = 0;
    for (auto& r : p.runs) {
      done += r.completed;
      succ += r.success.value_or(false);
      t.push_back(static_cast<double>(r.wall_ns));
      s.push_back(static_cast<double>(r.samples));
    }
    all_completed = all_completed && done == p.runs.size();
    const double ms = s.empty() ? 0 : median(s);
    per_k.push_back({{"k", p.k},
                     {"trials", p.runs.size()},
                     {"completed", done},
                     {"success_rate", p.runs.empty() ? 0.0 : static_cast<double>(succ) / p.runs.size()},
                     {"median_wall_ns", t.empty() ? 0 : median(t)},
                     {"median_samples", ms}});
    if (ms > 0) {
      ks.push_back(static_cast<double>(p.k));
      meds.push_back(ms);
    }
  }
  json j = {{"schema", kSchema}, {"per_k", per_k}, {"all_completed", all_completed}};
  if (ks.size() >= 2) j["samples_vs_k_slope"] = loglog_slope(ks, meds);
  return j;
}

}  // namespace sfft
