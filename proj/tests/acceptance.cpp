// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [criterion ...] [--known-fail N ...]
//
// With no criteria listed all nine run. The exit status is nonzero when a
// criterion fails that is not listed after --known-fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "sfft/bench.hpp"

using namespace sfft;

namespace {

// ---- pinned tolerances and sizes ----
constexpr double kIsolationTol = 1e-10;
constexpr double kUnityTol = 1e-9;
constexpr double kGramRelTol = 1e-9;
constexpr double kExactRelTol = 1e-8;
constexpr double kExactSlopeMax = 2.6;
constexpr double kSlowSlopeGap = 0.3;
constexpr double kBacktrackingAlpha = 0.5;
constexpr double kDenseRelTol = 1e-10;
constexpr double kHighSnrMu = 1.0 / 3.0;  // unit heads, so min head = 3 mu
constexpr std::uint64_t kDominanceSeeds = 11;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SubTree random_tree(const Dims& dims, std::mt19937_64& rng) {
  SubTree T(dims);
  const std::size_t paths = 1 + rng() % 24;
  for (std::size_t i = 0; i < paths; ++i) {
    const std::uint32_t dep = 1 + static_cast<std::uint32_t>(rng() % dims.depth);
    T.add_path(NodeId::make(dep, rng() & NodeId::low_mask(dep)));
  }
  return T;
}

// ---- 1. filter suite ----
Outcome filter_suite() {
  const std::pair<int, int> shapes[] = {{16, 1}, {64, 1}, {16, 2}, {8, 3}};
  std::mt19937_64 rng(101);
  double iso = 0, unity = 0, gram = 0;
  bool support_ok = true;
  for (int it = 0; it < 500; ++it) {
    const Dims d = Dims::make(shapes[it % 4].first, shapes[it % 4].second);
    const SubTree T = random_tree(d, rng);
    const std::vector<NodeId> leaves(T.leaves().begin(), T.leaves().end());
    std::vector<IsolatingFilter> F;
    for (NodeId v : leaves) {
      F.push_back(build_filter_multidim(T, v));
      support_ok = support_ok && F.back().support_size() == (std::size_t{1} << T.weight(v));
    }
    for (std::uint64_t xi = 0; xi < d.N; ++xi) {
      double s = 0;
      for (std::size_t a = 0; a < leaves.size(); ++a) {
        const cplx g = F[a].freq(xi);
        s += std::norm(g);
        for (std::size_t b = 0; b < leaves.size(); ++b) {
          if (!cone_contains(leaves[b], xi, d)) continue;
          iso = std::max(iso, std::abs(g - (a == b ? cplx(1, 0) : cplx(0, 0))));
        }
      }
      unity = std::max(unity, std::abs(s - 1.0));
    }
    if (d.d != 1) continue;
    for (std::size_t a = 0; a < leaves.size(); ++a)
      for (std::size_t b = 0; b < leaves.size(); ++b) {
        cplx g(0, 0);
        for (std::uint64_t xi = 0; xi < d.N; ++xi) g += F[a].freq(xi) * std::conj(F[b].freq(xi));
        const double want = a == b ? std::ldexp(static_cast<double>(d.n), -T.weight(leaves[a])) : 0.0;
        gram = std::max(gram, std::abs(g - want) / d.n);
      }
  }
  return {iso <= kIsolationTol && unity <= kUnityTol && gram <= kGramRelTol && support_ok,
          fmt("isolation %.1e, unity %.1e, gram/n %.1e, |supp|=2^w %s", iso, unity, gram, support_ok ? "yes" : "no")};
}

// ---- 2. Kraft suite ----
Outcome kraft_suite() {
  std::mt19937_64 rng(202);
  int equal = 0, subadd = 0, averaging = 0;
  for (int it = 0; it < 1000; ++it) {
    const Dims d = it % 2 ? Dims::make(64, 2) : Dims::make(16, 3);
    const SubTree T = random_tree(d, rng);
    equal += kraft_mass(T, T.leaves()) == Dyadic::one();
    averaging += T.weight(min_weight_leaf(T)) <= static_cast<int>(ilog2(T.leaves().size()));
  }
  const Dims d = Dims::make(64, 2);
  auto node = [&] {
    const std::uint32_t dep = 1 + static_cast<std::uint32_t>(rng() % d.depth);
    return NodeId::make(dep, rng() & NodeId::low_mask(dep));
  };
  for (int it = 0; it < 1000; ++it) {
    std::vector<NodeId> s1, s2;
    for (std::size_t i = rng() % 8; i > 0; --i) s1.push_back(node());
    for (std::size_t i = rng() % 8; i > 0; --i) s2.push_back(node());
    const NodeId v = node();
    std::vector<NodeId> u = s1;
    u.insert(u.end(), s2.begin(), s2.end());
    subadd += weight_wrt_set(u, v, d) <= weight_wrt_set(s1, v, d) + weight_wrt_set(s2, v, d);
  }
  return {equal == 1000 && subadd == 1000 && averaging == 1000,
          fmt("equality %d/1000, subadditivity %d/1000, averaging %d/1000", equal, subadd, averaging)};
}

// ---- 3. adversarial exploration ----
Outcome adversarial_exploration() {
  const std::pair<int, int> shapes[] = {{1 << 16, 1}, {256, 2}, {16, 4}, {64, 2}, {32, 3}, {4, 8}};
  const char* classes[] = {"random", "comb", "overtones"};
  std::mt19937_64 rng(303);
  int ok = 0;
  for (int it = 0; it < 200; ++it) {
    const Dims d = Dims::make(shapes[it % 6].first, shapes[it % 6].second);
    std::uint64_t k = 1 + rng() % 64;
    // structured supports need k a power of two for combs
    const std::string cls = classes[(it / 6) % 3];
    if (cls == "comb") k = std::uint64_t{1} << (rng() % 7);
    std::map<NodeId, cplx> truth;
    std::uniform_int_distribution<int> val(-9, 9);
    for (auto f : gen_class(cls, k, d, rng()).support()) {
      cplx c(0, 0);
      while (c == cplx(0, 0)) c = cplx(val(rng), val(rng));
      truth[leaf_of(f, d)] = c;
    }
    const double alphas[] = {0.5, 0.25, 0.125, default_alpha(k, d.N)};
    SyntheticOracle o(d, truth, SyntheticOracle::Mode::Adversarial);
    const Found got = exact_recovery(o, {}, {}, NodeId::root(), k, k, alphas[rng() % 4]);
    ok += got == Found(truth.begin(), truth.end());
  }
  return {ok == 200, fmt("%d/200 exact", ok)};
}

// ---- 4. exact end-to-end ----
bool exact_match(const SparseSpectrum& got, const SparseSpectrum& want) {
  if (got.support() != want.support()) return false;
  for (auto& [f, v] : want.entries())
    if (std::abs(got.get(f) - v) > kExactRelTol * std::abs(v)) return false;
  return true;
}

Outcome exact_end_to_end() {
  const char* classes[] = {"overtones", "comb", "comb-mix", "rand-comb-mix"};
  const std::tuple<int, int, int> grid[] = {{64, 2, 16}, {32, 3, 8}, {256, 1, 32}};
  bool pass = true;
  std::string detail;
  int worst = 100;
  for (auto [n, d, k] : grid)
    for (const char* cls : classes) {
      int ok = 0;
      for (std::uint64_t s = 0; s < 100; ++s) {
        const Instance in = make_instance(cls, n, d, k, s);
        ExactConfig cfg;
        cfg.seed = mix_seed(s, 4);
        ok += exact_match(exact_sparse_fft(make_oracle(in), k, cfg).spectrum, in.head);
      }
      worst = std::min(worst, ok);
      pass = pass && ok >= 99;
    }
  detail = fmt("practical worst cell %d/100", worst);
  int theory_worst = 100;
  for (const char* cls : classes) {
    int ok = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const Instance in = make_instance(cls, 16, 2, 4, s);
      ExactConfig cfg;
      cfg.rip.mode = RipMode::Theory;
      cfg.seed = mix_seed(s, 4);
      ok += exact_match(exact_sparse_fft(make_oracle(in), 4, cfg).spectrum, in.head);
    }
    theory_worst = std::min(theory_worst, ok);
    pass = pass && ok == 100;
  }
  return {pass, detail + fmt(", theory worst cell %d/100", theory_worst)};
}

// ---- 5. exact sample scaling ----
Outcome exact_scaling() {
  const Dims d = Dims::make(256, 1);
  std::vector<double> ks, bt, slow;
  bool correct = true;
  for (std::uint64_t k : {8, 16, 32, 64}) {
    std::vector<double> sb, ss;
    for (std::uint64_t s = 0; s < 25; ++s) {
      const auto head = gen_random_support(k, d, mix_seed(s, k));
      ExactConfig cfg;
      cfg.seed = s;
      const SignalOracle x = SignalOracle::from_spectrum_dense(head);
      correct = correct && exact_match(exact_sparse_fft(x, k, cfg, kBacktrackingAlpha).spectrum, head);
      sb.push_back(static_cast<double>(x.sample_count()));
      const SignalOracle y = SignalOracle::from_spectrum_dense(head);
      correct = correct && exact_match(exact_sparse_fft(y, k, cfg, 0, ExactAlgo::Slow).spectrum, head);
      ss.push_back(static_cast<double>(y.sample_count()));
    }
    ks.push_back(static_cast<double>(k));
    bt.push_back(median(sb));
    slow.push_back(median(ss));
  }
  const double a = loglog_slope(ks, bt), b = loglog_slope(ks, slow);
  return {a < kExactSlopeMax && b - a >= kSlowSlopeGap,
          fmt("backtracking slope %.3f (alpha=1/2), slow slope %.3f, gap %.3f%s", a, b, b - a,
              correct ? "" : ", some runs inexact")};
}

// ---- 6. robust l2/l2 ----
Outcome robust_l2() {
  const Dims d = Dims::make(64, 2);
  const double mu = kHighSnrMu;
  int ok1 = 0, ok2 = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto head = gen_random_support(16, d, s);
    const SignalOracle x = gen_high_snr(head, mu, mix_seed(s, 1));
    const auto xh = x.spectrum();
    double tail = 0;
    for (std::uint64_t f = 0; f < d.N; ++f)
      if (!head.contains(f)) tail += std::norm(xh[f]);
    RobustParams p;
    p.mu = mu;
    p.seed = s;
    p.eps = 0.1;
    ok1 += l2_error_sq(xh, robust_sparse_ft(x, 16, p).spectrum) <= (1 + p.eps) * tail;
    p.eps = 0.05;
    const auto r = robust_sft(x, 16, p);
    ok2 += r.ok && l2_error_sq(xh, r.spectrum) <= (1 + p.eps) * tail;
  }
  return {ok1 >= 90 && ok2 >= 90, fmt("robust_sparse_ft %d/100 (eps=0.1), robust_sft %d/100 (eps=0.05)", ok1, ok2)};
}

// ---- 7. sample dominance ----
Outcome sample_dominance() {
  const Dims d = Dims::make(64, 2);
  const double mu = kHighSnrMu;
  std::vector<double> a, b;
  for (std::uint64_t s = 0; s < kDominanceSeeds; ++s) {
    const auto head = gen_random_support(32, d, s);
    const SignalOracle x = gen_high_snr(head, mu, mix_seed(s, 1));
    RobustParams p;
    p.mu = mu;
    p.seed = s;
    const SignalOracle x1 = x.clone(), x2 = x.clone();
    robust_sparse_ft(x1, 32, p);
    robust_sft(x2, 32, p);
    a.push_back(static_cast<double>(x1.sample_count()));
    b.push_back(static_cast<double>(x2.sample_count()));
  }
  const double ma = median(a), mb = median(b);
  return {mb < ma, fmt("median samples robust_sft %.3g vs robust_sparse_ft %.3g (ratio %.2f, %llu seeds)", mb, ma,
                       mb / ma, static_cast<unsigned long long>(kDominanceSeeds))};
}

// ---- 8. estimate error bound ----
Outcome estimate_bound() {
  const Dims d = Dims::make(64, 2);
  const std::uint64_t m = 64;
  int ok = 0;
  double worst = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto head = gen_random_support(16, d, s);
    const SignalOracle x = gen_high_snr(head, kHighSnrMu, mix_seed(s, 1));
    const auto xh = x.spectrum();
    const SubTree T = splitting_tree_idx(head.support(), d);
    double off = 0;
    for (std::uint64_t f = 0; f < d.N; ++f)
      if (!head.contains(f)) off += std::norm(xh[f]);
    RobustParams p;
    p.mu = kHighSnrMu;
    p.seed = s;
    RobustCtx ctx(x, p);
    double err = 0;
    for (auto& [u, v] : estimate_set(ctx, SparseSpectrum(d), T, T.leaves(), m))
      err += std::norm(v - xh[label_index(u, d)]);
    const double bound = 32.0 / static_cast<double>(m) * off;
    ok += err <= bound;
    worst = std::max(worst, err / bound);
  }
  return {ok >= 95, fmt("%d/100 within (32/m) off-tree energy, m=%llu, worst ratio %.3g", ok,
                        static_cast<unsigned long long>(m), worst)};
}

// ---- 9. dense-core identities ----
Outcome dense_core() {
  std::mt19937_64 rng(909);
  std::normal_distribution<double> g;
  const std::pair<int, int> shapes[] = {{4096, 1}, {64, 2}, {16, 3}, {8, 4}, {2, 12}, {32, 2}};
  double parseval = 0, conv = 0;
  for (int it = 0; it < 100; ++it) {
    const Dims d = Dims::make(shapes[it % 6].first, shapes[it % 6].second);
    std::vector<cplx> x(d.N), y(d.N);
    for (auto& v : x) v = cplx(g(rng), g(rng));
    for (auto& v : y) v = cplx(g(rng), g(rng));
    const auto xh = dft_dense(x, d), yh = dft_dense(y, d);
    double ex = 0, exh = 0, ey = 0;
    for (std::uint64_t i = 0; i < d.N; ++i) {
      ex += std::norm(x[i]);
      ey += std::norm(y[i]);
      exh += std::norm(xh[i]);
    }
    parseval = std::max(parseval, std::abs(ex - exh / static_cast<double>(d.N)) / ex);
    // x conv y at random points, directly and through the transform
    std::vector<cplx> prod(d.N);
    for (std::uint64_t i = 0; i < d.N; ++i) prod[i] = xh[i] * yh[i];
    const auto via = idft_dense(prod, d);
    for (int r = 0; r < 8; ++r) {
      const std::uint64_t t = rng() & (d.N - 1);
      cplx direct(0, 0);
      for (std::uint64_t j = 0; j < d.N; ++j) direct += x[j] * y[d.sub(t, j)];
      conv = std::max(conv, std::abs(direct - via[t]) / std::sqrt(ex * ey));
    }
  }
  return {parseval <= kDenseRelTol && conv <= kDenseRelTol,
          fmt("Parseval rel err %.1e, convolution rel err %.1e", parseval, conv)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"filter suite", filter_suite},
      {"Kraft suite", kraft_suite},
      {"adversarial exploration", adversarial_exploration},
      {"exact end-to-end", exact_end_to_end},
      {"exact sample scaling", exact_scaling},
      {"robust l2/l2", robust_l2},
      {"sample dominance", sample_dominance},
      {"estimate error bound", estimate_bound},
      {"dense-core identities", dense_core},
  };
  std::set<int> only, known;
  bool in_known = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-fail") {
      in_known = true;
      continue;
    }
    (in_known ? known : only).insert(std::stoi(a));
  }
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = criteria[i].second();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool excused = !o.pass && known.count(id);
    std::printf("criterion %d %-24s %s  %s  [%.1fs]\n", id, criteria[i].first,
                o.pass ? "PASS" : (excused ? "FAIL (known)" : "FAIL"), o.detail.c_str(), secs);
    std::fflush(stdout);
    unexpected += !o.pass && !excused;
  }
  return unexpected ? 1 : 0;
}
