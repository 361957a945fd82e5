#pragma once

// Oracle-driven exploration of the FFT tree: the cubic frontier explorer and
// the backtracking explorer with geometrically shrinking budgets.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <vector>

#include "sfft/common.hpp"
#include "sfft/tree.hpp"

namespace sfft {

// full-depth leaf -> estimated value
using Found = std::map<NodeId, cplx>;

inline Found found_union(const Found& a, const Found& b) {
  Found out = a;
  for (auto& [k, v] : b)
    if (!out.emplace(k, v).second) throw std::logic_error("Found union with overlapping keys");
  return out;
}

inline std::size_t found_size(const Found& f) {
  std::size_t n = 0;
  for (auto& [k, v] : f) n += v != cplx(0, 0);
  return n;
}

// Persistent node set: each extension shares its parent's chunk.
class Excluded {
 public:
  Excluded() = default;

  template <class Range>
  Excluded with(const Range& nodes) const {
    Excluded e;
    auto c = std::make_shared<Chunk>();
    c->parent = head_;
    c->nodes.assign(std::begin(nodes), std::end(nodes));
    c->total = (head_ ? head_->total : 0) + c->nodes.size();
    e.head_ = std::move(c);
    return e;
  }
  Excluded with(NodeId v) const { return with(std::vector<NodeId>{v}); }

  template <class F>
  void for_each(F&& f) const {
    for (const Chunk* c = head_.get(); c; c = c->parent.get())
      for (NodeId v : c->nodes) f(v);
  }
  std::vector<NodeId> to_vector() const {
    std::vector<NodeId> out;
    for_each([&](NodeId v) { out.push_back(v); });
    return out;
  }
  std::size_t size() const { return head_ ? head_->total : 0; }

 private:
  struct Chunk {
    std::shared_ptr<const Chunk> parent;
    std::vector<NodeId> nodes;
    std::size_t total = 0;
  };
  std::shared_ptr<const Chunk> head_;
};

template <class O>
concept ExplorationOracle = requires(O& o, const Found& f, const Excluded& e, NodeId v, std::uint64_t b) {
  { o.dims() } -> std::convertible_to<const Dims&>;
  { o.zero_test(f, e, v, b) } -> std::convertible_to<bool>;
  { o.estimate(f, e, v) } -> std::convertible_to<cplx>;
};

// Leaves(v) ∩ Leaves(Excluded) = ∅, and every leaf outside v carries a zero
// residual (truth minus Found) or lies under Excluded.
inline bool is_isolated(const Found& found, const Excluded& excluded, NodeId v,
                        const std::map<NodeId, cplx>& truth) {
  bool overlap = false;
  excluded.for_each([&](NodeId e) { overlap = overlap || e.comparable(v); });
  if (overlap) return false;
  auto covered = [&](NodeId leaf) {
    bool c = false;
    excluded.for_each([&](NodeId e) { c = c || e.covers(leaf); });
    return c;
  };
  auto residual = [&](NodeId leaf) {
    auto t = truth.find(leaf);
    auto f = found.find(leaf);
    return (t == truth.end() ? cplx(0, 0) : t->second) - (f == found.end() ? cplx(0, 0) : f->second);
  };
  for (auto& [leaf, val] : truth)
    if (!v.covers(leaf) && residual(leaf) != cplx(0, 0) && !covered(leaf)) return false;
  for (auto& [leaf, val] : found)
    if (!v.covers(leaf) && residual(leaf) != cplx(0, 0) && !covered(leaf)) return false;
  return true;
}

// Ground-truth leaf values with truthful or adversarial answers.
class SyntheticOracle {
 public:
  enum class Mode { Truthful, Adversarial };

  struct Ledger {
    std::uint64_t zero_tests = 0;
    std::uint64_t estimates = 0;
    double cost = 0;  // abstract units of the assumed cost model
  };

  SyntheticOracle(const Dims& dims, std::map<NodeId, cplx> truth, Mode mode)
      : dims_(dims), truth_(std::move(truth)), mode_(mode) {
    for (auto& [leaf, v] : truth_)
      if (!is_full_leaf(leaf, dims_)) throw std::domain_error("truth keys must be full-depth leaves");
  }

  const Dims& dims() const { return dims_; }
  const Ledger& ledger() const { return ledger_; }
  const std::map<NodeId, cplx>& truth() const { return truth_; }

  bool zero_test(const Found& found, const Excluded& excluded, NodeId v, std::uint64_t b) {
    ++ledger_.zero_tests;
    const double w = weight_wrt_set(excluded.to_vector(), v, dims_);
    ledger_.cost += std::ldexp(1.0, static_cast<int>(w)) * b + static_cast<double>(found_size(found)) * b;
    const bool answer = residual_zero(found, v);
    if (mode_ == Mode::Truthful) return answer;
    if (!is_isolated(found, excluded, v, truth_)) return !answer;
    if (heavy_leaves(v) <= b) return answer;
    return true;  // over budget: claim emptiness
  }

  cplx estimate(const Found& found, const Excluded& excluded, NodeId leaf) {
    ++ledger_.estimates;
    const double w = weight_wrt_set(excluded.to_vector(), leaf, dims_);
    ledger_.cost += std::ldexp(1.0, static_cast<int>(w)) + static_cast<double>(found_size(found));
    auto it = truth_.find(leaf);
    const cplx val = it == truth_.end() ? cplx(0, 0) : it->second;
    if (mode_ == Mode::Truthful || is_isolated(found, excluded, leaf, truth_)) return val;
    return val + cplx(1.0 + static_cast<double>(leaf.prefix() % 7), -3.0);
  }

  std::size_t heavy_leaves(NodeId v) const {
    std::size_t c = 0;
    for (auto& [leaf, val] : truth_) c += v.covers(leaf) && val != cplx(0, 0);
    return c;
  }

 private:
  bool residual_zero(const Found& found, NodeId v) const {
    for (auto& [leaf, val] : truth_) {
      if (!v.covers(leaf)) continue;
      auto f = found.find(leaf);
      if (val - (f == found.end() ? cplx(0, 0) : f->second) != cplx(0, 0)) return false;
    }
    for (auto& [leaf, val] : found)
      if (v.covers(leaf) && !truth_.count(leaf) && val != cplx(0, 0)) return false;
    return true;
  }

  Dims dims_;
  std::map<NodeId, cplx> truth_;
  Mode mode_;
  Ledger ledger_;
};

namespace detail {

// Antichain of nodes under v kept as the leaves of the tree it spans with the
// root, so weights w.r.t. the set are tree weights.
class NodeFrontier {
 public:
  explicit NodeFrontier(const Dims& dims) : tree_(dims) {}
  bool empty() const { return set_.empty(); }
  std::size_t size() const { return set_.size(); }
  const std::set<NodeId>& nodes() const { return set_; }
  void insert(NodeId u) {
    if (set_.insert(u).second) tree_.add_path(u);
  }
  NodeId pop_min_weight() {
    NodeId best;
    int best_w = -1;
    for (NodeId u : set_) {
      int w = tree_.weight(u);
      if (best_w < 0 || w < best_w) {
        best_w = w;
        best = u;
      }
    }
    set_.erase(best);
    tree_.remove_leaf(best);
    return best;
  }

 private:
  SubTree tree_;
  std::set<NodeId> set_;
};

inline std::uint64_t step_cap(double x) { return ceil_u(x); }

}  // namespace detail

// Frontier explorer with budget b; returns {} when the step cap is exceeded.
template <ExplorationOracle O>
Found slow_exact_recovery(O& oracle, const Found& found, const Excluded& excluded, NodeId v,
                          std::uint64_t b) {
  const Dims& dims = oracle.dims();
  const std::uint64_t cap = detail::step_cap(6.0 * static_cast<double>(b) * dims.depth);
  detail::NodeFrontier frontier(dims);
  frontier.insert(v);
  std::uint64_t steps = 1;
  Found out;
  do {
    if (steps > cap) return {};
    NodeId z = frontier.pop_min_weight();
    ++steps;
    Excluded excl = excluded.with(frontier.nodes());
    Found fnd = found_union(found, out);
    if (is_full_leaf(z, dims)) {
      cplx val = oracle.estimate(fnd, excl, z);
      if (val != cplx(0, 0)) out[z] = val;
    } else if (!oracle.zero_test(fnd, excl, z, b)) {
      frontier.insert(z.left());
      frontier.insert(z.right());
    }
  } while (!frontier.empty());
  return out;
}

// alpha = 2^{-ceil(2 sqrt(log2 k * log2 log2 N))}, clamped to [2^{-ceil(log2 k)}, 1/2]
inline double default_alpha(std::uint64_t k, std::uint64_t N) {
  if (k < 1 || N < 4) throw std::domain_error("default_alpha needs k >= 1 and N >= 4");
  const double lk = std::log2(static_cast<double>(k));
  const double llN = std::log2(std::log2(static_cast<double>(N)));
  const double e = static_cast<double>(ceil_u(2.0 * std::sqrt(lk * llN)));
  const double lo = static_cast<double>(ceil_u(lk));
  const double ex = std::clamp(e, 1.0, std::max(1.0, lo));
  return std::ldexp(1.0, -static_cast<int>(ex));
}

struct ExploreStats {
  std::uint64_t calls = 0;
  std::uint64_t base_calls = 0;
  std::uint64_t requeued = 0;  // children re-added to S after a failed verification
};

// Backtracking exploration. The |Found_out| > s condition is evaluated only
// where the loop's until-clause sits, so a single iteration may overshoot.
template <ExplorationOracle O>
Found exact_recovery(O& oracle, const Found& found, const Excluded& excluded, NodeId v, std::uint64_t s,
                     std::uint64_t k, double alpha, ExploreStats* stats = nullptr) {
  if (!(alpha > 0 && alpha <= 0.5)) throw std::domain_error("alpha must lie in (0, 1/2]");
  const Dims& dims = oracle.dims();
  if (stats) ++stats->calls;
  if (static_cast<double>(s) * alpha <= 1.0) {
    if (stats) ++stats->base_calls;
    Found out = slow_exact_recovery(oracle, found, excluded, v, s);
    return found_size(out) <= s ? out : Found{};
  }
  const std::uint64_t cap = detail::step_cap(6.0 * dims.depth / alpha);
  Found out;
  detail::NodeFrontier S(dims);
  S.insert(v);
  std::uint64_t steps = 1;
  do {
    NodeId z = S.pop_min_weight();
    ++steps;
    Excluded excl = excluded.with(S.nodes());
    Found fnd = found_union(found, out);
    if (oracle.zero_test(fnd, excl, z, s)) continue;
    if (is_full_leaf(z, dims)) {
      cplx val = oracle.estimate(fnd, excl, z);
      if (val != cplx(0, 0)) out[z] = val;
      continue;
    }
    const std::uint64_t used = found_size(fnd);
    const std::uint64_t room = k > used ? k - used : 0;
    std::uint64_t s_desc = std::min<std::uint64_t>(
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(alpha * s))), room);
    s_desc = std::max<std::uint64_t>(s_desc, 1);
    const NodeId zl = z.left(), zr = z.right();
    Excluded excl_l = excl.with(zr), excl_r = excl.with(zl);
    Found fl = exact_recovery(oracle, fnd, excl_l, zl, s_desc, k, alpha, stats);
    Found fr = exact_recovery(oracle, fnd, excl_r, zr, s_desc, k, alpha, stats);
    const bool zero_l = oracle.zero_test(found_union(fnd, fl), excl_l, zl, s);
    const bool zero_r = oracle.zero_test(found_union(fnd, fr), excl_r, zr, s);
    if (zero_l) out = found_union(out, fl);
    else {
      S.insert(zl);
      if (stats) ++stats->requeued;
    }
    if (zero_r) out = found_union(out, fr);
    else {
      S.insert(zr);
      if (stats) ++stats->requeued;
    }
  } while (!(S.empty() || steps > cap || found_size(out) > s));
  if (S.empty() && steps <= cap && found_size(out) <= s) return out;
  return {};
}

}  // namespace sfft
