#pragma once

// Full FFT computation tree over [n]^d, subtrees, weights and Kraft utilities.
//
// A node at depth L fixes L bits of its frequency cone. The step from depth L
// to L+1 decides bit (L mod logn) of coordinate d-1-(L / logn) (0-based), so
// the last coordinate is refined first. With frequencies linearized row-major
// (last coordinate least significant) the bit decided at step L is exactly
// bit L of the linear index, and a node's prefix is the low `depth` bits of
// every frequency in its cone.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sfft/common.hpp"

namespace sfft {

struct Dims {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::uint32_t logn = 0;
  std::uint32_t depth = 0;  // D = d * logn
  std::uint64_t N = 0;

  static constexpr std::uint32_t kMaxDepth = 58;

  static Dims make(std::int64_t n, std::int64_t d) {
    if (n < 2 || !is_pow2(static_cast<std::uint64_t>(n)))
      throw std::domain_error("n must be a power of two >= 2");
    if (d < 1) throw std::domain_error("d must be >= 1");
    Dims r;
    r.n = static_cast<std::uint32_t>(n);
    r.d = static_cast<std::uint32_t>(d);
    r.logn = ilog2(r.n);
    if (static_cast<std::uint64_t>(r.logn) * r.d > kMaxDepth)
      throw std::domain_error("tree depth d*log2(n) exceeds 58");
    r.depth = r.logn * r.d;
    r.N = std::uint64_t{1} << r.depth;
    fill_masks(r);
    return r;
  }

  std::uint32_t shift(std::uint32_t c) const { return (d - 1 - c) * logn; }
  std::uint32_t coord(std::uint64_t lin, std::uint32_t c) const {
    return static_cast<std::uint32_t>((lin >> shift(c)) & (n - 1));
  }

  std::uint64_t index(const FreqVec& f) const {
    if (f.size() != d) throw std::domain_error("frequency has wrong dimension");
    std::uint64_t lin = 0;
    for (std::uint32_t c = 0; c < d; ++c) {
      if (f[c] < 0 || f[c] >= static_cast<std::int64_t>(n))
        throw std::domain_error("frequency component out of range");
      lin |= static_cast<std::uint64_t>(f[c]) << shift(c);
    }
    return lin;
  }

  FreqVec freq(std::uint64_t lin) const {
    FreqVec f(d);
    for (std::uint32_t c = 0; c < d; ++c) f[c] = coord(lin, c);
    return f;
  }

  // Coordinate-wise (a - b) mod n and (a + b) mod n on linear indices.
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
    return (((a | high_) - (b & ~high_)) ^ ((a ^ ~b) & high_)) & all_;
  }
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    return (((a & ~high_) + (b & ~high_)) ^ ((a ^ b) & high_)) & all_;
  }
  std::uint64_t neg(std::uint64_t a) const { return sub(0, a); }

  // sum_c a_c * b_c mod n
  std::uint32_t dot_mod(std::uint64_t a, std::uint64_t b) const {
    std::uint64_t acc = 0;
    for (std::uint32_t c = 0; c < d; ++c) acc += std::uint64_t{coord(a, c)} * coord(b, c);
    return static_cast<std::uint32_t>(acc & (n - 1));
  }

  std::uint64_t high_mask() const { return high_; }

  bool operator==(const Dims& o) const { return n == o.n && d == o.d; }

 private:
  std::uint64_t high_ = 0;  // top bit of every coordinate field
  std::uint64_t all_ = 0;

  static void fill_masks(Dims& r) {
    r.all_ = r.N - 1;
    r.high_ = 0;
    for (std::uint32_t c = 0; c < r.d; ++c) r.high_ |= std::uint64_t{1} << (c * r.logn + r.logn - 1);
  }
};

class NodeId {
 public:
  static constexpr std::uint32_t kPrefixBits = 58;
  static constexpr std::uint64_t kPrefixMask = (std::uint64_t{1} << kPrefixBits) - 1;

  constexpr NodeId() = default;

  static NodeId make(std::uint32_t depth, std::uint64_t prefix) {
    if (depth > kPrefixBits) throw std::domain_error("node depth out of range");
    if (depth < 64 && (prefix >> depth) != 0) throw std::domain_error("prefix >= 2^depth");
    NodeId v;
    v.bits_ = (std::uint64_t{depth} << kPrefixBits) | prefix;
    return v;
  }
  static constexpr NodeId root() { return NodeId{}; }

  std::uint32_t depth() const { return static_cast<std::uint32_t>(bits_ >> kPrefixBits); }
  std::uint64_t prefix() const { return bits_ & kPrefixMask; }
  std::uint64_t bits() const { return bits_; }
  bool is_root() const { return bits_ == 0; }

  NodeId left() const { return make_raw(depth() + 1, prefix() | (std::uint64_t{1} << depth())); }
  NodeId right() const { return make_raw(depth() + 1, prefix()); }
  NodeId sibling() const {
    if (is_root()) throw std::domain_error("root has no sibling");
    return make_raw(depth(), prefix() ^ (std::uint64_t{1} << (depth() - 1)));
  }
  NodeId parent() const {
    if (is_root()) throw std::domain_error("root has no parent");
    return make_raw(depth() - 1, prefix() & low_mask(depth() - 1));
  }
  // ancestor of this node at the given depth (depth <= this->depth())
  NodeId ancestor_at(std::uint32_t dep) const { return make_raw(dep, prefix() & low_mask(dep)); }
  bool is_left_child() const { return !is_root() && ((prefix() >> (depth() - 1)) & 1); }

  // true iff this node is `other` or one of its ancestors
  bool covers(NodeId other) const {
    return depth() <= other.depth() && (other.prefix() & low_mask(depth())) == prefix();
  }
  bool comparable(NodeId other) const { return covers(other) || other.covers(*this); }

  static std::uint64_t low_mask(std::uint32_t dep) {
    return dep >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << dep) - 1;
  }

  // depth-major, then prefix
  auto operator<=>(const NodeId&) const = default;

 private:
  static NodeId make_raw(std::uint32_t depth, std::uint64_t prefix) {
    NodeId v;
    v.bits_ = (std::uint64_t{depth} << kPrefixBits) | prefix;
    return v;
  }
  std::uint64_t bits_ = 0;
};

struct NodeHash {
  std::size_t operator()(NodeId v) const { return std::hash<std::uint64_t>{}(mix_seed(v.bits())); }
};

inline void check_node(NodeId v, const Dims& dims) {
  if (v.depth() > dims.depth) throw std::domain_error("node deeper than the tree");
}

inline bool is_full_leaf(NodeId v, const Dims& dims) { return v.depth() == dims.depth; }

inline std::uint64_t label_index(NodeId v, const Dims& dims) {
  check_node(v, dims);
  return v.prefix();
}

inline FreqVec label(NodeId v, const Dims& dims) { return dims.freq(label_index(v, dims)); }

inline NodeId leaf_of(std::uint64_t lin, const Dims& dims) {
  if (lin >= dims.N) throw std::domain_error("frequency index out of range");
  return NodeId::make(dims.depth, lin);
}

inline bool cone_contains(NodeId v, std::uint64_t lin, const Dims& dims) {
  check_node(v, dims);
  return (lin & NodeId::low_mask(v.depth())) == v.prefix();
}

inline bool cone_contains(NodeId v, const FreqVec& f, const Dims& dims) {
  return cone_contains(v, dims.index(f), dims);
}

inline std::pair<NodeId, NodeId> children(NodeId v, const Dims& dims) {
  check_node(v, dims);
  if (v.depth() >= dims.depth) throw std::domain_error("full-depth leaf has no children");
  return {v.left(), v.right()};
}

inline NodeId parent(NodeId v) { return v.parent(); }

// Power-of-two-denominator rational, stored as numerator over 2^58.
class Dyadic {
 public:
  static constexpr std::uint32_t kShift = NodeId::kPrefixBits;

  Dyadic() = default;
  static Dyadic pow2_neg(std::uint32_t w) {
    Dyadic r;
    r.num_ = static_cast<unsigned __int128>(1) << (kShift - w);
    return r;
  }
  static Dyadic one() { return pow2_neg(0); }
  static Dyadic half() { return pow2_neg(1); }

  Dyadic& operator+=(const Dyadic& o) {
    num_ += o.num_;
    return *this;
  }
  friend Dyadic operator+(Dyadic a, const Dyadic& b) { return a += b; }
  auto operator<=>(const Dyadic&) const = default;

  // reduced numerator and log2 of the reduced denominator
  std::pair<std::uint64_t, std::uint32_t> reduced() const {
    if (num_ == 0) return {0, 0};
    unsigned __int128 n = num_;
    std::uint32_t s = kShift;
    while (s > 0 && (n & 1) == 0) {
      n >>= 1;
      --s;
    }
    return {static_cast<std::uint64_t>(n), s};
  }
  double to_double() const { return std::ldexp(static_cast<double>(num_), -static_cast<int>(kShift)); }

 private:
  unsigned __int128 num_ = 0;
};

class SubTree {
 public:
  explicit SubTree(const Dims& dims) : dims_(dims) {
    kids_.emplace(NodeId::root(), 0);
    leaves_.insert(NodeId::root());
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return kids_.size(); }
  bool contains(NodeId v) const { return kids_.count(v) != 0; }
  bool is_leaf(NodeId v) const {
    auto it = kids_.find(v);
    return it != kids_.end() && it->second == 0;
  }
  const std::set<NodeId>& leaves() const { return leaves_; }

  bool has_left(NodeId v) const { return child_mask(v) & kLeft; }
  bool has_right(NodeId v) const { return child_mask(v) & kRight; }

  // Adds v and every missing ancestor.
  void add_path(NodeId v) {
    check_node(v, dims_);
    NodeId cur = v;
    if (contains(cur)) return;
    kids_.emplace(cur, 0);
    leaves_.insert(cur);
    while (!cur.is_root()) {
      NodeId p = cur.parent();
      auto it = kids_.find(p);
      std::uint8_t bit = cur.is_left_child() ? kLeft : kRight;
      if (it != kids_.end()) {
        if (it->second == 0) leaves_.erase(p);
        it->second |= bit;
        return;
      }
      kids_.emplace(p, bit);
      cur = p;
    }
  }

  void merge(const SubTree& o) {
    if (!(o.dims_ == dims_)) throw std::domain_error("dims mismatch");
    for (NodeId l : o.leaves_) add_path(l);
  }

  // Removes leaf v, then every ancestor left childless, stopping at `stop`
  // (which is never removed). The root is never removed.
  void remove_leaf(NodeId v, NodeId stop = NodeId::root()) {
    if (!is_leaf(v)) throw std::domain_error("remove_leaf: not a leaf of the tree");
    if (!stop.covers(v)) throw std::domain_error("remove_leaf: stop is not an ancestor");
    NodeId cur = v;
    while (cur != stop && !cur.is_root()) {
      if (kids_.at(cur) != 0) break;
      kids_.erase(cur);
      leaves_.erase(cur);
      NodeId p = cur.parent();
      auto& m = kids_.at(p);
      m &= static_cast<std::uint8_t>(~(cur.is_left_child() ? kLeft : kRight));
      if (m == 0) leaves_.insert(p);
      cur = p;
    }
  }

  int weight(NodeId v) const {
    if (!contains(v)) throw std::domain_error("weight: node not in tree");
    int w = 0;
    NodeId cur = v;
    while (!cur.is_root()) {
      cur = cur.parent();
      if (kids_.find(cur)->second == kBoth) ++w;
    }
    return w;
  }

  // Depths of the two-child ancestors of v, ascending.
  std::vector<std::uint32_t> anc_levels(NodeId v) const {
    if (!contains(v)) throw std::domain_error("anc_levels: node not in tree");
    std::vector<std::uint32_t> out;
    NodeId cur = v;
    while (!cur.is_root()) {
      cur = cur.parent();
      if (kids_.find(cur)->second == kBoth) out.push_back(cur.depth());
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    out.reserve(kids_.size());
    for (auto& [v, m] : kids_) out.push_back(v);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::uint8_t kRight = 1, kLeft = 2, kBoth = 3;
  std::uint8_t child_mask(NodeId v) const {
    auto it = kids_.find(v);
    return it == kids_.end() ? 0 : it->second;
  }

  Dims dims_;
  std::unordered_map<NodeId, std::uint8_t, NodeHash> kids_;
  std::set<NodeId> leaves_;
};

inline SubTree splitting_tree_idx(const std::vector<std::uint64_t>& S, const Dims& dims) {
  if (S.empty()) throw std::domain_error("splitting tree of an empty set");
  SubTree t(dims);
  for (auto lin : S) t.add_path(leaf_of(lin, dims));
  return t;
}

inline SubTree splitting_tree(const std::vector<FreqVec>& S, const Dims& dims) {
  std::vector<std::uint64_t> idx;
  idx.reserve(S.size());
  for (auto& f : S) idx.push_back(dims.index(f));
  return splitting_tree_idx(idx, dims);
}

inline int weight(const SubTree& T, NodeId v) { return T.weight(v); }
inline std::vector<std::uint32_t> anc_levels(const SubTree& T, NodeId v) { return T.anc_levels(v); }

// w_S(v): weight of v in the minimal subtree spanning S, v and the root.
template <class Range>
int weight_wrt_set(const Range& S, NodeId v, const Dims& dims) {
  SubTree t(dims);
  for (NodeId u : S) t.add_path(u);
  t.add_path(v);
  return t.weight(v);
}

template <class Range>
Dyadic kraft_mass(const SubTree& T, const Range& S) {
  Dyadic m;
  for (NodeId u : S) {
    if (!T.is_leaf(u)) throw std::domain_error("kraft_mass: node is not a leaf of T");
    m += Dyadic::pow2_neg(static_cast<std::uint32_t>(T.weight(u)));
  }
  return m;
}

// Eligible leaf of minimum weight; ties go to smaller depth, then smaller prefix.
inline NodeId min_weight_leaf(const SubTree& T, const std::set<NodeId>& excluded_leaves = {}) {
  NodeId best;
  int best_w = std::numeric_limits<int>::max();
  for (NodeId u : T.leaves()) {  // ordered by (depth, prefix)
    if (excluded_leaves.count(u)) continue;
    int w = T.weight(u);
    if (w < best_w) {
      best_w = w;
      best = u;
    }
  }
  if (best_w == std::numeric_limits<int>::max()) throw std::domain_error("no eligible leaf");
  return best;
}

// Greedy cheap batch: grow L by ascending weight until
// |L| * (8 + 4 log2 |S|) >= max_{v in L} 2^{w_T(v)}.
template <class Range>
std::vector<NodeId> extract_cheap_subset(const SubTree& T, const Range& S) {
  std::vector<std::pair<int, NodeId>> order;
  for (NodeId u : S) order.emplace_back(T.weight(u), u);
  if (order.empty()) throw std::domain_error("extract_cheap_subset: empty set");
  if (kraft_mass(T, S) < Dyadic::half())
    throw std::domain_error("extract_cheap_subset: Kraft mass below 1/2");
  std::sort(order.begin(), order.end());
  const double per = 8.0 + 4.0 * std::log2(static_cast<double>(order.size()));
  std::vector<NodeId> L;
  double max_cost = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (static_cast<double>(L.size()) * per < max_cost && i < order.size()) {
    L.push_back(order[i].second);
    double c = std::ldexp(1.0, order[i].first);
    max_cost = L.size() == 1 ? c : std::max(max_cost, c);
    ++i;
  }
  return L;
}

}  // namespace sfft
