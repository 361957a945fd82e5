#include <gtest/gtest.h>

#include <random>

#include "sfft/tree.hpp"

using namespace sfft;

namespace {

// random root-containing subtree: union of paths to random full-depth leaves,
// optionally cut short at random depths
SubTree random_tree(const Dims& dims, std::mt19937_64& rng, std::size_t paths) {
  SubTree T(dims);
  for (std::size_t i = 0; i < paths; ++i) {
    const std::uint32_t dep = 1 + static_cast<std::uint32_t>(rng() % dims.depth);
    T.add_path(NodeId::make(dep, rng() & NodeId::low_mask(dep)));
  }
  return T;
}

}  // namespace

TEST(Dims, RejectsBadShapes) {
  EXPECT_THROW(Dims::make(6, 1), std::domain_error);
  EXPECT_THROW(Dims::make(1, 1), std::domain_error);
  EXPECT_THROW(Dims::make(4, 0), std::domain_error);
  EXPECT_THROW(Dims::make(1 << 20, 3), std::domain_error);
  const Dims d = Dims::make(16, 3);
  EXPECT_EQ(d.depth, 12u);
  EXPECT_EQ(d.N, 4096u);
}

TEST(Dims, IndexRoundTripAndLastCoordinateLeastSignificant) {
  const Dims d = Dims::make(8, 3);
  EXPECT_EQ(d.index({0, 0, 1}), 1u);
  EXPECT_EQ(d.index({1, 0, 0}), 64u);
  for (std::uint64_t lin = 0; lin < d.N; ++lin) EXPECT_EQ(d.index(d.freq(lin)), lin);
}

TEST(Dims, SwarArithmeticMatchesPerCoordinateLoop) {
  std::mt19937_64 rng(7);
  for (auto [n, dd] : {std::pair{4, 3}, {8, 2}, {64, 2}, {2, 5}, {1024, 1}}) {
    const Dims d = Dims::make(n, dd);
    for (int it = 0; it < 2000; ++it) {
      const std::uint64_t a = rng() & (d.N - 1), b = rng() & (d.N - 1);
      FreqVec s(d.d), p(d.d);
      std::uint64_t dot = 0;
      for (std::uint32_t c = 0; c < d.d; ++c) {
        s[c] = (d.coord(a, c) + d.n - d.coord(b, c)) % d.n;
        p[c] = (d.coord(a, c) + d.coord(b, c)) % d.n;
        dot += std::uint64_t{d.coord(a, c)} * d.coord(b, c);
      }
      ASSERT_EQ(d.sub(a, b), d.index(s));
      ASSERT_EQ(d.add(a, b), d.index(p));
      ASSERT_EQ(d.dot_mod(a, b), dot % d.n);
    }
  }
}

TEST(Label, FourByFourTree) {
  const Dims d = Dims::make(4, 2);
  EXPECT_EQ(label(NodeId::make(1, 1), d), (FreqVec{0, 1}));
  EXPECT_EQ(label(NodeId::make(1, 0), d), (FreqVec{0, 0}));
  NodeId v = NodeId::root();
  for (int i = 0; i < 4; ++i) v = v.left();
  EXPECT_EQ(label(v, d), (FreqVec{3, 3}));
  EXPECT_EQ(label(NodeId::root(), d), (FreqVec{0, 0}));
}

TEST(Label, LeavesEnumerateGridBijectively) {
  for (auto [n, dd] : {std::pair{4, 2}, {8, 1}, {2, 4}, {4, 3}}) {
    const Dims d = Dims::make(n, dd);
    std::set<std::uint64_t> seen;
    for (std::uint64_t p = 0; p < d.N; ++p) seen.insert(d.index(label(NodeId::make(d.depth, p), d)));
    EXPECT_EQ(seen.size(), d.N);
  }
}

TEST(Label, RefinementOrderPerRules) {
  // step L decides bit 2^(L mod logn) of coordinate d-1-floor(L/logn)
  const Dims d = Dims::make(8, 3);
  for (std::uint32_t L = 0; L < d.depth; ++L) {
    const NodeId v = NodeId::make(L, 0).left();
    FreqVec want(d.d, 0);
    want[d.d - 1 - L / d.logn] = 1u << (L % d.logn);
    EXPECT_EQ(label(v, d), want) << "L=" << L;
  }
}

TEST(Cone, Containment) {
  const Dims d = Dims::make(4, 2);
  for (std::uint64_t f = 0; f < d.N; ++f) EXPECT_TRUE(cone_contains(NodeId::root(), f, d));
  const NodeId left = NodeId::root().left();
  EXPECT_TRUE(cone_contains(left, FreqVec{0, 1}, d));
  EXPECT_FALSE(cone_contains(left, FreqVec{0, 2}, d));
  for (std::uint64_t f = 0; f < d.N; ++f) EXPECT_EQ(cone_contains(left, f, d), d.freq(f)[1] % 2 == 1);
  const NodeId leaf = leaf_of(d.index({2, 3}), d);
  for (std::uint64_t f = 0; f < d.N; ++f) EXPECT_EQ(cone_contains(leaf, f, d), f == d.index({2, 3}));
}

TEST(Cone, AgreesWithDescendantEnumeration) {
  const Dims d = Dims::make(4, 3);
  std::mt19937_64 rng(3);
  for (int it = 0; it < 50; ++it) {
    const std::uint32_t dep = static_cast<std::uint32_t>(rng() % (d.depth + 1));
    const NodeId v = NodeId::make(dep, rng() & NodeId::low_mask(dep));
    std::set<std::uint64_t> desc;
    std::vector<NodeId> st{v};
    while (!st.empty()) {
      NodeId u = st.back();
      st.pop_back();
      if (is_full_leaf(u, d)) desc.insert(label_index(u, d));
      else {
        st.push_back(u.left());
        st.push_back(u.right());
      }
    }
    for (std::uint64_t f = 0; f < d.N; ++f) ASSERT_EQ(cone_contains(v, f, d), desc.count(f) == 1);
  }
}

TEST(Children, RootAndRoundTrip) {
  const Dims d = Dims::make(16, 2);
  auto [l, r] = children(NodeId::root(), d);
  EXPECT_EQ(l, NodeId::make(1, 1));
  EXPECT_EQ(r, NodeId::make(1, 0));
  EXPECT_EQ(parent(l), NodeId::root());
  EXPECT_THROW(children(NodeId::make(d.depth, 0), d), std::domain_error);
  EXPECT_THROW(parent(NodeId::root()), std::domain_error);
  std::mt19937_64 rng(11);
  for (int it = 0; it < 1000; ++it) {
    const std::uint32_t dep = static_cast<std::uint32_t>(rng() % d.depth);
    const NodeId v = NodeId::make(dep, rng() & NodeId::low_mask(dep));
    auto [a, b] = children(v, d);
    ASSERT_EQ(parent(a), v);
    ASSERT_EQ(parent(b), v);
    ASSERT_EQ(a.sibling(), b);
    ASSERT_EQ(label(b, d), label(v, d));
  }
}

TEST(SplittingTree, TwoPointsInOneDimension) {
  const Dims d = Dims::make(4, 1);
  const SubTree T = splitting_tree({{0}, {2}}, d);
  EXPECT_EQ(T.size(), 4u);
  EXPECT_TRUE(T.contains(NodeId::make(1, 0)));
  EXPECT_FALSE(T.contains(NodeId::make(1, 1)));
  ASSERT_EQ(T.leaves().size(), 2u);
  for (NodeId u : T.leaves()) {
    EXPECT_EQ(u.depth(), 2u);
    EXPECT_EQ(T.weight(u), 1);
    EXPECT_EQ(T.anc_levels(u), (std::vector<std::uint32_t>{1}));
  }
  std::set<std::uint64_t> labels;
  for (NodeId u : T.leaves()) labels.insert(label_index(u, d));
  EXPECT_EQ(labels, (std::set<std::uint64_t>{0, 2}));
  EXPECT_THROW(splitting_tree({}, d), std::domain_error);
}

TEST(SplittingTree, SingletonIsPathAndLeafCountMatches) {
  const Dims d = Dims::make(8, 2);
  const SubTree P = splitting_tree({{5, 3}}, d);
  EXPECT_EQ(P.size(), d.depth + 1);
  for (NodeId u : P.nodes()) EXPECT_EQ(P.weight(u), 0);
  std::mt19937_64 rng(5);
  for (int it = 0; it < 100; ++it) {
    std::set<std::uint64_t> S;
    const std::size_t k = 1 + rng() % 20;
    while (S.size() < k) S.insert(rng() & (d.N - 1));
    const SubTree T = splitting_tree_idx({S.begin(), S.end()}, d);
    ASSERT_EQ(T.leaves().size(), S.size());
    for (NodeId u : T.nodes()) {
      bool hit = false;
      for (auto f : S) hit = hit || cone_contains(u, f, d);
      ASSERT_TRUE(hit);
    }
  }
}

TEST(Weight, BoundedByDepth) {
  const Dims d = Dims::make(8, 2);
  std::mt19937_64 rng(13);
  for (int it = 0; it < 100; ++it) {
    const SubTree T = random_tree(d, rng, 1 + rng() % 30);
    for (NodeId u : T.nodes()) {
      ASSERT_LE(T.weight(u), static_cast<int>(u.depth()));
      ASSERT_EQ(T.anc_levels(u).size(), static_cast<std::size_t>(T.weight(u)));
    }
  }
}

TEST(WeightWrtSet, TrivialCases) {
  const Dims d = Dims::make(8, 2);
  const NodeId v = NodeId::make(4, 5);
  EXPECT_EQ(weight_wrt_set(std::vector<NodeId>{}, v, d), 0);
  EXPECT_EQ(weight_wrt_set(std::vector<NodeId>{v}, v, d), 0);
  EXPECT_EQ(weight_wrt_set(std::vector<NodeId>{v.sibling()}, v, d), 1);
}

TEST(WeightWrtSet, Subadditive) {
  const Dims d = Dims::make(16, 2);
  std::mt19937_64 rng(17);
  auto rnd_node = [&] {
    const std::uint32_t dep = 1 + static_cast<std::uint32_t>(rng() % d.depth);
    return NodeId::make(dep, rng() & NodeId::low_mask(dep));
  };
  for (int it = 0; it < 1000; ++it) {
    std::vector<NodeId> s1, s2;
    for (std::size_t i = rng() % 6; i > 0; --i) s1.push_back(rnd_node());
    for (std::size_t i = rng() % 6; i > 0; --i) s2.push_back(rnd_node());
    const NodeId v = rnd_node();
    std::vector<NodeId> u = s1;
    u.insert(u.end(), s2.begin(), s2.end());
    ASSERT_LE(weight_wrt_set(u, v, d), weight_wrt_set(s1, v, d) + weight_wrt_set(s2, v, d));
  }
}

TEST(Kraft, ExamplesAndEquality) {
  const Dims d = Dims::make(4, 1);
  SubTree T(d);
  T.add_path(NodeId::make(1, 1));
  T.add_path(NodeId::make(2, 0));
  T.add_path(NodeId::make(2, 2));
  std::vector<int> w;
  for (NodeId u : T.leaves()) w.push_back(T.weight(u));
  std::sort(w.begin(), w.end());
  EXPECT_EQ(w, (std::vector<int>{1, 2, 2}));
  EXPECT_TRUE(kraft_mass(T, T.leaves()) == Dyadic::one());
  EXPECT_TRUE(kraft_mass(T, std::vector<NodeId>{}) == Dyadic());
  EXPECT_THROW(kraft_mass(T, std::vector<NodeId>{NodeId::root()}), std::domain_error);

  std::mt19937_64 rng(19);
  const Dims d2 = Dims::make(32, 2);
  for (int it = 0; it < 300; ++it) {
    const SubTree R = random_tree(d2, rng, 1 + rng() % 60);
    ASSERT_TRUE(kraft_mass(R, R.leaves()) == Dyadic::one());
  }
}

TEST(MinWeightLeaf, AveragingBoundAndTies) {
  const Dims d = Dims::make(16, 2);
  std::mt19937_64 rng(23);
  for (int it = 0; it < 300; ++it) {
    const SubTree T = random_tree(d, rng, 1 + rng() % 40);
    const NodeId u = min_weight_leaf(T);
    ASSERT_TRUE(T.is_leaf(u));
    ASSERT_LE(T.weight(u), static_cast<int>(ilog2(T.leaves().size())));
  }
  SubTree P(d);
  P.add_path(NodeId::make(3, 6));
  EXPECT_EQ(min_weight_leaf(P), NodeId::make(3, 6));
  SubTree S(d);
  S.add_path(NodeId::make(1, 1));
  S.add_path(NodeId::make(1, 0));
  EXPECT_EQ(min_weight_leaf(S), NodeId::make(1, 0));
  EXPECT_EQ(min_weight_leaf(S, {NodeId::make(1, 0)}), NodeId::make(1, 1));
  EXPECT_THROW(min_weight_leaf(S, {NodeId::make(1, 0), NodeId::make(1, 1)}), std::domain_error);
}

TEST(ExtractCheapSubset, Examples) {
  const Dims d = Dims::make(4, 1);
  SubTree T(d);
  T.add_path(NodeId::make(1, 0));
  T.add_path(NodeId::make(1, 1));
  const auto L = extract_cheap_subset(T, T.leaves());
  ASSERT_EQ(L.size(), 1u);
  EXPECT_EQ(L[0], NodeId::make(1, 0));

  SubTree P(d);
  P.add_path(NodeId::make(2, 3));
  EXPECT_EQ(extract_cheap_subset(P, P.leaves()), (std::vector<NodeId>{NodeId::make(2, 3)}));

  SubTree Q(d);
  Q.add_path(NodeId::make(2, 0));
  Q.add_path(NodeId::make(2, 2));
  Q.add_path(NodeId::make(1, 1));
  EXPECT_THROW(extract_cheap_subset(Q, std::vector<NodeId>{NodeId::make(2, 0)}), std::domain_error);
}

TEST(ExtractCheapSubset, GuaranteeOnRandomTrees) {
  const Dims d = Dims::make(64, 2);
  std::mt19937_64 rng(29);
  for (int it = 0; it < 300; ++it) {
    const SubTree T = random_tree(d, rng, 1 + rng() % 80);
    std::vector<NodeId> S(T.leaves().begin(), T.leaves().end());
    std::shuffle(S.begin(), S.end(), rng);
    while (S.size() > 1 && rng() % 3 == 0) {
      std::vector<NodeId> trial(S.begin(), S.end() - 1);
      if (kraft_mass(T, trial) < Dyadic::half()) break;
      S = trial;
    }
    const auto L = extract_cheap_subset(T, S);
    ASSERT_FALSE(L.empty());
    int wmax = 0;
    for (NodeId u : L) wmax = std::max(wmax, T.weight(u));
    ASSERT_GE(L.size() * (8.0 + 4.0 * std::log2(static_cast<double>(S.size()))), std::ldexp(1.0, wmax));
  }
}

TEST(SubTree, RemoveLeafPrunesToStop) {
  const Dims d = Dims::make(4, 1);
  SubTree T(d);
  T.add_path(NodeId::make(2, 0));
  T.add_path(NodeId::make(2, 2));
  T.remove_leaf(NodeId::make(2, 2));
  EXPECT_EQ(T.leaves().size(), 1u);
  EXPECT_TRUE(T.is_leaf(NodeId::make(2, 0)));
  T.remove_leaf(NodeId::make(2, 0), NodeId::make(1, 0));
  EXPECT_TRUE(T.is_leaf(NodeId::make(1, 0)));
}
