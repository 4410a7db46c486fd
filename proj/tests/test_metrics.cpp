#include "unishare/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "unishare/rng.hpp"

using namespace unishare;

namespace {

// O(n^2) pairwise-comparison AUC, straight from the probability definition.
double auc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double credit = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j])
        credit += 1.0;
      else if (s[i] == s[j])
        credit += 0.5;
    }
  }
  return credit / static_cast<double>(pairs);
}

struct RankOracle {
  double recall, ndcg, mrr;
};

// Definitional recall/NDCG/MRR: rank by score descending (stable), gain 1,
// discount 1/log2(rank+1) with log2 spelled as log/log(2) on purpose.
RankOracle rank_oracle(const std::vector<double>& s, const std::vector<int>& y, int k) {
  std::vector<int> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return s[a] > s[b]; });
  int relevant = 0;
  for (int v : y) relevant += (v != 0);
  RankOracle o{0.0, 0.0, 0.0};
  double dcg = 0.0, idcg = 0.0;
  int hits = 0;
  for (int r = 1; r <= static_cast<int>(idx.size()) && r <= k; ++r)
    if (y[idx[r - 1]] != 0) {
      ++hits;
      dcg += std::log(2.0) / std::log(r + 1.0);
    }
  for (int r = 1; r <= std::min(k, relevant); ++r) idcg += std::log(2.0) / std::log(r + 1.0);
  o.recall = double(hits) / relevant;
  o.ndcg = dcg / idcg;
  for (std::size_t r = 0; r < idx.size(); ++r)
    if (y[idx[r]] != 0) {
      o.mrr = 1.0 / double(r + 1);
      break;
    }
  return o;
}

// Instance generator: sizes up to `max_n`, coin-flip between continuous and
// heavily tied discrete scores, both classes guaranteed.
void random_instance(Rng& rng, int max_n, std::vector<double>& s, std::vector<int>& y) {
  int n = 2 + rng.uniform_int(max_n - 2);
  s.resize(n);
  y.resize(n);
  bool discrete = rng.bernoulli(0.5);
  for (int i = 0; i < n; ++i) {
    s[i] = discrete ? rng.uniform_int(5) / 4.0 : rng.uniform01();
    y[i] = rng.bernoulli(0.3) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
}

}  // namespace

TEST_CASE("auc hand values") {
  CHECK(auc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(auc({0.1, 0.9}, {1, 0}) == 0.0);
  CHECK(auc({0.4, 0.4, 0.4}, {1, 0, 1}) == 0.5);
  CHECK(auc({0.2, 0.8, 0.5, 0.5}, {0, 1, 1, 0}) == Catch::Approx(0.875).margin(1e-15));
  CHECK_THROWS_AS(auc({0.5, 0.6}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.5, 0.1}, {1}), std::invalid_argument);
}

TEST_CASE("auc matches the pairwise oracle on random instances") {
  Rng rng(2024);
  std::vector<double> s;
  std::vector<int> y;
  for (int rep = 0; rep < 150; ++rep) {
    random_instance(rng, 500, s, y);
    CHECK(auc(s, y) == Catch::Approx(auc_oracle(s, y)).margin(1e-12));
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(77);
  std::vector<double> s(60);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    s[i] = rng.uniform_int(65) / 64.0;  // dyadic grid: affine maps stay exact
    y[i] = rng.bernoulli(0.4) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  double base = auc(s, y);
  std::vector<double> t(60);
  for (int i = 0; i < 60; ++i) t[i] = 2.0 * s[i] + 1.0;
  CHECK(auc(t, y) == base);
  for (int i = 0; i < 60; ++i) t[i] = s[i] / 4.0 - 3.0;
  CHECK(auc(t, y) == base);
}

TEST_CASE("gauc hand values and bookkeeping") {
  // one eligible group -> its auc
  CHECK(gauc({0.9, 0.1}, {1, 0}, {7, 7}).value == 1.0);
  // two groups with forced aucs 1.0 and 0.0 -> 0.5
  GaucResult two = gauc({0.9, 0.1, 0.2, 0.7}, {1, 0, 1, 0}, {1, 1, 2, 2});
  CHECK(two.value == 0.5);
  CHECK(two.used == 2);
  CHECK(two.skipped == 0);
  // single-class group skipped and counted
  GaucResult skip = gauc({0.9, 0.1, 0.8, 0.6}, {1, 0, 1, 1}, {1, 1, 2, 2});
  CHECK(skip.value == 1.0);
  CHECK(skip.used == 1);
  CHECK(skip.skipped == 1);
  CHECK_THROWS_AS(gauc({0.5, 0.6}, {1, 1}, {1, 1}), std::invalid_argument);
}

TEST_CASE("gauc matches the per-group oracle") {
  Rng rng(501);
  for (int rep = 0; rep < 120; ++rep) {
    int n = 20 + rng.uniform_int(480);
    std::vector<double> s(n);
    std::vector<int> y(n), g(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.bernoulli(0.5) ? rng.uniform_int(4) / 3.0 : rng.uniform01();
      y[i] = rng.bernoulli(0.35) ? 1 : 0;
      g[i] = rng.uniform_int(12);
    }
    // oracle: bucket with an ordered map, per-group pairwise auc
    std::map<int, std::pair<std::vector<double>, std::vector<int>>> groups;
    for (int i = 0; i < n; ++i) {
      groups[g[i]].first.push_back(s[i]);
      groups[g[i]].second.push_back(y[i]);
    }
    double sum = 0.0, wsum = 0.0, wtot = 0.0;
    int used = 0, skipped = 0;
    for (auto& [gid, sl] : groups) {
      bool pos = false, neg = false;
      for (int v : sl.second) (v != 0 ? pos : neg) = true;
      if (!pos || !neg) {
        ++skipped;
        continue;
      }
      double a = auc_oracle(sl.first, sl.second);
      sum += a;
      wsum += a * sl.first.size();
      wtot += sl.first.size();
      ++used;
    }
    if (used == 0) {
      CHECK_THROWS_AS(gauc(s, y, g), std::invalid_argument);
      continue;
    }
    GaucResult r = gauc(s, y, g);
    CHECK(r.used == used);
    CHECK(r.skipped == skipped);
    CHECK(r.value == Catch::Approx(sum / used).margin(1e-12));
    CHECK(r.weighted == Catch::Approx(wsum / wtot).margin(1e-12));
  }
}

TEST_CASE("gauc: duplicating one group leaves other groups' contributions intact") {
  std::vector<double> s = {0.9, 0.1, 0.3, 0.8, 0.2};
  std::vector<int> y = {1, 0, 1, 0, 0};
  std::vector<int> g = {1, 1, 2, 2, 2};
  GaucResult before = gauc(s, y, g);
  // duplicate group 1's samples; group 2's per-group auc cannot move
  std::vector<double> s2 = {0.9, 0.1, 0.9, 0.1, 0.3, 0.8, 0.2};
  std::vector<int> y2 = {1, 0, 1, 0, 1, 0, 0};
  std::vector<int> g2 = {1, 1, 1, 1, 2, 2, 2};
  GaucResult after = gauc(s2, y2, g2);
  double g2_auc = auc({0.3, 0.8, 0.2}, {1, 0, 0});
  CHECK(before.value == Catch::Approx((1.0 + g2_auc) / 2).margin(1e-15));
  CHECK(after.value == Catch::Approx((1.0 + g2_auc) / 2).margin(1e-15));
}

TEST_CASE("ranking metrics hand values") {
  // single relevant ranked first, k=5
  RankMetrics a = ranking_metrics({1, 0, 0, 0, 0, 0}, 5);
  CHECK(a.recall == 1.0);
  CHECK(a.ndcg == 1.0);
  CHECK(a.mrr == 1.0);
  // single relevant at rank 3, k=5: ndcg = 1/log2(4) = 0.5, mrr = 1/3
  RankMetrics b = ranking_metrics({0, 0, 1, 0, 0, 0}, 5);
  CHECK(b.recall == 1.0);
  CHECK(b.ndcg == Catch::Approx(0.5).margin(1e-15));
  CHECK(b.mrr == Catch::Approx(1.0 / 3.0).margin(1e-15));
  // relevant at rank 6, k=5: zero inside the window, mrr still 1/6
  RankMetrics c = ranking_metrics({0, 0, 0, 0, 0, 1}, 5);
  CHECK(c.recall == 0.0);
  CHECK(c.ndcg == 0.0);
  CHECK(c.mrr == Catch::Approx(1.0 / 6.0).margin(1e-15));
  // two relevants split around the window edge
  RankMetrics d = ranking_metrics({0, 1, 0, 1}, 2);
  CHECK(d.recall == 0.5);
  CHECK(d.ndcg == Catch::Approx((1.0 / std::log2(3.0)) /
                                (1.0 + 1.0 / std::log2(3.0)))
                      .margin(1e-15));
  CHECK(d.mrr == 0.5);
  CHECK_THROWS_AS(ranking_metrics({0, 0}, 5), std::invalid_argument);
  CHECK_THROWS_AS(ranking_metrics({1}, 0), std::invalid_argument);
}

TEST_CASE("ranking metrics match the definitional oracle") {
  Rng rng(909);
  std::vector<double> s;
  std::vector<int> y;
  for (int rep = 0; rep < 150; ++rep) {
    random_instance(rng, 500, s, y);
    int k = 1 + rng.uniform_int(20);
    std::vector<int> order = rank_order(s);
    std::vector<int> ranked(y.size());
    for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = y[order[i]];
    RankMetrics m = ranking_metrics(ranked, k);
    RankOracle o = rank_oracle(s, y, k);
    CHECK(m.recall == Catch::Approx(o.recall).margin(1e-12));
    CHECK(m.ndcg == Catch::Approx(o.ndcg).margin(1e-12));
    CHECK(m.mrr == Catch::Approx(o.mrr).margin(1e-12));
  }
}

TEST_CASE("rank_order is stable on ties") {
  std::vector<int> order = rank_order({0.5, 0.7, 0.5, 0.9, 0.5});
  CHECK(order == std::vector<int>{3, 1, 0, 2, 4});
}

TEST_CASE("pcoc hand values and linearity") {
  CHECK(pcoc({1.0, 1.0, 1.0}, {1, 1, 1}) == 1.0);
  CHECK(pcoc({0.25, 0.25, 0.5, 0.5}, {1, 0, 0, 1}) == Catch::Approx(0.75).margin(1e-15));
  std::vector<double> p = {0.2, 0.4, 0.1, 0.8};
  std::vector<int> y = {1, 0, 1, 0};
  CHECK(pcoc({0.4, 0.8, 0.2, 1.6}, y) == Catch::Approx(2.0 * pcoc(p, y)).margin(1e-15));
  CHECK_THROWS_AS(pcoc({0.5, 0.5}, {0, 0}), std::invalid_argument);
}

TEST_CASE("pcoc matches a reverse-order accumulation oracle") {
  Rng rng(314);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + rng.uniform_int(500);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform01();
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[n / 2] = 1;
    double sum = 0.0;
    long long pos = 0;
    for (int i = n - 1; i >= 0; --i) {
      sum += p[i];
      pos += (y[i] != 0);
    }
    CHECK(pcoc(p, y) == Catch::Approx(sum / pos).margin(1e-12));
  }
}
