#pragma once

// Synthetic K-Share-style dataset: planted sharing dynamics over a random
// friend graph, plus the exact user/request filters and the 8:1:1 temporal
// split used downstream.
//
// The generator plants three recoverable signals in the share probability:
// a bilateral-interest term (latent dot products on both the sharer and the
// receiver side), a multi-modal term (cosine between the receiver's hidden
// taste and the video embedding), and a relationship-content alignment term.
// Latent factors and tastes stay inside the generator; everything a model
// may look at is written to the dataset files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unishare/alignment.hpp"
#include "unishare/rng.hpp"
#include "unishare/textio.hpp"

namespace unishare {

struct HistoryEntry {
  int video = 0;
  int other = 0;  // receiver for share_history, sharer for receive_history
  long long t = 0;
  bool operator==(const HistoryEntry&) const = default;
};

struct UserProfile {
  int user_id = 0;
  std::vector<int> friend_ids;  // sorted ascending
  std::vector<HistoryEntry> share_history;    // ascending by t
  std::vector<HistoryEntry> receive_history;  // ascending by t
  std::vector<double> mm_embedding;   // filled from pretrain artifacts
  std::vector<double> gnn_embedding;  // filled from pretrain artifacts
  bool kept = false;  // survived the sharing-user filter
  int distinct_receivers = 0;

  // generator-only state, never written to dataset files
  std::vector<double> latent_factor;
  std::vector<double> mm_taste;
  std::vector<int> pref_categories;
};

struct VideoItem {
  int video_id = 0;
  std::string category;
  std::vector<double> mm_embedding;
  std::vector<double> latent_factor;  // generator-only
};

struct ShareEvent {
  int user_id = 0;
  int video_id = 0;
  int receiver_id = 0;
  long long timestamp = 0;
  bool operator==(const ShareEvent&) const = default;
};

struct ViewImpression {
  int user_id = 0;
  int video_id = 0;
  long long timestamp = 0;
  int shared = 0;  // the view-task label
  bool operator==(const ViewImpression&) const = default;
};

struct SharePanelImpression {
  int user_id = 0;
  int video_id = 0;
  std::vector<int> candidates;  // <=20, most-recent-share-first
  int positive_receiver = 0;
  long long timestamp = 0;
  bool operator==(const SharePanelImpression&) const = default;
};

struct SocialGraph {
  int n_users = 0;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists
  std::map<std::pair<int, int>, RelationshipType> relationship;

  static std::pair<int, int> edge_key(int u, int v) {
    return {std::min(u, v), std::max(u, v)};
  }
  bool has_edge(int u, int v) const {
    return relationship.count(edge_key(u, v)) != 0;
  }
  void add_edge(int u, int v, RelationshipType rel) {
    if (u == v) throw std::invalid_argument("self edge");
    if (has_edge(u, v)) return;
    adjacency[static_cast<std::size_t>(u)].push_back(v);
    adjacency[static_cast<std::size_t>(v)].push_back(u);
    relationship[edge_key(u, v)] = rel;
  }
  void sort_neighbors() {
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
  }
  RelationshipType rel_of(int u, int v) const {
    auto it = relationship.find(edge_key(u, v));
    if (it == relationship.end())
      throw std::out_of_range("no edge " + std::to_string(u) + "-" +
                              std::to_string(v));
    return it->second;
  }
  double mean_degree() const {
    if (n_users == 0) return 0.0;
    return 2.0 * static_cast<double>(relationship.size()) / n_users;
  }
};

struct LogSlice {
  std::vector<ViewImpression> views;
  std::vector<ShareEvent> shares;
  std::vector<SharePanelImpression> panels;
};

struct DatasetSplit {
  LogSlice train, validation, test;
  long long t_train_end = 0;  // inclusive upper bound of train timestamps
  long long t_val_end = 0;    // inclusive upper bound of validation
};

struct GenConfig {
  long long n_users = 2000;
  long long n_videos = 20000;
  long long n_categories = 8;
  long long d_latent = 8;
  long long d_mm = 32;
  double mean_degree = 12.0;
  std::string graph_model = "er";  // "er" or "pa"
  long long horizon = 140;
  double request_rate = 0.30;
  long long views_min = 2;
  long long views_max = 12;
  double taste_bias = 0.7;
  double w_bim = 4.0;
  double w_mm = 4.5;
  double w_rca = 2.5;
  double bias = -13.0;
  double unknown_rel_rate = 0.2;
  double video_noise = 0.35;
  double user_noise = 0.35;
  double neg_request_keep = 0.05;
  std::uint64_t seed = 1;
  std::uint64_t alignment_seed = 0;  // 0 -> derived from seed

  static const std::set<std::string>& keys() {
    static const std::set<std::string> k = {
        "n_users",      "n_videos",   "n_categories", "d_latent",
        "d_mm",         "mean_degree", "graph_model", "horizon",
        "request_rate", "views_min",  "views_max",    "taste_bias",
        "w_bim",        "w_mm",       "w_rca",        "bias",
        "unknown_rel_rate", "video_noise", "user_noise",
        "neg_request_keep", "seed",   "alignment_seed"};
    return k;
  }

  static GenConfig from(const Config& cfg) {
    cfg.check_known(keys());
    GenConfig g;
    g.n_users = cfg.get_int("n_users", g.n_users);
    g.n_videos = cfg.get_int("n_videos", g.n_videos);
    g.n_categories = cfg.get_int("n_categories", g.n_categories);
    g.d_latent = cfg.get_int("d_latent", g.d_latent);
    g.d_mm = cfg.get_int("d_mm", g.d_mm);
    g.mean_degree = cfg.get_real("mean_degree", g.mean_degree);
    g.graph_model = cfg.get_str("graph_model", g.graph_model);
    g.horizon = cfg.get_int("horizon", g.horizon);
    g.request_rate = cfg.get_real("request_rate", g.request_rate);
    g.views_min = cfg.get_int("views_min", g.views_min);
    g.views_max = cfg.get_int("views_max", g.views_max);
    g.taste_bias = cfg.get_real("taste_bias", g.taste_bias);
    g.w_bim = cfg.get_real("w_bim", g.w_bim);
    g.w_mm = cfg.get_real("w_mm", g.w_mm);
    g.w_rca = cfg.get_real("w_rca", g.w_rca);
    g.bias = cfg.get_real("bias", g.bias);
    g.unknown_rel_rate = cfg.get_real("unknown_rel_rate", g.unknown_rel_rate);
    g.video_noise = cfg.get_real("video_noise", g.video_noise);
    g.user_noise = cfg.get_real("user_noise", g.user_noise);
    g.neg_request_keep = cfg.get_real("neg_request_keep", g.neg_request_keep);
    g.seed = cfg.get_uint("seed", 1);
    g.alignment_seed = cfg.get_uint("alignment_seed", 0);
    g.validate();
    return g;
  }

  void validate() const {
    if (n_users < 2) throw std::invalid_argument("n_users must be >= 2");
    if (n_videos < 1) throw std::invalid_argument("n_videos must be >= 1");
    if (n_categories < 1)
      throw std::invalid_argument("n_categories must be >= 1");
    if (d_latent < 1 || d_mm < 1)
      throw std::invalid_argument("embedding dims must be >= 1");
    if (mean_degree < 1.0 || mean_degree >= static_cast<double>(n_users))
      throw std::invalid_argument("mean_degree out of range");
    if (graph_model != "er" && graph_model != "pa")
      throw std::invalid_argument("graph_model must be 'er' or 'pa'");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (views_min < 0 || views_max < views_min)
      throw std::invalid_argument("bad views_min/views_max");
    for (double r : {request_rate, taste_bias, unknown_rel_rate,
                     neg_request_keep})
      if (r < 0.0 || r > 1.0)
        throw std::invalid_argument("rates must lie in [0,1]");
  }

  std::uint64_t effective_alignment_seed() const {
    return alignment_seed ? alignment_seed : Rng::mix(seed, 0xA11Cull);
  }
};

struct Dataset {
  GenConfig cfg;
  std::vector<std::string> categories;
  std::vector<UserProfile> users;
  std::vector<VideoItem> videos;
  SocialGraph graph;
  DatasetSplit split;
  AlignmentTable alignment;  // rebuilt from the seed, not persisted here
};

inline std::vector<std::string> make_category_names(int n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "cat_%02d", c);
    out.emplace_back(buf);
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const std::vector<double>& a,
                     const std::vector<double>& b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline void normalize_in_place(std::vector<double>& v) {
  double n = norm(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

// ---------------------------------------------------------------------------
// graph generation

inline SocialGraph generate_social_graph(int n_users, double mean_degree,
                                         std::uint64_t seed,
                                         const std::string& model = "er",
                                         double unknown_rate = 0.2) {
  if (n_users < 2) throw std::invalid_argument("n_users must be >= 2");
  if (mean_degree < 1.0 || mean_degree >= n_users)
    throw std::invalid_argument("mean_degree out of range");
  SocialGraph g;
  g.n_users = n_users;
  g.adjacency.assign(static_cast<std::size_t>(n_users), {});

  Rng edges(Rng::mix(seed, 0xEDull));
  if (model == "er") {
    double p = mean_degree / (n_users - 1);
    for (int u = 0; u < n_users; ++u)
      for (int v = u + 1; v < n_users; ++v)
        if (edges.uniform01() < p)
          g.add_edge(u, v, RelationshipType::Unknown);
  } else if (model == "pa") {
    int m = std::max(1, static_cast<int>(std::lround(mean_degree / 2.0)));
    std::vector<int> endpoints;
    int m0 = m + 1;
    for (int u = 0; u < std::min(m0, n_users); ++u)
      for (int v = u + 1; v < std::min(m0, n_users); ++v) {
        g.add_edge(u, v, RelationshipType::Unknown);
        endpoints.push_back(u);
        endpoints.push_back(v);
      }
    for (int u = m0; u < n_users; ++u) {
      std::set<int> chosen;
      int guard = 0;
      while (static_cast<int>(chosen.size()) < m && guard++ < 50 * m) {
        int v = endpoints[static_cast<std::size_t>(
            edges.uniform_int(static_cast<int>(endpoints.size())))];
        if (v != u) chosen.insert(v);
      }
      for (int v : chosen) {
        g.add_edge(u, v, RelationshipType::Unknown);
        endpoints.push_back(u);
        endpoints.push_back(v);
      }
    }
  } else {
    throw std::invalid_argument("graph_model must be 'er' or 'pa'");
  }
  g.sort_neighbors();

  // relationship types in deterministic edge order
  Rng rels(Rng::mix(seed, 0x4E1ull));
  for (auto& [key, rel] : g.relationship) {
    (void)key;
    if (rels.uniform01() < unknown_rate) {
      rel = RelationshipType::Unknown;
    } else {
      rel = static_cast<RelationshipType>(rels.uniform_int(kNamedRelationships));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// entities

struct CategoryCentroids {
  std::vector<std::vector<double>> latent;  // C x d_latent
  std::vector<std::vector<double>> mm;      // C x d_mm
};

inline CategoryCentroids make_centroids(const GenConfig& cfg) {
  CategoryCentroids cc;
  Rng rng(Rng::mix(cfg.seed, 0xCC));
  for (long long c = 0; c < cfg.n_categories; ++c) {
    std::vector<double> lat(static_cast<std::size_t>(cfg.d_latent));
    for (double& x : lat) x = rng.normal();
    normalize_in_place(lat);
    std::vector<double> mm(static_cast<std::size_t>(cfg.d_mm));
    for (double& x : mm) x = rng.normal();
    normalize_in_place(mm);
    cc.latent.push_back(std::move(lat));
    cc.mm.push_back(std::move(mm));
  }
  return cc;
}

inline std::vector<VideoItem> generate_videos(const GenConfig& cfg,
                                              const CategoryCentroids& cc,
                                              const std::vector<std::string>& cats) {
  std::vector<VideoItem> out;
  out.reserve(static_cast<std::size_t>(cfg.n_videos));
  Rng rng(Rng::mix(cfg.seed, 0x71DE0));
  for (long long i = 0; i < cfg.n_videos; ++i) {
    int c = rng.uniform_int(static_cast<int>(cfg.n_categories));
    VideoItem v;
    v.video_id = static_cast<int>(i);
    v.category = cats[static_cast<std::size_t>(c)];
    // noise scaled so its norm is video_noise relative to the unit centroid
    double s_lat = cfg.video_noise / std::sqrt(static_cast<double>(cfg.d_latent));
    double s_mm = cfg.video_noise / std::sqrt(static_cast<double>(cfg.d_mm));
    v.latent_factor = cc.latent[static_cast<std::size_t>(c)];
    for (double& x : v.latent_factor) x += s_lat * rng.normal();
    normalize_in_place(v.latent_factor);
    v.mm_embedding = cc.mm[static_cast<std::size_t>(c)];
    for (double& x : v.mm_embedding) x += s_mm * rng.normal();
    normalize_in_place(v.mm_embedding);
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<UserProfile> generate_users(const GenConfig& cfg,
                                               const CategoryCentroids& cc) {
  std::vector<UserProfile> out;
  out.reserve(static_cast<std::size_t>(cfg.n_users));
  Rng rng(Rng::mix(cfg.seed, 0x05E4));
  int n_cat = static_cast<int>(cfg.n_categories);
  for (long long u = 0; u < cfg.n_users; ++u) {
    UserProfile up;
    up.user_id = static_cast<int>(u);
    int n_pref = std::min(n_cat, 1 + rng.uniform_int(3));
    std::set<int> prefs;
    while (static_cast<int>(prefs.size()) < n_pref)
      prefs.insert(rng.uniform_int(n_cat));
    up.pref_categories.assign(prefs.begin(), prefs.end());
    up.latent_factor.assign(static_cast<std::size_t>(cfg.d_latent), 0.0);
    up.mm_taste.assign(static_cast<std::size_t>(cfg.d_mm), 0.0);
    for (int c : up.pref_categories) {
      for (std::size_t k = 0; k < up.latent_factor.size(); ++k)
        up.latent_factor[k] += cc.latent[static_cast<std::size_t>(c)][k] / n_pref;
      for (std::size_t k = 0; k < up.mm_taste.size(); ++k)
        up.mm_taste[k] += cc.mm[static_cast<std::size_t>(c)][k] / n_pref;
    }
    double s_lat = cfg.user_noise / std::sqrt(static_cast<double>(cfg.d_latent));
    double s_mm = cfg.user_noise / std::sqrt(static_cast<double>(cfg.d_mm));
    for (double& x : up.latent_factor) x += s_lat * rng.normal();
    normalize_in_place(up.latent_factor);
    for (double& x : up.mm_taste) x += s_mm * rng.normal();
    normalize_in_place(up.mm_taste);
    out.push_back(std::move(up));
  }
  return out;
}

// ---------------------------------------------------------------------------
// planted probability

inline double plant_share_probability(const UserProfile& u, const VideoItem& i,
                                      const UserProfile& v,
                                      RelationshipType rel,
                                      const AlignmentTable& table,
                                      const GenConfig& cfg) {
  double z = cfg.w_bim * dot(u.latent_factor, i.latent_factor) +
             cfg.w_bim * dot(v.latent_factor, i.latent_factor) +
             cfg.w_mm * cosine(v.mm_taste, i.mm_embedding) +
             cfg.w_rca * table.lookup(i.category, rel) + cfg.bias;
  return sigmoid_scalar(z);
}

// ---------------------------------------------------------------------------
// log simulation

// Friends ordered most-recent-share-first (never-shared after, by id),
// capped at the 20-candidate panel limit.
inline std::vector<int> panel_candidates(
    const std::vector<int>& friends,
    const std::unordered_map<int, long long>& last_share_to, int cap = 20) {
  std::vector<int> order = friends;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    long long ta = -1, tb = -1;
    if (auto it = last_share_to.find(a); it != last_share_to.end())
      ta = it->second;
    if (auto it = last_share_to.find(b); it != last_share_to.end())
      tb = it->second;
    if (ta != tb) return ta > tb;
    return a < b;
  });
  if (static_cast<int>(order.size()) > cap)
    order.resize(static_cast<std::size_t>(cap));
  return order;
}

inline LogSlice simulate_logs(const SocialGraph& graph,
                              std::vector<UserProfile>& users,
                              const std::vector<VideoItem>& videos,
                              const AlignmentTable& table,
                              const GenConfig& cfg) {
  LogSlice log;
  Rng rng(Rng::mix(cfg.seed, 0x106));
  int n_users = static_cast<int>(users.size());
  int n_videos = static_cast<int>(videos.size());

  // per-category video index for taste-biased sampling
  std::map<std::string, std::vector<int>> by_cat;
  for (const VideoItem& v : videos) by_cat[v.category].push_back(v.video_id);
  std::vector<std::string> cat_names = make_category_names(
      static_cast<int>(cfg.n_categories));

  std::vector<std::unordered_map<int, long long>> last_share_to(
      static_cast<std::size_t>(n_users));

  for (long long t = 0; t < cfg.horizon; ++t) {
    for (int u = 0; u < n_users; ++u) {
      if (rng.uniform01() >= cfg.request_rate) continue;
      long long ts = t * cfg.n_users + u + 1;
      int n_views = static_cast<int>(
          cfg.views_min +
          rng.uniform_int(static_cast<int>(cfg.views_max - cfg.views_min + 1)));
      const UserProfile& up = users[static_cast<std::size_t>(u)];
      std::set<int> seen;  // a video appears at most once per request
      for (int k = 0; k < n_views; ++k) {
        int vid = -1;
        for (int attempt = 0; attempt < 8; ++attempt) {
          int draw;
          if (!up.pref_categories.empty() &&
              rng.uniform01() < cfg.taste_bias) {
            int c = up.pref_categories[static_cast<std::size_t>(rng.uniform_int(
                static_cast<int>(up.pref_categories.size())))];
            const std::vector<int>& pool =
                by_cat[cat_names[static_cast<std::size_t>(c)]];
            draw = pool.empty()
                       ? rng.uniform_int(n_videos)
                       : pool[static_cast<std::size_t>(rng.uniform_int(
                             static_cast<int>(pool.size())))];
          } else {
            draw = rng.uniform_int(n_videos);
          }
          if (!seen.count(draw)) { vid = draw; break; }
        }
        if (vid < 0) continue;
        seen.insert(vid);
        const VideoItem& item = videos[static_cast<std::size_t>(vid)];

        int shared = 0;
        const std::vector<int>& friends =
            graph.adjacency[static_cast<std::size_t>(u)];
        if (!friends.empty()) {
          std::vector<int> panel = panel_candidates(
              friends, last_share_to[static_cast<std::size_t>(u)]);
          std::vector<double> probs;
          probs.reserve(panel.size());
          double p_max = 0.0;
          for (int fv : panel) {
            double p = plant_share_probability(
                up, item, users[static_cast<std::size_t>(fv)],
                graph.rel_of(u, fv), table, cfg);
            probs.push_back(p);
            p_max = std::max(p_max, p);
          }
          if (rng.uniform01() < p_max) {
            shared = 1;
            double total = 0.0;
            for (double p : probs) total += p;
            double draw = rng.uniform01() * total;
            int receiver = panel.back();
            double acc = 0.0;
            for (std::size_t j = 0; j < panel.size(); ++j) {
              acc += probs[j];
              if (draw < acc) { receiver = panel[j]; break; }
            }
            log.shares.push_back({u, vid, receiver, ts});
            log.panels.push_back({u, vid, panel, receiver, ts});
            last_share_to[static_cast<std::size_t>(u)][receiver] = ts;
            users[static_cast<std::size_t>(u)].share_history.push_back(
                {vid, receiver, ts});
            users[static_cast<std::size_t>(receiver)].receive_history.push_back(
                {vid, u, ts});
          }
        }
        log.views.push_back({u, vid, ts, shared});
      }
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// filters and split

// Keep users with 1..10 distinct receivers, stratified 1:3:5 over
// {1}, {2..5}, {>5}.  Marks UserProfile::kept in place.
inline void filter_users(std::vector<UserProfile>& users,
                         const std::vector<ShareEvent>& shares,
                         std::uint64_t seed) {
  std::vector<std::set<int>> distinct(users.size());
  for (const ShareEvent& s : shares)
    distinct[static_cast<std::size_t>(s.user_id)].insert(s.receiver_id);
  std::vector<int> s1, s2, s3;
  for (UserProfile& u : users) {
    u.kept = false;
    u.distinct_receivers =
        static_cast<int>(distinct[static_cast<std::size_t>(u.user_id)].size());
    int n = u.distinct_receivers;
    if (n < 1 || n > 10) continue;
    if (n == 1) s1.push_back(u.user_id);
    else if (n <= 5) s2.push_back(u.user_id);
    else s3.push_back(u.user_id);
  }
  long long m = std::min({static_cast<long long>(s1.size()),
                          static_cast<long long>(s2.size()) / 3,
                          static_cast<long long>(s3.size()) / 5});
  Rng rng(Rng::mix(seed, 0xF17E4));
  rng.shuffle(s1);
  rng.shuffle(s2);
  rng.shuffle(s3);
  auto mark = [&](const std::vector<int>& ids, long long count) {
    for (long long k = 0; k < count; ++k)
      users[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])].kept =
          true;
  };
  mark(s1, m);
  mark(s2, 3 * m);
  mark(s3, 5 * m);
}

// Requests are (user, timestamp) buckets.  Drop requests with <= 3
// impressions, keep every request containing a positive, and keep a uniform
// sample of the all-negative rest.  Panels survive only for kept users.
inline LogSlice filter_requests(const LogSlice& log,
                                const std::vector<UserProfile>& users,
                                double neg_keep_rate, std::uint64_t seed) {
  std::map<std::pair<long long, int>, std::vector<std::size_t>> requests;
  for (std::size_t k = 0; k < log.views.size(); ++k) {
    const ViewImpression& v = log.views[k];
    requests[{v.timestamp, v.user_id}].push_back(k);
  }
  Rng rng(Rng::mix(seed, 0xF177));
  std::set<std::pair<long long, int>> kept_requests;
  for (const auto& [key, idx] : requests) {
    if (idx.size() <= 3) continue;
    bool has_pos = false;
    for (std::size_t k : idx)
      if (log.views[k].shared) { has_pos = true; break; }
    // one draw per surviving all-negative request, in deterministic order
    if (has_pos || rng.uniform01() < neg_keep_rate) kept_requests.insert(key);
  }
  LogSlice out;
  for (const ViewImpression& v : log.views)
    if (kept_requests.count({v.timestamp, v.user_id})) out.views.push_back(v);
  for (const ShareEvent& s : log.shares)
    if (kept_requests.count({s.timestamp, s.user_id})) out.shares.push_back(s);
  for (const SharePanelImpression& p : log.panels)
    if (kept_requests.count({p.timestamp, p.user_id}) &&
        users[static_cast<std::size_t>(p.user_id)].kept)
      out.panels.push_back(p);
  return out;
}

// Boundaries at the 80th/90th percentile of share-event timestamps.
inline DatasetSplit split_by_time(const LogSlice& log) {
  if (log.shares.size() < 10)
    throw std::invalid_argument("need at least 10 share events to split");
  std::vector<long long> ts;
  ts.reserve(log.shares.size());
  for (const ShareEvent& s : log.shares) ts.push_back(s.timestamp);
  std::sort(ts.begin(), ts.end());
  std::size_t n = ts.size();
  auto bound = [&](double q) {
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(n))) - 1;
    return ts[std::min(idx, n - 1)];
  };
  DatasetSplit split;
  split.t_train_end = bound(0.8);
  split.t_val_end = bound(0.9);

  auto place = [&](long long t) -> LogSlice& {
    if (t <= split.t_train_end) return split.train;
    if (t <= split.t_val_end) return split.validation;
    return split.test;
  };
  for (const ViewImpression& v : log.views) place(v.timestamp).views.push_back(v);
  for (const ShareEvent& s : log.shares) place(s.timestamp).shares.push_back(s);
  for (const SharePanelImpression& p : log.panels)
    place(p.timestamp).panels.push_back(p);
  return split;
}

// Histories must reflect only events the dataset retains; rebuild them from
// the filtered, split shares so the in-memory view matches the files.
inline void rebuild_histories(std::vector<UserProfile>& users,
                              const DatasetSplit& split) {
  for (UserProfile& u : users) {
    u.share_history.clear();
    u.receive_history.clear();
  }
  std::vector<const LogSlice*> slices = {&split.train, &split.validation,
                                         &split.test};
  std::vector<ShareEvent> all;
  for (const LogSlice* s : slices)
    all.insert(all.end(), s->shares.begin(), s->shares.end());
  std::sort(all.begin(), all.end(), [](const ShareEvent& a, const ShareEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.video_id < b.video_id;
  });
  for (const ShareEvent& s : all) {
    users[static_cast<std::size_t>(s.user_id)].share_history.push_back(
        {s.video_id, s.receiver_id, s.timestamp});
    users[static_cast<std::size_t>(s.receiver_id)].receive_history.push_back(
        {s.video_id, s.user_id, s.timestamp});
  }
}

inline Dataset generate_dataset(const GenConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.cfg = cfg;
  ds.categories = make_category_names(static_cast<int>(cfg.n_categories));
  ds.alignment =
      AlignmentTable::generate(ds.categories, cfg.effective_alignment_seed());
  CategoryCentroids cc = make_centroids(cfg);
  ds.videos = generate_videos(cfg, cc, ds.categories);
  ds.users = generate_users(cfg, cc);
  ds.graph = generate_social_graph(static_cast<int>(cfg.n_users),
                                   cfg.mean_degree, cfg.seed, cfg.graph_model,
                                   cfg.unknown_rel_rate);
  for (UserProfile& u : ds.users)
    u.friend_ids = ds.graph.adjacency[static_cast<std::size_t>(u.user_id)];

  LogSlice raw = simulate_logs(ds.graph, ds.users, ds.videos, ds.alignment, cfg);
  filter_users(ds.users, raw.shares, cfg.seed);
  LogSlice filtered = filter_requests(raw, ds.users, cfg.neg_request_keep,
                                      cfg.seed);
  ds.split = split_by_time(filtered);
  rebuild_histories(ds.users, ds.split);
  return ds;
}

// ---------------------------------------------------------------------------
// on-disk layout: manifest.txt + users/videos/graph + per-split logs

inline const char* split_name(int s) {
  return s == 0 ? "train" : s == 1 ? "validation" : "test";
}

inline void write_dataset(const Dataset& ds, const std::string& dir) {
  {
    RecordWriter w(dir + "/users.txt");
    for (const UserProfile& u : ds.users) {
      Record r;
      r.add("user", u.user_id);
      r.add("kept", u.kept ? 1 : 0);
      r.add("receivers", u.distinct_receivers);
      w.write(r);
    }
    w.close();
  }
  {
    RecordWriter w(dir + "/videos.txt");
    for (const VideoItem& v : ds.videos) {
      Record r;
      r.add("video", v.video_id);
      r.add("cat", v.category);
      r.add_reals("mm", v.mm_embedding);
      w.write(r);
    }
    w.close();
  }
  {
    RecordWriter w(dir + "/graph.txt");
    for (const auto& [key, rel] : ds.graph.relationship) {
      Record r;
      r.add("u", key.first);
      r.add("v", key.second);
      r.add("rel", rel_name(rel));
      w.write(r);
    }
    w.close();
  }
  const LogSlice* slices[3] = {&ds.split.train, &ds.split.validation,
                               &ds.split.test};
  for (int s = 0; s < 3; ++s) {
    {
      RecordWriter w(dir + "/views." + split_name(s));
      for (const ViewImpression& v : slices[s]->views) {
        Record r;
        r.add("user", v.user_id);
        r.add("video", v.video_id);
        r.add("t", v.timestamp);
        r.add("shared", v.shared);
        w.write(r);
      }
      w.close();
    }
    {
      RecordWriter w(dir + "/shares." + split_name(s));
      for (const ShareEvent& e : slices[s]->shares) {
        Record r;
        r.add("user", e.user_id);
        r.add("video", e.video_id);
        r.add("receiver", e.receiver_id);
        r.add("t", e.timestamp);
        w.write(r);
      }
      w.close();
    }
    {
      RecordWriter w(dir + "/panels." + split_name(s));
      for (const SharePanelImpression& p : slices[s]->panels) {
        Record r;
        r.add("user", p.user_id);
        r.add("video", p.video_id);
        r.add("t", p.timestamp);
        r.add("pos", p.positive_receiver);
        r.add_ints("cands", std::vector<long long>(p.candidates.begin(),
                                                   p.candidates.end()));
        w.write(r);
      }
      w.close();
    }
  }
  {
    // manifest: generation config + split boundaries + counts
    std::string m;
    m += "format=1\n";
    m += "seed=" + std::to_string(ds.cfg.seed) + "\n";
    m += "alignment_seed=" + std::to_string(ds.cfg.effective_alignment_seed()) +
         "\n";
    m += "n_users=" + std::to_string(ds.cfg.n_users) + "\n";
    m += "n_videos=" + std::to_string(ds.cfg.n_videos) + "\n";
    m += "n_categories=" + std::to_string(ds.cfg.n_categories) + "\n";
    m += "d_latent=" + std::to_string(ds.cfg.d_latent) + "\n";
    m += "d_mm=" + std::to_string(ds.cfg.d_mm) + "\n";
    m += "mean_degree=" + format_double(ds.cfg.mean_degree) + "\n";
    m += "graph_model=" + ds.cfg.graph_model + "\n";
    m += "horizon=" + std::to_string(ds.cfg.horizon) + "\n";
    m += "request_rate=" + format_double(ds.cfg.request_rate) + "\n";
    m += "views_min=" + std::to_string(ds.cfg.views_min) + "\n";
    m += "views_max=" + std::to_string(ds.cfg.views_max) + "\n";
    m += "taste_bias=" + format_double(ds.cfg.taste_bias) + "\n";
    m += "w_bim=" + format_double(ds.cfg.w_bim) + "\n";
    m += "w_mm=" + format_double(ds.cfg.w_mm) + "\n";
    m += "w_rca=" + format_double(ds.cfg.w_rca) + "\n";
    m += "bias=" + format_double(ds.cfg.bias) + "\n";
    m += "unknown_rel_rate=" + format_double(ds.cfg.unknown_rel_rate) + "\n";
    m += "video_noise=" + format_double(ds.cfg.video_noise) + "\n";
    m += "user_noise=" + format_double(ds.cfg.user_noise) + "\n";
    m += "neg_request_keep=" + format_double(ds.cfg.neg_request_keep) + "\n";
    m += "t_train_end=" + std::to_string(ds.split.t_train_end) + "\n";
    m += "t_val_end=" + std::to_string(ds.split.t_val_end) + "\n";
    for (int s = 0; s < 3; ++s) {
      std::string tag = split_name(s);
      m += "n_views_" + tag + "=" + std::to_string(slices[s]->views.size()) +
           "\n";
      m += "n_shares_" + tag + "=" + std::to_string(slices[s]->shares.size()) +
           "\n";
      m += "n_panels_" + tag + "=" + std::to_string(slices[s]->panels.size()) +
           "\n";
    }
    write_text_file(dir + "/manifest.txt", m);
  }
}

inline Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  Config m = Config::from_file(dir + "/manifest.txt");
  if (m.get_int("format", -1) != 1)
    throw ParseError(dir + "/manifest.txt: unsupported format");
  ds.cfg.seed = m.get_uint("seed", 1);
  ds.cfg.alignment_seed = m.get_uint("alignment_seed", 0);
  ds.cfg.n_users = m.get_int("n_users", 0);
  ds.cfg.n_videos = m.get_int("n_videos", 0);
  ds.cfg.n_categories = m.get_int("n_categories", 0);
  ds.cfg.d_latent = m.get_int("d_latent", 0);
  ds.cfg.d_mm = m.get_int("d_mm", 0);
  ds.cfg.mean_degree = m.get_real("mean_degree", 0.0);
  ds.cfg.graph_model = m.get_str("graph_model", "er");
  ds.cfg.horizon = m.get_int("horizon", 1);
  ds.cfg.request_rate = m.get_real("request_rate", 0.0);
  ds.cfg.views_min = m.get_int("views_min", 0);
  ds.cfg.views_max = m.get_int("views_max", 0);
  ds.cfg.taste_bias = m.get_real("taste_bias", 0.0);
  ds.cfg.w_bim = m.get_real("w_bim", 0.0);
  ds.cfg.w_mm = m.get_real("w_mm", 0.0);
  ds.cfg.w_rca = m.get_real("w_rca", 0.0);
  ds.cfg.bias = m.get_real("bias", 0.0);
  ds.cfg.unknown_rel_rate = m.get_real("unknown_rel_rate", 0.0);
  ds.cfg.video_noise = m.get_real("video_noise", 0.0);
  ds.cfg.user_noise = m.get_real("user_noise", 0.0);
  ds.cfg.neg_request_keep = m.get_real("neg_request_keep", 0.0);
  ds.split.t_train_end = m.get_int("t_train_end", 0);
  ds.split.t_val_end = m.get_int("t_val_end", 0);
  ds.categories = make_category_names(static_cast<int>(ds.cfg.n_categories));
  ds.alignment = AlignmentTable::generate(ds.categories,
                                          ds.cfg.effective_alignment_seed());

  ds.users.assign(static_cast<std::size_t>(ds.cfg.n_users), {});
  {
    RecordReader r(dir + "/users.txt");
    Record rec;
    std::size_t row = 0;
    while (r.next(rec)) {
      rec.check_keys({"user", "kept", "receivers"});
      int id = static_cast<int>(rec.get_int("user"));
      if (row >= ds.users.size() || id != static_cast<int>(row))
        throw ParseError(rec.origin + ": user ids must be dense and ordered");
      UserProfile& u = ds.users[row++];
      u.user_id = id;
      u.kept = rec.get_int("kept") != 0;
      u.distinct_receivers = static_cast<int>(rec.get_int("receivers"));
    }
    if (row != ds.users.size())
      throw ParseError(dir + "/users.txt: expected " +
                       std::to_string(ds.users.size()) + " users");
  }
  {
    RecordReader r(dir + "/videos.txt");
    Record rec;
    std::size_t row = 0;
    ds.videos.assign(static_cast<std::size_t>(ds.cfg.n_videos), {});
    while (r.next(rec)) {
      rec.check_keys({"video", "cat", "mm"});
      int id = static_cast<int>(rec.get_int("video"));
      if (row >= ds.videos.size() || id != static_cast<int>(row))
        throw ParseError(rec.origin + ": video ids must be dense and ordered");
      VideoItem& v = ds.videos[row++];
      v.video_id = id;
      v.category = rec.get("cat");
      v.mm_embedding = rec.get_reals("mm");
    }
    if (row != ds.videos.size())
      throw ParseError(dir + "/videos.txt: expected " +
                       std::to_string(ds.videos.size()) + " videos");
  }
  {
    ds.graph.n_users = static_cast<int>(ds.cfg.n_users);
    ds.graph.adjacency.assign(static_cast<std::size_t>(ds.cfg.n_users), {});
    RecordReader r(dir + "/graph.txt");
    Record rec;
    while (r.next(rec)) {
      rec.check_keys({"u", "v", "rel"});
      int u = static_cast<int>(rec.get_int("u"));
      int v = static_cast<int>(rec.get_int("v"));
      if (u < 0 || v < 0 || u >= ds.graph.n_users || v >= ds.graph.n_users)
        throw ParseError(rec.origin + ": edge endpoint out of range");
      ds.graph.add_edge(u, v, rel_from_name(rec.get("rel")));
    }
    ds.graph.sort_neighbors();
    for (UserProfile& u : ds.users)
      u.friend_ids = ds.graph.adjacency[static_cast<std::size_t>(u.user_id)];
  }
  LogSlice* slices[3] = {&ds.split.train, &ds.split.validation,
                         &ds.split.test};
  for (int s = 0; s < 3; ++s) {
    {
      RecordReader r(dir + "/views." + split_name(s));
      Record rec;
      while (r.next(rec)) {
        rec.check_keys({"user", "video", "t", "shared"});
        ViewImpression v;
        v.user_id = static_cast<int>(rec.get_int("user"));
        v.video_id = static_cast<int>(rec.get_int("video"));
        v.timestamp = rec.get_int("t");
        v.shared = static_cast<int>(rec.get_int("shared"));
        if (v.shared != 0 && v.shared != 1)
          throw ParseError(rec.origin + ": shared must be 0 or 1");
        slices[s]->views.push_back(v);
      }
    }
    {
      RecordReader r(dir + "/shares." + split_name(s));
      Record rec;
      while (r.next(rec)) {
        rec.check_keys({"user", "video", "receiver", "t"});
        ShareEvent e;
        e.user_id = static_cast<int>(rec.get_int("user"));
        e.video_id = static_cast<int>(rec.get_int("video"));
        e.receiver_id = static_cast<int>(rec.get_int("receiver"));
        e.timestamp = rec.get_int("t");
        slices[s]->shares.push_back(e);
      }
    }
    {
      RecordReader r(dir + "/panels." + split_name(s));
      Record rec;
      while (r.next(rec)) {
        rec.check_keys({"user", "video", "t", "pos", "cands"});
        SharePanelImpression p;
        p.user_id = static_cast<int>(rec.get_int("user"));
        p.video_id = static_cast<int>(rec.get_int("video"));
        p.timestamp = rec.get_int("t");
        p.positive_receiver = static_cast<int>(rec.get_int("pos"));
        for (long long c : rec.get_ints("cands"))
          p.candidates.push_back(static_cast<int>(c));
        if (p.candidates.size() > 20)
          throw ParseError(rec.origin + ": panel exceeds 20 candidates");
        if (std::find(p.candidates.begin(), p.candidates.end(),
                      p.positive_receiver) == p.candidates.end())
          throw ParseError(rec.origin + ": positive receiver not in panel");
        slices[s]->panels.push_back(p);
      }
    }
  }
  rebuild_histories(ds.users, ds.split);
  return ds;
}

// Equality over everything the files persist (generator-only latents and
// pretrain-filled embeddings excluded).
inline bool persisted_equal(const Dataset& a, const Dataset& b) {
  if (a.users.size() != b.users.size()) return false;
  for (std::size_t k = 0; k < a.users.size(); ++k) {
    const UserProfile& x = a.users[k];
    const UserProfile& y = b.users[k];
    if (x.user_id != y.user_id || x.kept != y.kept ||
        x.distinct_receivers != y.distinct_receivers ||
        x.friend_ids != y.friend_ids || x.share_history != y.share_history ||
        x.receive_history != y.receive_history)
      return false;
  }
  if (a.videos.size() != b.videos.size()) return false;
  for (std::size_t k = 0; k < a.videos.size(); ++k) {
    const VideoItem& x = a.videos[k];
    const VideoItem& y = b.videos[k];
    if (x.video_id != y.video_id || x.category != y.category ||
        x.mm_embedding != y.mm_embedding)
      return false;
  }
  if (a.graph.relationship != b.graph.relationship) return false;
  if (a.split.t_train_end != b.split.t_train_end ||
      a.split.t_val_end != b.split.t_val_end)
    return false;
  const LogSlice* sa[3] = {&a.split.train, &a.split.validation, &a.split.test};
  const LogSlice* sb[3] = {&b.split.train, &b.split.validation, &b.split.test};
  for (int s = 0; s < 3; ++s) {
    if (sa[s]->views != sb[s]->views) return false;
    if (sa[s]->shares != sb[s]->shares) return false;
    if (sa[s]->panels != sb[s]->panels) return false;
  }
  return a.alignment == b.alignment;
}

}  // namespace unishare
