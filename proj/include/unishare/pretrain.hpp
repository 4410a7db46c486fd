#pragma once

// Pre-trained inputs the main model treats as given: contrastive graph
// embeddings, user multi-modal embeddings aggregated from watch history,
// and the alignment table (see alignment.hpp).
//
// Graph embeddings: each node owns a learnable vector; the embedding of a
// node is the mean of its own and its neighbors' vectors (one aggregation
// layer).  Positive pairs are edges, negatives are uniform nodes, and the
// logistic contrastive loss is optimized with Adam.  Output rows are
// L2-normalized.

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "unishare/data.hpp"
#include "unishare/gradcheck.hpp"
#include "unishare/rng.hpp"
#include "unishare/tape.hpp"
#include "unishare/tensor.hpp"
#include "unishare/textio.hpp"

namespace unishare {

struct PretrainConfig {
  long long d_g = 32;
  long long negatives = 5;
  long long epochs = 15;
  long long batch_edges = 256;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;

  static const std::set<std::string>& keys() {
    static const std::set<std::string> k = {"d_g",        "negatives",
                                            "epochs",     "batch_edges",
                                            "learning_rate", "seed"};
    return k;
  }
  static PretrainConfig from(const Config& cfg) {
    cfg.check_known(keys());
    PretrainConfig p;
    p.d_g = cfg.get_int("d_g", p.d_g);
    p.negatives = cfg.get_int("negatives", p.negatives);
    p.epochs = cfg.get_int("epochs", p.epochs);
    p.batch_edges = cfg.get_int("batch_edges", p.batch_edges);
    p.learning_rate = cfg.get_real("learning_rate", p.learning_rate);
    p.seed = cfg.get_uint("seed", p.seed);
    p.validate();
    return p;
  }
  void validate() const {
    if (d_g < 1) throw std::invalid_argument("d_g must be >= 1");
    if (negatives < 0) throw std::invalid_argument("negatives must be >= 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_edges < 1) throw std::invalid_argument("batch_edges must be >= 1");
    if (learning_rate <= 0.0)
      throw std::invalid_argument("learning_rate must be > 0");
  }
};

struct GraphEmbeddingTable {
  long long dim = 0;
  std::vector<std::vector<double>> rows;  // one per user, unit norm
};

inline Tensor init_node_table(int n_users, long long d, std::uint64_t seed) {
  Tensor t = Tensor::zeros({n_users, static_cast<int>(d)});
  Rng rng(Rng::mix(seed, 0x9E0D));
  for (double& x : t.data) x = 0.2 * rng.normal();
  return t;
}

// Self-inclusive neighbor group of a node; the mean over it is the
// one-layer aggregation.
inline std::vector<int> agg_group(const SocialGraph& graph, int u) {
  std::vector<int> ids;
  ids.push_back(u);
  for (int v : graph.adjacency[static_cast<std::size_t>(u)]) ids.push_back(v);
  return ids;
}

inline GraphEmbeddingTable train_graph_embeddings(const SocialGraph& graph,
                                                  const PretrainConfig& cfg) {
  if (graph.n_users == 0) throw std::invalid_argument("empty graph");
  Parameter table("gnn_nodes",
                  init_node_table(graph.n_users, cfg.d_g, cfg.seed));

  std::vector<std::pair<int, int>> edges;
  edges.reserve(graph.relationship.size());
  for (const auto& [key, rel] : graph.relationship) {
    (void)rel;
    edges.push_back(key);
  }

  if (cfg.epochs > 0 && !edges.empty()) {
    AdamState opt(table, cfg.learning_rate);
    for (long long epoch = 0; epoch < cfg.epochs; ++epoch) {
      Rng rng(Rng::mix(cfg.seed, 0xE60C, static_cast<std::uint64_t>(epoch)));
      std::vector<std::pair<int, int>> order = edges;
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_edges)) {
        std::size_t stop = std::min(
            order.size(), start + static_cast<std::size_t>(cfg.batch_edges));
        Tape t;
        auto agg = [&](int node) {
          std::vector<int> ids = agg_group(graph, node);
          Var rows = t.lookup(table, ids);
          return t.scale(t.sum_pool(rows),
                         1.0 / static_cast<double>(ids.size()));
        };
        std::vector<Var> losses;
        for (std::size_t e = start; e < stop; ++e) {
          auto [u, v] = order[e];
          Var zu = agg(u);
          Var zv = agg(v);
          losses.push_back(t.bce(t.sigmoid(t.dot(zu, zv)), 1.0));
          for (long long k = 0; k < cfg.negatives; ++k) {
            // isolated nodes stay out of the loss so they keep their
            // initialized vectors
            auto bad = [&](int n) {
              return n == u || n == v ||
                     graph.adjacency[static_cast<std::size_t>(n)].empty();
            };
            int neg = rng.uniform_int(graph.n_users);
            for (int attempt = 0; attempt < 8 && bad(neg); ++attempt)
              neg = rng.uniform_int(graph.n_users);
            if (bad(neg)) continue;
            losses.push_back(t.bce(t.sigmoid(t.dot(zu, agg(neg))), 0.0));
          }
        }
        Var loss = t.scale(t.add_many(losses),
                           1.0 / static_cast<double>(stop - start));
        t.backward(loss);
        adam_step(table, opt);
      }
    }
  }

  GraphEmbeddingTable out;
  out.dim = cfg.d_g;
  out.rows.resize(static_cast<std::size_t>(graph.n_users));
  for (int u = 0; u < graph.n_users; ++u) {
    std::vector<double> h(static_cast<std::size_t>(cfg.d_g), 0.0);
    if (cfg.epochs == 0) {
      // untrained: the normalized initialization itself
      for (long long k = 0; k < cfg.d_g; ++k)
        h[static_cast<std::size_t>(k)] =
            table.value.at(u, static_cast<int>(k));
    } else {
      std::vector<int> ids = agg_group(graph, u);
      for (int id : ids)
        for (long long k = 0; k < cfg.d_g; ++k)
          h[static_cast<std::size_t>(k)] +=
              table.value.at(id, static_cast<int>(k));
      for (double& x : h) x /= static_cast<double>(ids.size());
    }
    normalize_in_place(h);
    out.rows[static_cast<std::size_t>(u)] = std::move(h);
  }
  return out;
}

// Mean positive-pair minus mean negative-pair cosine; the planted-structure
// diagnostic used by tests and acceptance.
inline double contrast_gap(const GraphEmbeddingTable& t,
                           const SocialGraph& graph, std::uint64_t seed) {
  double pos = 0.0;
  long long n_pos = 0;
  for (const auto& [key, rel] : graph.relationship) {
    (void)rel;
    pos += cosine(t.rows[static_cast<std::size_t>(key.first)],
                  t.rows[static_cast<std::size_t>(key.second)]);
    ++n_pos;
  }
  if (n_pos == 0) return 0.0;
  Rng rng(Rng::mix(seed, 0x6A2));
  double neg = 0.0;
  long long n_neg = 0;
  while (n_neg < std::max<long long>(200, n_pos)) {
    int u = rng.uniform_int(graph.n_users);
    int v = rng.uniform_int(graph.n_users);
    if (u == v || graph.has_edge(u, v)) continue;
    neg += cosine(t.rows[static_cast<std::size_t>(u)],
                  t.rows[static_cast<std::size_t>(v)]);
    ++n_neg;
  }
  return pos / static_cast<double>(n_pos) - neg / static_cast<double>(n_neg);
}

inline std::vector<double> aggregate_user_mm_embedding(
    const UserProfile& user, const std::vector<const VideoItem*>& watched,
    long long d_mm) {
  (void)user;
  std::vector<double> out(static_cast<std::size_t>(d_mm), 0.0);
  if (watched.empty()) return out;
  for (const VideoItem* v : watched) {
    if (static_cast<long long>(v->mm_embedding.size()) != d_mm)
      throw std::invalid_argument("mm dim mismatch");
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] += v->mm_embedding[k];
  }
  for (double& x : out) x /= static_cast<double>(watched.size());
  return out;
}

// Static per-user mm vectors, aggregated over train-split watches only so
// later splits cannot leak into the pretrained features.
inline std::vector<std::vector<double>> build_user_mm_table(const Dataset& ds) {
  std::vector<std::vector<const VideoItem*>> watched(ds.users.size());
  for (const ViewImpression& v : ds.split.train.views)
    watched[static_cast<std::size_t>(v.user_id)].push_back(
        &ds.videos[static_cast<std::size_t>(v.video_id)]);
  std::vector<std::vector<double>> out(ds.users.size());
  for (std::size_t u = 0; u < ds.users.size(); ++u)
    out[u] = aggregate_user_mm_embedding(ds.users[u], watched[u], ds.cfg.d_mm);
  return out;
}

// ---------------------------------------------------------------------------
// embedding table files: dense ordered ids, uniform dimension

inline void write_embedding_table(const std::string& path,
                                  const std::vector<std::vector<double>>& rows) {
  RecordWriter w(path);
  for (std::size_t id = 0; id < rows.size(); ++id) {
    Record r;
    r.add("id", static_cast<long long>(id));
    r.add_reals("vec", rows[id]);
    w.write(r);
  }
  w.close();
}

inline std::vector<std::vector<double>> read_embedding_table(
    const std::string& path) {
  std::vector<std::vector<double>> rows;
  RecordReader r(path);
  Record rec;
  while (r.next(rec)) {
    rec.check_keys({"id", "vec"});
    long long id = rec.get_int("id");
    if (id != static_cast<long long>(rows.size()))
      throw ParseError(rec.origin + ": ids must be dense and ordered");
    rows.push_back(rec.get_reals("vec"));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw ParseError(rec.origin + ": inconsistent vector dimension");
  }
  return rows;
}

// Attach pretrained vectors to the in-memory profiles.
inline void apply_pretrained(Dataset& ds,
                             const std::vector<std::vector<double>>& user_mm,
                             const GraphEmbeddingTable& gnn) {
  if (user_mm.size() != ds.users.size() ||
      gnn.rows.size() != ds.users.size())
    throw std::invalid_argument("pretrained tables must cover every user");
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    ds.users[u].mm_embedding = user_mm[u];
    ds.users[u].gnn_embedding = gnn.rows[u];
  }
}

}  // namespace unishare
