#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "unishare/data.hpp"
#include "unishare/tape.hpp"
#include "unishare/textio.hpp"

namespace unishare {

// The joint sharing model: one trunk fed by user, video and receiver-set
// blocks, with a video head (share-or-not) and a receiver head (who gets it).
// Receiver-side signals enter twice: as pooled representations and as the
// compressed enhancement scores (content match, relationship alignment,
// graph affinity).

inline constexpr const char* kGroupShared = "shared";
inline constexpr const char* kGroupUI = "u-i";
inline constexpr const char* kGroupVideoOnly = "video-only";
inline constexpr const char* kGroupReceiverOnly = "receiver-only";

struct ModelConfig {
  // bound to a concrete dataset
  int n_users = 0;
  int n_videos = 0;
  int n_categories = 0;
  int d_mm = 0;  // pretrained content embedding width
  int d_g = 0;   // pretrained graph embedding width

  // architecture
  int d_id = 16;
  int d_cat = 8;
  int d_att = 16;
  int compressor_hidden = 32;
  int compressor_out = 64;  // enhancement embeddings are compared in this space
  int trunk_h1 = 128;
  int trunk_h2 = 64;
  int head_hidden = 32;
  int max_history = 20;

  // simplified baselines
  int baseline_h1 = 64;
  int baseline_h2 = 32;
  int dcn_hidden = 32;
  bool dcn_use_item = false;

  // ablation switches; layout is unchanged so checkpoints stay compatible
  bool use_rca = true;  // off: s_llm and graph affinity features zeroed
  bool use_bim = true;  // off: target attention replaced by mean pooling

  int d_hist() const { return d_id + d_cat; }
  int pooled_dim() const { return d_id + d_hist(); }
  // [u_id | u_mm_c | u~ | i_id | i_cat | i_mm_c | pooled receivers | 6 aggregates]
  int feature_dim() const {
    return (d_id + compressor_out + d_hist()) + (d_id + d_cat + compressor_out) +
           pooled_dim() + 6;
  }

  static std::vector<std::string> keys() {
    return {"d_id",        "d_cat",       "d_att",       "compressor_hidden",
            "trunk_h1",    "trunk_h2",    "head_hidden", "max_history",
            "baseline_h1", "baseline_h2", "dcn_hidden",  "dcn_use_item",
            "use_rca",     "use_bim"};
  }

  void load(const Config& c) {
    d_id = static_cast<int>(c.get_int("d_id", d_id));
    d_cat = static_cast<int>(c.get_int("d_cat", d_cat));
    d_att = static_cast<int>(c.get_int("d_att", d_att));
    compressor_hidden = static_cast<int>(c.get_int("compressor_hidden", compressor_hidden));
    trunk_h1 = static_cast<int>(c.get_int("trunk_h1", trunk_h1));
    trunk_h2 = static_cast<int>(c.get_int("trunk_h2", trunk_h2));
    head_hidden = static_cast<int>(c.get_int("head_hidden", head_hidden));
    max_history = static_cast<int>(c.get_int("max_history", max_history));
    baseline_h1 = static_cast<int>(c.get_int("baseline_h1", baseline_h1));
    baseline_h2 = static_cast<int>(c.get_int("baseline_h2", baseline_h2));
    dcn_hidden = static_cast<int>(c.get_int("dcn_hidden", dcn_hidden));
    dcn_use_item = c.get_bool("dcn_use_item", dcn_use_item);
    use_rca = c.get_bool("use_rca", use_rca);
    use_bim = c.get_bool("use_bim", use_bim);
  }

  // Instance dims come from the dataset; the pretrained widths must already
  // be filled in (apply_pretrained) before a model can be shaped.
  void bind(const Dataset& ds) {
    n_users = static_cast<int>(ds.users.size());
    n_videos = static_cast<int>(ds.videos.size());
    n_categories = static_cast<int>(ds.categories.size());
    if (ds.users.empty() || ds.videos.empty())
      throw std::invalid_argument("model bind: empty dataset");
    d_mm = static_cast<int>(ds.videos[0].mm_embedding.size());
    d_g = static_cast<int>(ds.users[0].gnn_embedding.size());
  }

  void validate() const {
    auto pos = [](int v, const char* what) {
      if (v <= 0) throw std::invalid_argument(std::string("model config: ") + what +
                                              " must be positive");
    };
    pos(n_users, "n_users");
    pos(n_videos, "n_videos");
    pos(n_categories, "n_categories");
    pos(d_mm, "d_mm");
    pos(d_g, "d_g");
    pos(d_id, "d_id");
    pos(d_cat, "d_cat");
    pos(d_att, "d_att");
    pos(compressor_hidden, "compressor_hidden");
    pos(trunk_h1, "trunk_h1");
    pos(trunk_h2, "trunk_h2");
    pos(head_hidden, "head_hidden");
    pos(max_history, "max_history");
    pos(baseline_h1, "baseline_h1");
    pos(baseline_h2, "baseline_h2");
    pos(dcn_hidden, "dcn_hidden");
    if (compressor_out != 64)
      throw std::invalid_argument("model config: compressor output is fixed at 64");
  }
};

struct NamedParam {
  std::string name;
  Parameter* p = nullptr;
  std::string group;
};

struct UniShareParams {
  ModelConfig cfg;

  // u-i group: frozen while the receiver loss is backpropagated
  Parameter user_table, video_table, cat_table;
  Parameter u_attn_q, u_attn_k;
  Parameter trunk_w1, trunk_b1, trunk_w2, trunk_b2;
  // shared group: trained by both losses
  Parameter recv_table;
  Parameter v_attn_q, v_attn_k;
  Parameter mm_w1, mm_b1, mm_w2, mm_b2;
  Parameter gnn_w1, gnn_b1, gnn_w2, gnn_b2;
  // task heads
  Parameter vid_w1, vid_b1, vid_w2, vid_b2;
  Parameter rec_w1, rec_b1, rec_w2, rec_b2;

  explicit UniShareParams(ModelConfig c) : cfg(std::move(c)) {
    cfg.validate();
    int dh = cfg.d_hist(), fd = cfg.feature_dim();
    user_table = Parameter("user_id_table", Tensor({cfg.n_users, cfg.d_id}));
    video_table = Parameter("video_id_table", Tensor({cfg.n_videos, cfg.d_id}));
    cat_table = Parameter("category_table", Tensor({cfg.n_categories, cfg.d_cat}));
    u_attn_q = Parameter("u_attn_query", Tensor({dh, cfg.d_att}));
    u_attn_k = Parameter("u_attn_key", Tensor({dh, cfg.d_att}));
    trunk_w1 = Parameter("trunk_w1", Tensor({fd, cfg.trunk_h1}));
    trunk_b1 = Parameter("trunk_b1", Tensor({cfg.trunk_h1}));
    trunk_w2 = Parameter("trunk_w2", Tensor({cfg.trunk_h1, cfg.trunk_h2}));
    trunk_b2 = Parameter("trunk_b2", Tensor({cfg.trunk_h2}));
    recv_table = Parameter("receiver_id_table", Tensor({cfg.n_users, cfg.d_id}));
    v_attn_q = Parameter("v_attn_query", Tensor({dh, cfg.d_att}));
    v_attn_k = Parameter("v_attn_key", Tensor({dh, cfg.d_att}));
    mm_w1 = Parameter("mm_comp_w1", Tensor({cfg.d_mm, cfg.compressor_hidden}));
    mm_b1 = Parameter("mm_comp_b1", Tensor({cfg.compressor_hidden}));
    mm_w2 = Parameter("mm_comp_w2", Tensor({cfg.compressor_hidden, cfg.compressor_out}));
    mm_b2 = Parameter("mm_comp_b2", Tensor({cfg.compressor_out}));
    gnn_w1 = Parameter("gnn_comp_w1", Tensor({cfg.d_g, cfg.compressor_hidden}));
    gnn_b1 = Parameter("gnn_comp_b1", Tensor({cfg.compressor_hidden}));
    gnn_w2 = Parameter("gnn_comp_w2", Tensor({cfg.compressor_hidden, cfg.compressor_out}));
    gnn_b2 = Parameter("gnn_comp_b2", Tensor({cfg.compressor_out}));
    vid_w1 = Parameter("video_head_w1", Tensor({cfg.trunk_h2, cfg.head_hidden}));
    vid_b1 = Parameter("video_head_b1", Tensor({cfg.head_hidden}));
    vid_w2 = Parameter("video_head_w2", Tensor({cfg.head_hidden, 1}));
    vid_b2 = Parameter("video_head_b2", Tensor({1}));
    rec_w1 = Parameter("receiver_head_w1", Tensor({cfg.trunk_h2, cfg.head_hidden}));
    rec_b1 = Parameter("receiver_head_b1", Tensor({cfg.head_hidden}));
    rec_w2 = Parameter("receiver_head_w2", Tensor({cfg.head_hidden, 1}));
    rec_b2 = Parameter("receiver_head_b2", Tensor({1}));
  }

  // Embedding tables start uniform in [-0.05, 0.05]; every projection and MLP
  // weight is Kaiming-scaled; biases stay zero. Order below is the init order.
  void init(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0x30DE1ull));
    auto emb = [&](Parameter& p) {
      p = Parameter::uniform_init(p.name, p.value.shape, -0.05, 0.05, rng);
    };
    auto lin = [&](Parameter& p) {
      p = Parameter::kaiming_init(p.name, p.value.rows(), p.value.cols(), rng);
    };
    emb(user_table);
    emb(video_table);
    emb(cat_table);
    emb(recv_table);
    lin(u_attn_q);
    lin(u_attn_k);
    lin(v_attn_q);
    lin(v_attn_k);
    lin(mm_w1);
    lin(mm_w2);
    lin(gnn_w1);
    lin(gnn_w2);
    lin(trunk_w1);
    lin(trunk_w2);
    lin(vid_w1);
    lin(vid_w2);
    lin(rec_w1);
    lin(rec_w2);
  }

  // Canonical names and group tags live here, not on the Parameter objects,
  // so the audit can catch a renamed or rewired parameter.
  std::vector<NamedParam> named_params() {
    return {
        {"user_id_table", &user_table, kGroupUI},
        {"video_id_table", &video_table, kGroupUI},
        {"category_table", &cat_table, kGroupUI},
        {"u_attn_query", &u_attn_q, kGroupUI},
        {"u_attn_key", &u_attn_k, kGroupUI},
        {"trunk_w1", &trunk_w1, kGroupUI},
        {"trunk_b1", &trunk_b1, kGroupUI},
        {"trunk_w2", &trunk_w2, kGroupUI},
        {"trunk_b2", &trunk_b2, kGroupUI},
        {"receiver_id_table", &recv_table, kGroupShared},
        {"v_attn_query", &v_attn_q, kGroupShared},
        {"v_attn_key", &v_attn_k, kGroupShared},
        {"mm_comp_w1", &mm_w1, kGroupShared},
        {"mm_comp_b1", &mm_b1, kGroupShared},
        {"mm_comp_w2", &mm_w2, kGroupShared},
        {"mm_comp_b2", &mm_b2, kGroupShared},
        {"gnn_comp_w1", &gnn_w1, kGroupShared},
        {"gnn_comp_b1", &gnn_b1, kGroupShared},
        {"gnn_comp_w2", &gnn_w2, kGroupShared},
        {"gnn_comp_b2", &gnn_b2, kGroupShared},
        {"video_head_w1", &vid_w1, kGroupVideoOnly},
        {"video_head_b1", &vid_b1, kGroupVideoOnly},
        {"video_head_w2", &vid_w2, kGroupVideoOnly},
        {"video_head_b2", &vid_b2, kGroupVideoOnly},
        {"receiver_head_w1", &rec_w1, kGroupReceiverOnly},
        {"receiver_head_b1", &rec_b1, kGroupReceiverOnly},
        {"receiver_head_w2", &rec_w2, kGroupReceiverOnly},
        {"receiver_head_b2", &rec_b2, kGroupReceiverOnly},
    };
  }

  // Every parameter must sit in exactly one group, under its own name.
  void audit_groups() {
    std::set<std::string> names;
    std::set<const Parameter*> ptrs;
    std::set<std::string> tags = {kGroupShared, kGroupUI, kGroupVideoOnly, kGroupReceiverOnly};
    for (const NamedParam& np : named_params()) {
      if (np.name.empty() || np.p == nullptr)
        throw std::logic_error("param audit: unnamed or null parameter");
      if (np.p->name != np.name)
        throw std::logic_error("param audit: name mismatch for " + np.name);
      if (!names.insert(np.name).second)
        throw std::logic_error("param audit: duplicate name " + np.name);
      if (!ptrs.insert(np.p).second)
        throw std::logic_error("param audit: parameter listed twice: " + np.name);
      if (tags.count(np.group) == 0)
        throw std::logic_error("param audit: unknown group " + np.group);
    }
    if (names.size() != 28) throw std::logic_error("param audit: wrong parameter count");
  }

  std::set<std::string> ui_names() {
    std::set<std::string> out;
    for (const NamedParam& np : named_params())
      if (np.group == kGroupUI) out.insert(np.name);
    return out;
  }

  // Gradient filter for the receiver-loss pass: the u-i group stays frozen.
  Tape::ParamFilter receiver_pass_filter() {
    auto skip = ui_names();
    return [skip](const Parameter& p) { return skip.count(p.name) == 0; };
  }
};

// ---- as-of histories ----

// Per-user event lists over all three splits; causality comes from the
// strict `t_event < t` cut at query time, never from the split boundary.
struct HistoryIndex {
  std::vector<std::vector<std::pair<long long, int>>> share;    // initiated
  std::vector<std::vector<std::pair<long long, int>>> consume;  // received or watched

  static HistoryIndex build(const Dataset& ds) {
    HistoryIndex idx;
    idx.share.resize(ds.users.size());
    idx.consume.resize(ds.users.size());
    auto eat = [&](const LogSlice& s) {
      for (const ShareEvent& e : s.shares) {
        idx.share[e.user_id].push_back({e.timestamp, e.video_id});
        idx.consume[e.receiver_id].push_back({e.timestamp, e.video_id});
      }
      for (const ViewImpression& v : s.views)
        idx.consume[v.user_id].push_back({v.timestamp, v.video_id});
    };
    eat(ds.split.train);
    eat(ds.split.validation);
    eat(ds.split.test);
    for (auto& lst : idx.share) std::sort(lst.begin(), lst.end());
    for (auto& lst : idx.consume) std::sort(lst.begin(), lst.end());
    return idx;
  }

  static std::vector<int> before(const std::vector<std::pair<long long, int>>& lst,
                                 long long t, int cap) {
    auto it = std::lower_bound(lst.begin(), lst.end(),
                               std::make_pair(t, std::numeric_limits<int>::min()));
    auto first = it;
    for (int k = 0; k < cap && first != lst.begin(); ++k) --first;
    std::vector<int> out;
    out.reserve(static_cast<size_t>(it - first));
    for (auto p = first; p != it; ++p) out.push_back(p->second);
    return out;
  }

  std::vector<int> share_before(int u, long long t, int cap) const {
    return before(share[u], t, cap);
  }
  std::vector<int> consume_before(int u, long long t, int cap) const {
    return before(consume[u], t, cap);
  }
  // Most recent initiated-share time strictly before t, or -1.
  long long last_share_before(int u, long long t) const {
    auto it = std::lower_bound(share[u].begin(), share[u].end(),
                               std::make_pair(t, std::numeric_limits<int>::min()));
    return it == share[u].begin() ? -1 : std::prev(it)->first;
  }
};

// ---- sample inputs ----

struct HistRef {
  int video = 0;
  int cat = 0;
};

struct ReceiverInput {
  int id = -1;
  std::vector<HistRef> hist;  // consumption history, chronological
  const std::vector<double>* mm = nullptr;
  const std::vector<double>* gnn = nullptr;
  double s_llm = 0.5;
};

struct SampleInput {
  int user = -1;
  int video = -1;
  int category = -1;
  long long t = 0;
  std::vector<HistRef> u_hist;  // share-initiation history, chronological
  const std::vector<double>* u_mm = nullptr;
  const std::vector<double>* u_gnn = nullptr;
  const std::vector<double>* i_mm = nullptr;
  std::vector<ReceiverInput> receivers;
};

inline int category_index(const Dataset& ds, const std::string& name) {
  for (size_t i = 0; i < ds.categories.size(); ++i)
    if (ds.categories[i] == name) return static_cast<int>(i);
  throw std::out_of_range("unknown category " + name);
}

// Turns (user, video, t, panel) into a self-contained model sample with
// as-of histories and the per-receiver alignment scores resolved.
struct SampleFactory {
  const Dataset* ds = nullptr;
  const HistoryIndex* idx = nullptr;
  std::vector<int> video_cat;
  int max_history = 20;

  SampleFactory(const Dataset& d, const HistoryIndex& ix, int max_hist)
      : ds(&d), idx(&ix), max_history(max_hist) {
    video_cat.reserve(d.videos.size());
    for (const VideoItem& v : d.videos) video_cat.push_back(category_index(d, v.category));
  }

  std::vector<HistRef> refs(std::vector<int> vids) const {
    std::vector<HistRef> out;
    out.reserve(vids.size());
    for (int v : vids) out.push_back({v, video_cat[v]});
    return out;
  }

  SampleInput make(int user, int video, long long t, const std::vector<int>& panel) const {
    SampleInput s;
    s.user = user;
    s.video = video;
    s.category = video_cat[video];
    s.t = t;
    s.u_hist = refs(idx->share_before(user, t, max_history));
    s.u_mm = &ds->users[user].mm_embedding;
    s.u_gnn = &ds->users[user].gnn_embedding;
    s.i_mm = &ds->videos[video].mm_embedding;
    s.receivers.reserve(panel.size());
    for (int v : panel) {
      ReceiverInput r;
      r.id = v;
      r.hist = refs(idx->consume_before(v, t, max_history));
      r.mm = &ds->users[v].mm_embedding;
      r.gnn = &ds->users[v].gnn_embedding;
      RelationshipType rel = ds->graph.has_edge(user, v) ? ds->graph.rel_of(user, v)
                                                         : RelationshipType::Unknown;
      r.s_llm = ds->alignment.lookup(ds->videos[video].category, rel);
      s.receivers.push_back(std::move(r));
    }
    return s;
  }

  // The panel that the sharing sheet would show at time t: friends ranked by
  // their own most recent share, never-shared friends after (ascending id).
  std::vector<int> recent_panel(int user, long long t, int cap = 20) const {
    std::vector<std::pair<long long, int>> ranked;
    for (int f : ds->graph.adjacency[user])
      ranked.push_back({idx->last_share_before(f, t), f});
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<int> out;
    for (const auto& [lt, f] : ranked) {
      (void)lt;
      if (static_cast<int>(out.size()) == cap) break;
      out.push_back(f);
    }
    return out;
  }
};

// ---- tape-level ops ----

// alpha_j = softmax_j(<W_q t, W_k h_j> / sqrt(d_att)); returns sum_j alpha_j h_j.
// An empty history yields the zero vector of the history width.
inline Var target_attention(Tape& t, Var target, Var hist, Parameter& wq, Parameter& wk) {
  const Tensor& h = t.val(hist);
  if (h.rank() != 2) throw std::invalid_argument("target_attention: history must be 2-D");
  if (h.rows() == 0) return t.input(Tensor({h.cols()}));
  int d_att = wq.value.cols();
  Var q = t.matmul(target, t.param(wq));
  Var k = t.matmul(hist, t.param(wk));
  Var scores = t.scale(t.matmul(k, q), 1.0 / std::sqrt(static_cast<double>(d_att)));
  Var alpha = t.softmax(scores);
  return t.matmul(alpha, hist);
}

enum class HeadKind { kVideo, kReceiver };

// Trunk + selected head over a stack of feature rows; returns [n] probabilities.
inline Var unishare_probs(Tape& t, UniShareParams& P, const std::vector<Var>& rows,
                          HeadKind head) {
  Var x = t.concat_rows(rows);
  Var h1 = t.relu(t.add_rowwise(t.matmul(x, t.param(P.trunk_w1)), t.param(P.trunk_b1)));
  Var h2 = t.relu(t.add_rowwise(t.matmul(h1, t.param(P.trunk_w2)), t.param(P.trunk_b2)));
  bool vid = head == HeadKind::kVideo;
  Parameter& w1 = vid ? P.vid_w1 : P.rec_w1;
  Parameter& b1 = vid ? P.vid_b1 : P.rec_b1;
  Parameter& w2 = vid ? P.vid_w2 : P.rec_w2;
  Parameter& b2 = vid ? P.vid_b2 : P.rec_b2;
  Var hh = t.relu(t.add_rowwise(t.matmul(h2, t.param(w1)), t.param(b1)));
  Var logit = t.reshape_vec(t.matmul(hh, t.param(w2)));
  return t.clamp_unit(t.sigmoid(t.add(logit, t.param(b2))));
}

// Builds feature rows for one tape, memoizing the compressed pretrained
// embeddings by entity id (they repeat heavily across a batch).
class FeatureBuilder {
 public:
  FeatureBuilder(Tape& t, UniShareParams& P) : t_(t), P_(P) {}

  struct Blocks {
    Var u_id, u_mm_c, target, u_tilde, i_id, i_cat, i_mm_c;
  };

  Blocks base_blocks(const SampleInput& s) {
    Blocks b;
    b.u_id = t_.lookup_row(P_.user_table, s.user);
    b.u_mm_c = user_mm_c(s.user, s.u_mm);
    b.i_id = t_.lookup_row(P_.video_table, s.video);
    b.i_cat = t_.lookup_row(P_.cat_table, s.category);
    b.target = t_.concat({b.i_id, b.i_cat});
    b.u_tilde = attention(P_.u_attn_q, P_.u_attn_k, b.target, s.u_hist);
    b.i_mm_c = video_mm_c(s.video, s.i_mm);
    return b;
  }

  struct RecvRow {
    Var repr;  // [v_id | v~]
    Var s_match, s_llm, s_gnn;
  };

  RecvRow recv_row(const SampleInput& s, const Blocks& b, const ReceiverInput& r) {
    RecvRow row;
    Var v_id = t_.lookup_row(P_.recv_table, r.id);
    Var v_tilde = attention(P_.v_attn_q, P_.v_attn_k, b.target, r.hist);
    row.repr = t_.concat({v_id, v_tilde});
    row.s_match = t_.dot(b.i_mm_c, user_mm_c(r.id, r.mm));
    if (P_.cfg.use_rca) {
      row.s_llm = t_.input_scalar(r.s_llm);
      row.s_gnn = t_.dot(user_gnn_c(s.user, s.u_gnn), user_gnn_c(r.id, r.gnn));
    } else {
      // relationship-content alignment off: both scores zeroed, and the gnn
      // compressor never enters the graph
      row.s_llm = t_.input_scalar(0.0);
      row.s_gnn = t_.input_scalar(0.0);
    }
    return row;
  }

  Var video_features(const SampleInput& s) {
    Blocks b = base_blocks(s);
    // receivers pooled in id order so the sum is exactly permutation invariant
    std::vector<int> order(s.receivers.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int c) { return s.receivers[a].id < s.receivers[c].id; });
    std::vector<Var> reprs;
    std::vector<Var> sm, sl, sg;
    for (int k : order) {
      RecvRow row = recv_row(s, b, s.receivers[k]);
      reprs.push_back(row.repr);
      sm.push_back(row.s_match);
      sl.push_back(row.s_llm);
      sg.push_back(row.s_gnn);
    }
    Var pooled = reprs.empty() ? t_.input(Tensor({P_.cfg.pooled_dim()})) : t_.add_many(reprs);
    Var aggr;
    if (sm.empty()) {
      aggr = t_.input(Tensor({6}));
    } else {
      Var smv = t_.concat(sm), slv = t_.concat(sl), sgv = t_.concat(sg);
      aggr = t_.concat({t_.reduce_max(smv), t_.reduce_max(slv), t_.reduce_max(sgv),
                        t_.mean_all(smv), t_.mean_all(slv), t_.mean_all(sgv)});
    }
    return assemble(b, pooled, aggr);
  }

  // Same layout with the singleton receiver set {v}: the pooled block is v's
  // own representation and max == mean == the raw enhancement scores.
  Var receiver_features(const SampleInput& s, const ReceiverInput& r) {
    Blocks b = base_blocks(s);
    return receiver_row(s, b, r);
  }

  // One row per candidate in s.receivers, sharing a single set of base
  // blocks (the u-side attention is the expensive part of a candidate scan).
  std::vector<Var> receiver_feature_set(const SampleInput& s) {
    Blocks b = base_blocks(s);
    std::vector<Var> rows;
    rows.reserve(s.receivers.size());
    for (const ReceiverInput& r : s.receivers) rows.push_back(receiver_row(s, b, r));
    return rows;
  }

  Var compress_mm(Var raw) { return compress(raw, P_.mm_w1, P_.mm_b1, P_.mm_w2, P_.mm_b2); }
  Var compress_gnn(Var raw) { return compress(raw, P_.gnn_w1, P_.gnn_b1, P_.gnn_w2, P_.gnn_b2); }

 private:
  Var assemble(const Blocks& b, Var pooled, Var aggr) {
    return t_.concat({b.u_id, b.u_mm_c, b.u_tilde, b.i_id, b.i_cat, b.i_mm_c, pooled, aggr});
  }

  Var receiver_row(const SampleInput& s, const Blocks& b, const ReceiverInput& r) {
    RecvRow row = recv_row(s, b, r);
    Var aggr = t_.concat({row.s_match, row.s_llm, row.s_gnn,  //
                          row.s_match, row.s_llm, row.s_gnn});
    return assemble(b, row.repr, aggr);
  }

  Var compress(Var raw, Parameter& w1, Parameter& b1, Parameter& w2, Parameter& b2) {
    Var h = t_.relu(t_.add(t_.matmul(raw, t_.param(w1)), t_.param(b1)));
    return t_.add(t_.matmul(h, t_.param(w2)), t_.param(b2));
  }

  Var raw_vec(const std::vector<double>* v, int want) {
    if (v == nullptr || v->empty()) return t_.input(Tensor({want}));
    if (static_cast<int>(v->size()) != want)
      throw std::invalid_argument("pretrained embedding width mismatch");
    return t_.input(Tensor({want}, *v));
  }

  Var attention(Parameter& wq, Parameter& wk, Var target, const std::vector<HistRef>& hist) {
    if (hist.empty()) return t_.input(Tensor({P_.cfg.d_hist()}));
    std::vector<int> vids, cats;
    vids.reserve(hist.size());
    cats.reserve(hist.size());
    for (const HistRef& h : hist) {
      vids.push_back(h.video);
      cats.push_back(h.cat);
    }
    Var rows = t_.concat_cols(t_.lookup(P_.video_table, vids), t_.lookup(P_.cat_table, cats));
    if (!P_.cfg.use_bim)  // interest matching off: plain history mean, no target
      return t_.scale(t_.sum_pool(rows), 1.0 / static_cast<double>(hist.size()));
    return target_attention(t_, target, rows, wq, wk);
  }

  Var user_mm_c(int id, const std::vector<double>* v) {
    return cached(mm_u_, id, [&] { return compress_mm(raw_vec(v, P_.cfg.d_mm)); });
  }
  Var video_mm_c(int id, const std::vector<double>* v) {
    return cached(mm_v_, id, [&] { return compress_mm(raw_vec(v, P_.cfg.d_mm)); });
  }
  Var user_gnn_c(int id, const std::vector<double>* v) {
    return cached(gnn_u_, id, [&] { return compress_gnn(raw_vec(v, P_.cfg.d_g)); });
  }

  template <typename F>
  Var cached(std::unordered_map<int, int>& m, int id, F make) {
    auto it = m.find(id);
    if (it != m.end()) return Var{it->second};
    Var v = make();
    m.emplace(id, v.id);
    return v;
  }

  Tape& t_;
  UniShareParams& P_;
  std::unordered_map<int, int> mm_u_, mm_v_, gnn_u_;
};

// Content-match score: dot product of the two compressed embeddings.
inline Var match_score_mm(Tape& t, UniShareParams& P, const std::vector<double>& a,
                          const std::vector<double>& b) {
  FeatureBuilder fb(t, P);
  Var ca = fb.compress_mm(t.input(Tensor({static_cast<int>(a.size())}, a)));
  Var cb = fb.compress_mm(t.input(Tensor({static_cast<int>(b.size())}, b)));
  return t.dot(ca, cb);
}

// f1: share probability of (u, i) given u's candidate receiver panel.
inline Var forward_video(Tape& t, UniShareParams& P, const SampleInput& s) {
  FeatureBuilder fb(t, P);
  return t.sum_all(unishare_probs(t, P, {fb.video_features(s)}, HeadKind::kVideo));
}

// f2: probability that v is the chosen receiver for (u, i).
inline Var forward_receiver(Tape& t, UniShareParams& P, const SampleInput& s,
                            const ReceiverInput& r) {
  FeatureBuilder fb(t, P);
  return t.sum_all(unishare_probs(t, P, {fb.receiver_features(s, r)}, HeadKind::kReceiver));
}

// Diagnostic only: sum of f2 over the panel, comparable against f1.
inline Var sum_f2_diagnostic(Tape& t, UniShareParams& P, const SampleInput& s) {
  if (s.receivers.empty()) return t.input_scalar(0.0);
  FeatureBuilder fb(t, P);
  std::vector<Var> rows;
  rows.reserve(s.receivers.size());
  for (const ReceiverInput& r : s.receivers) rows.push_back(fb.receiver_features(s, r));
  return t.sum_all(unishare_probs(t, P, rows, HeadKind::kReceiver));
}

// ---- simplified baselines (raw id features only, no pretrained inputs) ----

struct BaselineVideoParams {
  ModelConfig cfg;
  Parameter user_table, video_table, cat_table;
  Parameter w1, b1, w2, b2, w3, b3;

  explicit BaselineVideoParams(ModelConfig c) : cfg(std::move(c)) {
    cfg.validate();
    int in = 2 * cfg.d_id + cfg.d_cat;
    user_table = Parameter("user_id_table", Tensor({cfg.n_users, cfg.d_id}));
    video_table = Parameter("video_id_table", Tensor({cfg.n_videos, cfg.d_id}));
    cat_table = Parameter("category_table", Tensor({cfg.n_categories, cfg.d_cat}));
    w1 = Parameter("mlp_w1", Tensor({in, cfg.baseline_h1}));
    b1 = Parameter("mlp_b1", Tensor({cfg.baseline_h1}));
    w2 = Parameter("mlp_w2", Tensor({cfg.baseline_h1, cfg.baseline_h2}));
    b2 = Parameter("mlp_b2", Tensor({cfg.baseline_h2}));
    w3 = Parameter("mlp_w3", Tensor({cfg.baseline_h2, 1}));
    b3 = Parameter("mlp_b3", Tensor({1}));
  }

  void init(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0xBA5E1ull));
    user_table = Parameter::uniform_init(user_table.name, user_table.value.shape, -0.05, 0.05, rng);
    video_table =
        Parameter::uniform_init(video_table.name, video_table.value.shape, -0.05, 0.05, rng);
    cat_table = Parameter::uniform_init(cat_table.name, cat_table.value.shape, -0.05, 0.05, rng);
    w1 = Parameter::kaiming_init(w1.name, w1.value.rows(), w1.value.cols(), rng);
    w2 = Parameter::kaiming_init(w2.name, w2.value.rows(), w2.value.cols(), rng);
    w3 = Parameter::kaiming_init(w3.name, w3.value.rows(), w3.value.cols(), rng);
  }

  std::vector<NamedParam> named_params() {
    std::vector<NamedParam> out;
    for (Parameter* p : {&user_table, &video_table, &cat_table, &w1, &b1, &w2, &b2, &w3, &b3})
      out.push_back({p->name, p, kGroupShared});
    return out;
  }
};

// Single-task share tower over (u, i) alone; receiver context never enters.
inline Var forward_baseline_video(Tape& t, BaselineVideoParams& B, const SampleInput& s) {
  Var f = t.concat({t.lookup_row(B.user_table, s.user), t.lookup_row(B.video_table, s.video),
                    t.lookup_row(B.cat_table, s.category)});
  Var h1 = t.relu(t.add(t.matmul(f, t.param(B.w1)), t.param(B.b1)));
  Var h2 = t.relu(t.add(t.matmul(h1, t.param(B.w2)), t.param(B.b2)));
  Var logit = t.add(t.matmul(h2, t.param(B.w3)), t.param(B.b3));
  return t.clamp_unit(t.sigmoid(t.sum_all(logit)));
}

struct BaselineReceiverParams {
  ModelConfig cfg;
  Parameter user_table, recv_table, cat_table;
  Parameter cross_w1, cross_b1, cross_w2, cross_b2;
  Parameter w1, b1, w2, b2;

  int x_dim() const { return cfg.dcn_use_item ? 2 * cfg.d_id + cfg.d_cat : 2 * cfg.d_id; }

  explicit BaselineReceiverParams(ModelConfig c) : cfg(std::move(c)) {
    cfg.validate();
    int d = x_dim();
    user_table = Parameter("user_id_table", Tensor({cfg.n_users, cfg.d_id}));
    recv_table = Parameter("receiver_id_table", Tensor({cfg.n_users, cfg.d_id}));
    cat_table = Parameter("category_table", Tensor({cfg.n_categories, cfg.d_cat}));
    cross_w1 = Parameter("cross_w1", Tensor({d, d}));
    cross_b1 = Parameter("cross_b1", Tensor({d}));
    cross_w2 = Parameter("cross_w2", Tensor({d, d}));
    cross_b2 = Parameter("cross_b2", Tensor({d}));
    w1 = Parameter("mlp_w1", Tensor({d, cfg.dcn_hidden}));
    b1 = Parameter("mlp_b1", Tensor({cfg.dcn_hidden}));
    w2 = Parameter("mlp_w2", Tensor({cfg.dcn_hidden, 1}));
    b2 = Parameter("mlp_b2", Tensor({1}));
  }

  void init(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0xBA5E2ull));
    user_table = Parameter::uniform_init(user_table.name, user_table.value.shape, -0.05, 0.05, rng);
    recv_table = Parameter::uniform_init(recv_table.name, recv_table.value.shape, -0.05, 0.05, rng);
    cat_table = Parameter::uniform_init(cat_table.name, cat_table.value.shape, -0.05, 0.05, rng);
    cross_w1 = Parameter::kaiming_init(cross_w1.name, cross_w1.value.rows(), cross_w1.value.cols(), rng);
    cross_w2 = Parameter::kaiming_init(cross_w2.name, cross_w2.value.rows(), cross_w2.value.cols(), rng);
    w1 = Parameter::kaiming_init(w1.name, w1.value.rows(), w1.value.cols(), rng);
    w2 = Parameter::kaiming_init(w2.name, w2.value.rows(), w2.value.cols(), rng);
  }

  std::vector<NamedParam> named_params() {
    std::vector<NamedParam> out;
    for (Parameter* p : {&user_table, &recv_table, &cat_table, &cross_w1, &cross_b1, &cross_w2,
                         &cross_b2, &w1, &b1, &w2, &b2})
      out.push_back({p->name, p, kGroupShared});
    return out;
  }
};

// One explicit cross layer: x_{l+1} = x0 * (W x_l + b) + x_l (elementwise product).
inline Var dcn_cross(Tape& t, Var x0, Var x, Parameter& w, Parameter& b) {
  Var lin = t.add(t.matmul(t.param(w), x), t.param(b));
  return t.add(t.mul(x0, lin), x);
}

// DCN-style receiver baseline over raw (u, v) id features, with the item
// category mixed in only when the config asks for it.
inline Var forward_baseline_receiver(Tape& t, BaselineReceiverParams& B, const SampleInput& s,
                                     const ReceiverInput& r) {
  std::vector<Var> parts = {t.lookup_row(B.user_table, s.user),
                            t.lookup_row(B.recv_table, r.id)};
  if (B.cfg.dcn_use_item) parts.push_back(t.lookup_row(B.cat_table, s.category));
  Var x0 = t.concat(parts);
  Var x = dcn_cross(t, x0, x0, B.cross_w1, B.cross_b1);
  x = dcn_cross(t, x0, x, B.cross_w2, B.cross_b2);
  Var h = t.relu(t.add(t.matmul(x, t.param(B.w1)), t.param(B.b1)));
  Var logit = t.add(t.matmul(h, t.param(B.w2)), t.param(B.b2));
  return t.clamp_unit(t.sigmoid(t.sum_all(logit)));
}

// ---- checkpoints ----

// Named blocks, each tagged with its freeze group; loading is strict about
// order, names, shapes and tags so a checkpoint can never silently shift.
inline void save_params(const std::string& path, const std::string& kind,
                        const std::vector<NamedParam>& ps) {
  RecordWriter w(path);
  Record head;
  head.add("kind", kind);
  head.add("format", 1);
  head.add("params", static_cast<long long>(ps.size()));
  w.write(head);
  for (const NamedParam& np : ps) {
    const Tensor& tv = np.p->value;
    Record r;
    r.add("param", np.name);
    r.add("group", np.group);
    if (tv.rank() == 2) {
      r.add("rows", tv.rows());
      r.add("cols", tv.cols());
      w.write(r);
      for (int i = 0; i < tv.rows(); ++i) {
        Record row;
        row.add("r", i);
        std::vector<double> vals(tv.data.begin() + static_cast<size_t>(i) * tv.cols(),
                                 tv.data.begin() + static_cast<size_t>(i + 1) * tv.cols());
        row.add_reals("v", vals);
        w.write(row);
      }
    } else {
      r.add("n", static_cast<long long>(tv.size()));
      w.write(r);
      Record row;
      row.add_reals("v", tv.data);
      w.write(row);
    }
  }
  w.close();
}

inline void load_params(const std::string& path, const std::string& kind,
                        std::vector<NamedParam> ps) {
  RecordReader rd(path);
  Record rec;
  auto need = [&](const char* what) {
    if (!rd.next(rec))
      throw ParseError(path + ": truncated checkpoint, expected " + std::string(what));
  };
  need("header");
  rec.check_keys({"kind", "format", "params"});
  if (rec.get("kind") != kind)
    throw ParseError(rec.origin + ": checkpoint kind '" + rec.get("kind") + "', expected '" +
                     kind + "'");
  if (rec.get_int("format") != 1)
    throw ParseError(rec.origin + ": unsupported checkpoint format");
  if (rec.get_int("params") != static_cast<long long>(ps.size()))
    throw ParseError(rec.origin + ": checkpoint has " + rec.get("params") + " params, expected " +
                     std::to_string(ps.size()));
  for (NamedParam& np : ps) {
    need("param header");
    rec.check_keys({"param", "group", "rows", "cols", "n"});
    if (rec.get("param") != np.name)
      throw ParseError(rec.origin + ": expected param '" + np.name + "', found '" +
                       rec.get("param") + "'");
    if (rec.get("group") != np.group)
      throw ParseError(rec.origin + ": param '" + np.name + "' tagged '" + rec.get("group") +
                       "', expected '" + np.group + "'");
    Tensor& tv = np.p->value;
    if (tv.rank() == 2) {
      if (rec.get_int("rows") != tv.rows() || rec.get_int("cols") != tv.cols())
        throw ParseError(rec.origin + ": shape mismatch for '" + np.name + "'");
      for (int i = 0; i < tv.rows(); ++i) {
        need("row");
        rec.check_keys({"r", "v"});
        if (rec.get_int("r") != i)
          throw ParseError(rec.origin + ": out-of-order row for '" + np.name + "'");
        std::vector<double> vals = rec.get_reals("v");
        if (static_cast<int>(vals.size()) != tv.cols())
          throw ParseError(rec.origin + ": row width mismatch for '" + np.name + "'");
        for (int c = 0; c < tv.cols(); ++c) tv.at(i, c) = vals[c];
      }
    } else {
      if (rec.get_int("n") != static_cast<long long>(tv.size()))
        throw ParseError(rec.origin + ": shape mismatch for '" + np.name + "'");
      need("values");
      rec.check_keys({"v"});
      std::vector<double> vals = rec.get_reals("v");
      if (vals.size() != tv.data.size())
        throw ParseError(rec.origin + ": value count mismatch for '" + np.name + "'");
      tv.data = std::move(vals);
    }
    np.p->zero_grad();
  }
  if (rd.next(rec)) throw ParseError(rec.origin + ": trailing records in checkpoint");
}

inline void save_checkpoint(UniShareParams& P, const std::string& path) {
  save_params(path, "unishare", P.named_params());
}
inline void load_checkpoint(UniShareParams& P, const std::string& path) {
  load_params(path, "unishare", P.named_params());
}

}  // namespace unishare
