#pragma once
// Hierarchical negative sampling, the joint objective
//   L_total = L_video + alpha * L_receiver,
// selective u-i freezing on the receiver pass, and the training loops for
// the joint model and the two separate baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "unishare/data.hpp"
#include "unishare/metrics.hpp"
#include "unishare/model.hpp"
#include "unishare/textio.hpp"

namespace unishare {

struct TrainConfig {
  double learning_rate = 0.001;  // must come from the tuning grid
  double alpha = 2.0;
  int batch_size = 64;
  int epochs = 3;
  double hard_ratio = 0.5;
  int negatives = 19;  // attempted per positive; panel cap 20 implies <= 19
  std::uint64_t seed = 1;
  bool rca = true;
  bool bim = true;
  bool hns = true;

  // desk-scale budget knobs
  int max_video_samples = 0;  // 0 = every exposure
  int max_recv_samples = 0;   // 0 = every share panel
  int val_max_samples = 4000;
  int panel_cap = 20;  // V_u size when reconstructing panels for the video task
  std::string select = "val_gauc";  // or "last"

  static std::vector<std::string> keys() {
    return {"learning_rate", "alpha",   "batch_size",        "epochs",
            "hard_ratio",    "negatives", "seed",            "rca",
            "bim",           "hns",     "max_video_samples", "max_recv_samples",
            "val_max_samples", "panel_cap", "select"};
  }

  static TrainConfig load(const Config& c) {
    TrainConfig t;
    t.learning_rate = c.get_real("learning_rate", t.learning_rate);
    t.alpha = c.get_real("alpha", t.alpha);
    t.batch_size = static_cast<int>(c.get_int("batch_size", t.batch_size));
    t.epochs = static_cast<int>(c.get_int("epochs", t.epochs));
    t.hard_ratio = c.get_real("hard_ratio", t.hard_ratio);
    t.negatives = static_cast<int>(c.get_int("negatives", t.negatives));
    t.seed = c.get_uint("seed", t.seed);
    t.rca = c.get_bool("rca", t.rca);
    t.bim = c.get_bool("bim", t.bim);
    t.hns = c.get_bool("hns", t.hns);
    t.max_video_samples = static_cast<int>(c.get_int("max_video_samples", t.max_video_samples));
    t.max_recv_samples = static_cast<int>(c.get_int("max_recv_samples", t.max_recv_samples));
    t.val_max_samples = static_cast<int>(c.get_int("val_max_samples", t.val_max_samples));
    t.panel_cap = static_cast<int>(c.get_int("panel_cap", t.panel_cap));
    t.select = c.get_str("select", t.select);
    return t;
  }

  void validate() const {
    const double grid[] = {0.005, 0.003, 0.001, 0.0005, 0.0001};
    bool on_grid = false;
    for (double g : grid) on_grid = on_grid || learning_rate == g;
    if (!on_grid)
      throw std::invalid_argument(
          "train config: learning_rate must be one of 0.005, 0.003, 0.001, 0.0005, 0.0001");
    if (!(alpha > 0.0)) throw std::invalid_argument("train config: alpha must be positive");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
    if (hard_ratio < 0.0 || hard_ratio > 1.0)
      throw std::invalid_argument("train config: hard_ratio must be in [0, 1]");
    if (negatives < 0 || negatives > 19)
      throw std::invalid_argument("train config: negatives must be in [0, 19]");
    if (panel_cap < 1 || panel_cap > 20)
      throw std::invalid_argument("train config: panel_cap must be in [1, 20]");
    if (max_video_samples < 0 || max_recv_samples < 0 || val_max_samples < 0)
      throw std::invalid_argument("train config: sample caps must be >= 0");
    if (select != "val_gauc" && select != "last")
      throw std::invalid_argument("train config: select must be val_gauc or last");
  }
};

// Two-tier negative sampling: hard negatives from the user's historical
// receivers, easy negatives uniformly from the rest of the friend list.
// Every (epoch, sample) pair gets its own derived stream so draws are
// reproducible independent of batch boundaries.
class NegativeSampler {
 public:
  NegativeSampler(const Dataset& ds, double hard_ratio, std::uint64_t seed)
      : graph_(&ds.graph), hard_ratio_(hard_ratio), seed_(seed) {
    hist_.resize(ds.graph.n_users);
    for (const ShareEvent& e : ds.split.train.shares) hist_[e.user_id].push_back(e.receiver_id);
    for (auto& h : hist_) {
      std::sort(h.begin(), h.end());
      h.erase(std::unique(h.begin(), h.end()), h.end());
    }
  }

  std::vector<int> sample(int u, int positive, int want, long long epoch,
                          long long idx) const {
    Rng rng(Rng::mix(seed_, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx)));
    std::vector<int> out;
    want = std::min(want, 19);  // |{positive} ∪ negatives| <= 20
    if (want <= 0) return out;
    int n_hard = static_cast<int>(std::lround(hard_ratio_ * want));
    draw(hist_[u], positive, out, n_hard, rng);
    draw(graph_->adjacency[u], positive, out, want, rng);
    return out;
  }

  // w/o-HNS regime: same count, uniform over friends, no hard tier
  std::vector<int> sample_uniform(int u, int positive, int want, long long epoch,
                                  long long idx) const {
    Rng rng(Rng::mix(seed_, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx)));
    std::vector<int> out;
    want = std::min(want, 19);
    if (want <= 0) return out;
    draw(graph_->adjacency[u], positive, out, want, rng);
    return out;
  }

  const std::vector<int>& historical_receivers(int u) const { return hist_[u]; }

 private:
  // Without-replacement draw from `pool` minus {positive} minus `out`,
  // topping `out` up to `target` (or until the pool runs dry).
  static void draw(const std::vector<int>& pool, int positive, std::vector<int>& out,
                   int target, Rng& rng) {
    if (static_cast<int>(out.size()) >= target) return;
    std::vector<int> candidates;
    candidates.reserve(pool.size());
    for (int v : pool) {
      if (v == positive) continue;
      if (std::find(out.begin(), out.end(), v) != out.end()) continue;
      candidates.push_back(v);
    }
    rng.shuffle(candidates);
    for (int v : candidates) {
      if (static_cast<int>(out.size()) >= target) break;
      out.push_back(v);
    }
  }

  const SocialGraph* graph_;
  std::vector<std::vector<int>> hist_;
  double hard_ratio_;
  std::uint64_t seed_;
};

// ---- loss assembly (the batched trunk does the heavy lifting) ----

// Mean BCE over exposure samples (Eq. 6 shape). Empty batch -> 0.
inline Var video_loss(Tape& t, UniShareParams& P, FeatureBuilder& fb,
                      const std::vector<SampleInput>& samples,
                      const std::vector<double>& labels) {
  if (samples.size() != labels.size())
    throw std::invalid_argument("video_loss: samples/labels mismatch");
  if (samples.empty()) return t.input_scalar(0.0);
  std::vector<Var> rows;
  rows.reserve(samples.size());
  for (const SampleInput& s : samples) rows.push_back(fb.video_features(s));
  Var probs = unishare_probs(t, P, rows, HeadKind::kVideo);
  return t.mean_all(t.bce_vec(probs, labels));
}

// Mean over share samples of -log f2(pos) - sum_neg log(1 - f2(neg))
// (Eq. 7 shape); each sample's receivers[0] is the positive, the rest are
// its negatives. Empty batch -> 0.
inline Var receiver_loss(Tape& t, UniShareParams& P, FeatureBuilder& fb,
                         const std::vector<SampleInput>& samples) {
  if (samples.empty()) return t.input_scalar(0.0);
  std::vector<Var> rows;
  std::vector<double> labels;
  for (const SampleInput& s : samples) {
    if (s.receivers.empty())
      throw std::invalid_argument("receiver_loss: sample without candidates");
    std::vector<Var> sample_rows = fb.receiver_feature_set(s);
    for (std::size_t j = 0; j < sample_rows.size(); ++j) {
      rows.push_back(sample_rows[j]);
      labels.push_back(j == 0 ? 1.0 : 0.0);
    }
  }
  Var probs = unishare_probs(t, P, rows, HeadKind::kReceiver);
  Var per_element = t.bce_vec(probs, labels);
  return t.scale(t.sum_all(per_element), 1.0 / static_cast<double>(samples.size()));
}

inline Var total_loss(Tape& t, Var l_video, Var l_receiver, double alpha) {
  return t.add(l_video, t.scale(l_receiver, alpha));
}

// Video gradients flow everywhere; receiver gradients (already weighted by
// alpha) are masked off the u-i group before they accumulate.
inline void backward_with_freeze(Tape& t, UniShareParams& P, Var l_video, Var l_receiver,
                                 double alpha) {
  t.backward(l_video);
  t.backward(l_receiver, alpha, P.receiver_pass_filter());
}

// ---- sample plumbing ----

struct VideoEvent {
  int user = 0;
  int video = 0;
  long long t = 0;
  double label = 0.0;
};

struct ShareRecord {
  int user = 0;
  int video = 0;
  long long t = 0;
  int positive = 0;
};

struct EpochLog {
  int epoch = 0;
  double l_video = 0.0;
  double l_receiver = 0.0;
  double l_total = 0.0;
  double val_video_auc = 0.0;
  double val_video_gauc = 0.0;
  double val_recv_gauc = 0.0;
};

// epoch,l_video,l_receiver,l_total,val_video_auc,val_video_gauc,val_recv_gauc
inline void write_train_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training log: " + path);
  out << "epoch,l_video,l_receiver,l_total,val_video_auc,val_video_gauc,val_recv_gauc\n";
  for (const EpochLog& e : log)
    out << e.epoch << ',' << format_double(e.l_video) << ',' << format_double(e.l_receiver)
        << ',' << format_double(e.l_total) << ',' << format_double(e.val_video_auc) << ','
        << format_double(e.val_video_gauc) << ',' << format_double(e.val_recv_gauc) << '\n';
  if (!out) throw std::runtime_error("short write on training log: " + path);
}

namespace detail {

// Deterministic subsample: keep everything when cap is 0 or already met;
// otherwise keep all positives and fill the remainder with shuffled
// negatives (video case), or a shuffled prefix (share case).
inline std::vector<VideoEvent> video_events(const Dataset& ds, const SplitSlice& slice,
                                            int cap, std::uint64_t seed) {
  (void)ds;
  std::vector<VideoEvent> out;
  out.reserve(slice.views.size());
  for (const ViewImpression& v : slice.views)
    out.push_back({v.user_id, v.video_id, v.timestamp, v.shared ? 1.0 : 0.0});
  if (cap <= 0 || static_cast<int>(out.size()) <= cap) return out;

  std::vector<VideoEvent> pos, neg;
  for (const VideoEvent& e : out) (e.label > 0.5 ? pos : neg).push_back(e);
  Rng rng(Rng::mix(seed, 0x5AB5A17ull));
  rng.shuffle(neg);
  std::vector<VideoEvent> kept = pos;
  for (const VideoEvent& e : neg) {
    if (static_cast<int>(kept.size()) >= cap) break;
    kept.push_back(e);
  }
  return kept;
}

inline std::vector<ShareRecord> share_records(const SplitSlice& slice, int cap,
                                              std::uint64_t seed) {
  std::vector<ShareRecord> out;
  out.reserve(slice.panels.size());
  for (const SharePanelImpression& p : slice.panels)
    out.push_back({p.user_id, p.video_id, p.timestamp, p.positive_receiver});
  if (cap <= 0 || static_cast<int>(out.size()) <= cap) return out;
  Rng rng(Rng::mix(seed, 0x5AB5A18ull));
  rng.shuffle(out);
  out.resize(cap);
  return out;
}

inline void check_finite(double v, const char* what, int epoch, int step) {
  if (!std::isfinite(v))
    throw std::runtime_error("training diverged: " + std::string(what) + " is not finite at epoch " +
                             std::to_string(epoch) + ", step " + std::to_string(step));
}

// proportional [begin, end) chunk of m items spread over `steps` steps
inline std::pair<int, int> chunk(int m, int steps, int step) {
  auto at = [&](int s) { return static_cast<int>((static_cast<long long>(m) * s) / steps); };
  return {at(step), at(step + 1)};
}

}  // namespace detail

// Assembles the candidate list for one share record: positive first, then
// sampled negatives (tiered when hns, uniform otherwise).
inline SampleInput make_receiver_sample(const SampleFactory& sf, const NegativeSampler& ns,
                                        const ShareRecord& r, const TrainConfig& tc,
                                        long long epoch, long long idx) {
  std::vector<int> panel{r.positive};
  std::vector<int> negs = tc.hns ? ns.sample(r.user, r.positive, tc.negatives, epoch, idx)
                                 : ns.sample_uniform(r.user, r.positive, tc.negatives, epoch, idx);
  panel.insert(panel.end(), negs.begin(), negs.end());
  return sf.make(r.user, r.video, r.t, panel);
}

// ---- validation scoring (shared by the loops) ----

struct ValScores {
  std::vector<double> video_scores;
  std::vector<int> video_labels, video_users;
  std::vector<double> recv_scores;
  std::vector<int> recv_labels, recv_requests;
};

// Fills video-side arrays with f over the capped validation views.
template <typename ScoreVideoFn>
inline void score_validation_views(const std::vector<VideoEvent>& events, ScoreVideoFn&& f,
                                   ValScores& out) {
  for (const VideoEvent& e : events) {
    out.video_scores.push_back(f(e));
    out.video_labels.push_back(e.label > 0.5 ? 1 : 0);
    out.video_users.push_back(e.user);
  }
}

struct ValMetrics {
  double video_auc = 0.0;
  double video_gauc = 0.0;
  double recv_gauc = 0.0;
};

inline ValMetrics reduce_val(const ValScores& vs) {
  ValMetrics m;
  bool pos = false, neg = false;
  for (int y : vs.video_labels) (y != 0 ? pos : neg) = true;
  if (pos && neg) {
    m.video_auc = auc(vs.video_scores, vs.video_labels);
    m.video_gauc = gauc(vs.video_scores, vs.video_labels, vs.video_users).value;
  }
  if (!vs.recv_scores.empty()) {
    bool rp = false, rn = false;
    for (int y : vs.recv_labels) (y != 0 ? rp : rn) = true;
    if (rp && rn) m.recv_gauc = gauc(vs.recv_scores, vs.recv_labels, vs.recv_requests).value;
  }
  return m;
}

// ---- the joint loop ----

struct JointTrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;  // 1-based; 0 = selection disabled or no epochs
};

inline JointTrainResult train_joint(UniShareParams& P, const Dataset& ds,
                                    const SampleFactory& sf, const TrainConfig& tc) {
  tc.validate();
  P.cfg.validate();
  JointTrainResult result;
  P.init(tc.seed);
  if (tc.epochs == 0) return result;

  std::vector<VideoEvent> train_videos =
      detail::video_events(ds, ds.split.train, tc.max_video_samples, tc.seed);
  std::vector<ShareRecord> train_shares =
      detail::share_records(ds.split.train, tc.max_recv_samples, tc.seed);
  if (train_videos.empty()) throw std::invalid_argument("train_joint: no training exposures");

  std::vector<VideoEvent> val_videos =
      detail::video_events(ds, ds.split.validation, tc.val_max_samples, tc.seed + 1);
  std::vector<ShareRecord> val_shares =
      detail::share_records(ds.split.validation, std::max(tc.val_max_samples / 4, 1), tc.seed + 1);

  NegativeSampler sampler(ds, tc.hard_ratio, Rng::mix(tc.seed, 0x4E6));
  std::vector<AdamState> opt;
  std::vector<NamedParam> named = P.named_params();
  opt.reserve(named.size());
  for (const NamedParam& np : named) opt.emplace_back(*np.p, tc.learning_rate);

  const int n_vid = static_cast<int>(train_videos.size());
  const int n_rec = static_cast<int>(train_shares.size());
  const int steps = (n_vid + tc.batch_size - 1) / tc.batch_size;

  double best_metric = -1.0;
  std::vector<Tensor> best_values;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(tc.seed, 0xE60C4, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(train_videos);
    shuffle_rng.shuffle(train_shares);

    double sum_lv = 0.0, sum_lr = 0.0;
    long long cnt_v = 0, cnt_r = 0;
    for (int step = 0; step < steps; ++step) {
      int vb = step * tc.batch_size;
      int ve = std::min(n_vid, vb + tc.batch_size);
      auto [rb, re] = detail::chunk(n_rec, steps, step);

      Tape t;
      FeatureBuilder fb(t, P);
      std::vector<SampleInput> vs;
      std::vector<double> vl;
      for (int i = vb; i < ve; ++i) {
        const VideoEvent& e = train_videos[i];
        vs.push_back(sf.make(e.user, e.video, e.t, sf.recent_panel(e.user, e.t, tc.panel_cap)));
        vl.push_back(e.label);
      }
      std::vector<SampleInput> rs;
      for (int i = rb; i < re; ++i)
        rs.push_back(make_receiver_sample(sf, sampler, train_shares[i], tc, epoch, i));

      Var lv = video_loss(t, P, fb, vs, vl);
      Var lr = receiver_loss(t, P, fb, rs);
      Var lt = total_loss(t, lv, lr, tc.alpha);
      double lv_s = t.scalar(lv), lr_s = t.scalar(lr);
      detail::check_finite(t.scalar(lt), "L_total", epoch, step);

      backward_with_freeze(t, P, lv, lr, tc.alpha);
      for (std::size_t k = 0; k < named.size(); ++k) adam_step(*named[k].p, opt[k]);

      sum_lv += lv_s * (ve - vb);
      cnt_v += (ve - vb);
      sum_lr += lr_s * (re - rb);
      cnt_r += (re - rb);
    }

    EpochLog el;
    el.epoch = epoch;
    el.l_video = cnt_v ? sum_lv / cnt_v : 0.0;
    el.l_receiver = cnt_r ? sum_lr / cnt_r : 0.0;
    el.l_total = el.l_video + tc.alpha * el.l_receiver;

    if (!val_videos.empty() || !val_shares.empty()) {
      ValScores vsc;
      for (const VideoEvent& e : val_videos) {
        Tape t;
        SampleInput s = sf.make(e.user, e.video, e.t, sf.recent_panel(e.user, e.t, tc.panel_cap));
        vsc.video_scores.push_back(t.scalar(forward_video(t, P, s)));
        vsc.video_labels.push_back(e.label > 0.5 ? 1 : 0);
        vsc.video_users.push_back(e.user);
      }
      for (std::size_t i = 0; i < val_shares.size(); ++i) {
        const ShareRecord& r = val_shares[i];
        SampleInput s = make_receiver_sample(sf, sampler, r, tc, 0, static_cast<long long>(i));
        if (s.receivers.size() < 2) continue;
        Tape t;
        FeatureBuilder fb(t, P);
        std::vector<Var> rows = fb.receiver_feature_set(s);
        Tensor probs = t.val(unishare_probs(t, P, rows, HeadKind::kReceiver));
        for (std::size_t j = 0; j < s.receivers.size(); ++j) {
          vsc.recv_scores.push_back(probs.data[j]);
          vsc.recv_labels.push_back(j == 0 ? 1 : 0);
          vsc.recv_requests.push_back(static_cast<int>(i));
        }
      }
      ValMetrics vm = reduce_val(vsc);
      el.val_video_auc = vm.video_auc;
      el.val_video_gauc = vm.video_gauc;
      el.val_recv_gauc = vm.recv_gauc;

      if (tc.select == "val_gauc" && vm.video_gauc > best_metric) {
        best_metric = vm.video_gauc;
        result.best_epoch = epoch;
        best_values.clear();
        for (const NamedParam& np : named) best_values.push_back(np.p->value);
      }
    }
    result.log.push_back(el);
  }

  if (tc.select == "val_gauc" && !best_values.empty())
    for (std::size_t k = 0; k < named.size(); ++k) named[k].p->value = best_values[k];
  return result;
}

// ---- the separate baselines ----

struct SeparateTrainResult {
  std::vector<EpochLog> log_video;
  std::vector<EpochLog> log_receiver;
  int best_video_epoch = 0;
  int best_recv_epoch = 0;
};

inline SeparateTrainResult train_separate(BaselineVideoParams& BV, BaselineReceiverParams& BR,
                                          const Dataset& ds, const SampleFactory& sf,
                                          const TrainConfig& tc) {
  tc.validate();
  SeparateTrainResult result;
  BV.init(tc.seed);
  BR.init(tc.seed);
  if (tc.epochs == 0) return result;

  std::vector<VideoEvent> train_videos =
      detail::video_events(ds, ds.split.train, tc.max_video_samples, tc.seed);
  std::vector<ShareRecord> train_shares =
      detail::share_records(ds.split.train, tc.max_recv_samples, tc.seed);
  if (train_videos.empty()) throw std::invalid_argument("train_separate: no training exposures");
  std::vector<VideoEvent> val_videos =
      detail::video_events(ds, ds.split.validation, tc.val_max_samples, tc.seed + 1);
  std::vector<ShareRecord> val_shares =
      detail::share_records(ds.split.validation, std::max(tc.val_max_samples / 4, 1), tc.seed + 1);

  NegativeSampler sampler(ds, tc.hard_ratio, Rng::mix(tc.seed, 0x4E6));

  // video baseline
  {
    std::vector<NamedParam> named = BV.named_params();
    std::vector<AdamState> opt;
    for (const NamedParam& np : named) opt.emplace_back(*np.p, tc.learning_rate);
    const int n = static_cast<int>(train_videos.size());
    const int steps = (n + tc.batch_size - 1) / tc.batch_size;
    double best = -1.0;
    std::vector<Tensor> best_values;
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
      Rng shuffle_rng(Rng::mix(tc.seed, 0xBA5E, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(train_videos);
      double sum = 0.0;
      for (int step = 0; step < steps; ++step) {
        int b = step * tc.batch_size, e = std::min(n, b + tc.batch_size);
        Tape t;
        std::vector<Var> terms;
        for (int i = b; i < e; ++i) {
          const VideoEvent& ev = train_videos[i];
          SampleInput s = sf.make(ev.user, ev.video, ev.t, {});
          terms.push_back(t.bce(forward_baseline_video(t, BV, s), ev.label));
        }
        Var loss = t.scale(t.add_many(terms), 1.0 / static_cast<double>(terms.size()));
        double l = t.scalar(loss);
        detail::check_finite(l, "baseline video loss", epoch, step);
        t.backward(loss);
        for (std::size_t k = 0; k < named.size(); ++k) adam_step(*named[k].p, opt[k]);
        sum += l * (e - b);
      }
      EpochLog el;
      el.epoch = epoch;
      el.l_video = sum / n;
      el.l_total = el.l_video;
      if (!val_videos.empty()) {
        std::vector<double> scores;
        std::vector<int> labels, users;
        for (const VideoEvent& ev : val_videos) {
          Tape t;
          SampleInput s = sf.make(ev.user, ev.video, ev.t, {});
          scores.push_back(t.scalar(forward_baseline_video(t, BV, s)));
          labels.push_back(ev.label > 0.5 ? 1 : 0);
          users.push_back(ev.user);
        }
        bool pos = false, neg = false;
        for (int y : labels) (y != 0 ? pos : neg) = true;
        if (pos && neg) {
          el.val_video_auc = auc(scores, labels);
          el.val_video_gauc = gauc(scores, labels, users).value;
        }
        if (tc.select == "val_gauc" && el.val_video_gauc > best) {
          best = el.val_video_gauc;
          result.best_video_epoch = epoch;
          best_values.clear();
          for (const NamedParam& np : named) best_values.push_back(np.p->value);
        }
      }
      result.log_video.push_back(el);
    }
    if (tc.select == "val_gauc" && !best_values.empty())
      for (std::size_t k = 0; k < named.size(); ++k) named[k].p->value = best_values[k];
  }

  // receiver baseline
  {
    std::vector<NamedParam> named = BR.named_params();
    std::vector<AdamState> opt;
    for (const NamedParam& np : named) opt.emplace_back(*np.p, tc.learning_rate);
    const int n = static_cast<int>(train_shares.size());
    if (n > 0) {
      const int steps = (n + tc.batch_size - 1) / tc.batch_size;
      double best = -1.0;
      std::vector<Tensor> best_values;
      for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix(tc.seed, 0xDC4, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(train_shares);
        double sum = 0.0;
        for (int step = 0; step < steps; ++step) {
          int b = step * tc.batch_size, e = std::min(n, b + tc.batch_size);
          Tape t;
          std::vector<Var> terms;
          for (int i = b; i < e; ++i) {
            SampleInput s = make_receiver_sample(sf, sampler, train_shares[i], tc, epoch, i);
            Var term = t.bce(forward_baseline_receiver(t, BR, s, s.receivers[0]), 1.0);
            for (std::size_t j = 1; j < s.receivers.size(); ++j)
              term = t.add(term,
                           t.bce(forward_baseline_receiver(t, BR, s, s.receivers[j]), 0.0));
            terms.push_back(term);
          }
          Var loss = t.scale(t.add_many(terms), 1.0 / static_cast<double>(terms.size()));
          double l = t.scalar(loss);
          detail::check_finite(l, "baseline receiver loss", epoch, step);
          t.backward(loss);
          for (std::size_t k = 0; k < named.size(); ++k) adam_step(*named[k].p, opt[k]);
          sum += l * (e - b);
        }
        EpochLog el;
        el.epoch = epoch;
        el.l_receiver = sum / n;
        el.l_total = el.l_receiver;
        if (!val_shares.empty()) {
          std::vector<double> scores;
          std::vector<int> labels, requests;
          for (std::size_t i = 0; i < val_shares.size(); ++i) {
            SampleInput s =
                make_receiver_sample(sf, sampler, val_shares[i], tc, 0, static_cast<long long>(i));
            if (s.receivers.size() < 2) continue;
            Tape t;
            for (std::size_t j = 0; j < s.receivers.size(); ++j) {
              scores.push_back(t.scalar(forward_baseline_receiver(t, BR, s, s.receivers[j])));
              labels.push_back(j == 0 ? 1 : 0);
              requests.push_back(static_cast<int>(i));
            }
          }
          bool pos = false, neg = false;
          for (int y : labels) (y != 0 ? pos : neg) = true;
          if (pos && neg) el.val_recv_gauc = gauc(scores, labels, requests).value;
          if (tc.select == "val_gauc" && el.val_recv_gauc > best) {
            best = el.val_recv_gauc;
            result.best_recv_epoch = epoch;
            best_values.clear();
            for (const NamedParam& np : named) best_values.push_back(np.p->value);
          }
        }
        result.log_receiver.push_back(el);
      }
      if (tc.select == "val_gauc" && !best_values.empty())
        for (std::size_t k = 0; k < named.size(); ++k) named[k].p->value = best_values[k];
    }
  }
  return result;
}

}  // namespace unishare
