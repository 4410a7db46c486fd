#pragma once

// Relationship types and the relationship-content alignment table.
//
// The table is the deterministic stand-in for the LLM that recommends a
// relationship type per video category: each category names exactly one
// recommended type (score 1.0), the remaining named types get affinities
// in (0,1), and Unknown is always neutral 0.5.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "unishare/rng.hpp"
#include "unishare/textio.hpp"

namespace unishare {

enum class RelationshipType {
  RomanticPartner,
  Buddy,
  SisterFriend,
  Elder,
  Junior,
  Peer,
  Unknown,
};

inline constexpr int kNamedRelationships = 6;

inline const char* rel_name(RelationshipType r) {
  switch (r) {
    case RelationshipType::RomanticPartner: return "RomanticPartner";
    case RelationshipType::Buddy: return "Buddy";
    case RelationshipType::SisterFriend: return "SisterFriend";
    case RelationshipType::Elder: return "Elder";
    case RelationshipType::Junior: return "Junior";
    case RelationshipType::Peer: return "Peer";
    case RelationshipType::Unknown: return "Unknown";
  }
  return "Unknown";
}

inline RelationshipType rel_from_name(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(RelationshipType::Unknown); ++k) {
    RelationshipType r = static_cast<RelationshipType>(k);
    if (s == rel_name(r)) return r;
  }
  throw ParseError("unknown relationship type '" + s + "'");
}

class AlignmentTable {
 public:
  AlignmentTable() = default;

  static AlignmentTable generate(const std::vector<std::string>& categories,
                                 std::uint64_t seed) {
    if (categories.empty())
      throw std::invalid_argument("alignment table needs at least one category");
    AlignmentTable t;
    t.categories_ = categories;
    for (std::size_t c = 0; c < categories.size(); ++c) {
      Rng rng(Rng::mix(seed, 0x41 /*'A'*/, c));
      int rec = rng.uniform_int(kNamedRelationships);
      for (int k = 0; k < kNamedRelationships; ++k) {
        double score = (k == rec) ? 1.0 : rng.uniform(0.05, 0.65);
        t.scores_[{categories[c], static_cast<RelationshipType>(k)}] = score;
      }
    }
    return t;
  }

  double lookup(const std::string& category, RelationshipType rel) const {
    if (rel == RelationshipType::Unknown) return 0.5;
    auto it = scores_.find({category, rel});
    if (it == scores_.end()) {
      ++missing_lookups_;  // unseen category: neutral fallback
      return 0.5;
    }
    return it->second;
  }

  RelationshipType recommended(const std::string& category) const {
    RelationshipType best = RelationshipType::Unknown;
    double best_score = -1.0;
    for (int k = 0; k < kNamedRelationships; ++k) {
      RelationshipType r = static_cast<RelationshipType>(k);
      auto it = scores_.find({category, r});
      if (it != scores_.end() && it->second > best_score) {
        best_score = it->second;
        best = r;
      }
    }
    return best;
  }

  const std::vector<std::string>& categories() const { return categories_; }
  long long missing_lookups() const { return missing_lookups_; }

  void save(const std::string& path) const {
    RecordWriter w(path);
    for (const std::string& cat : categories_) {
      for (int k = 0; k < kNamedRelationships; ++k) {
        RelationshipType r = static_cast<RelationshipType>(k);
        Record rec;
        rec.add("cat", cat);
        rec.add("rel", rel_name(r));
        rec.add_real("score", scores_.at({cat, r}));
        w.write(rec);
      }
    }
    w.close();
  }

  static AlignmentTable load(const std::string& path) {
    AlignmentTable t;
    RecordReader r(path);
    Record rec;
    while (r.next(rec)) {
      rec.check_keys({"cat", "rel", "score"});
      std::string cat = rec.get("cat");
      RelationshipType rel = rel_from_name(rec.get("rel"));
      double score = rec.get_real("score");
      if (rel == RelationshipType::Unknown)
        throw ParseError(rec.origin + ": Unknown rows are implicit");
      if (t.scores_.count({cat, rel}))
        throw ParseError(rec.origin + ": duplicate (cat, rel) pair");
      bool seen = false;
      for (const std::string& c : t.categories_)
        if (c == cat) { seen = true; break; }
      if (!seen) t.categories_.push_back(cat);
      t.scores_[{cat, rel}] = score;
    }
    for (const std::string& cat : t.categories_) {
      bool has_one = false;
      for (int k = 0; k < kNamedRelationships; ++k) {
        RelationshipType rel = static_cast<RelationshipType>(k);
        if (!t.scores_.count({cat, rel}))
          throw ParseError(path + ": category '" + cat + "' missing " +
                           rel_name(rel));
        if (t.scores_.at({cat, rel}) == 1.0) has_one = true;
      }
      if (!has_one)
        throw ParseError(path + ": category '" + cat +
                         "' has no recommended type (score 1.0)");
    }
    return t;
  }

  bool operator==(const AlignmentTable& o) const {
    return categories_ == o.categories_ && scores_ == o.scores_;
  }

 private:
  std::vector<std::string> categories_;
  std::map<std::pair<std::string, RelationshipType>, double> scores_;
  mutable long long missing_lookups_ = 0;
};

}  // namespace unishare
