#pragma once

// Attachment scores and error profiles (by sentence length and by coarse POS group).

#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "easyfirst/treebank.hpp"

namespace easyfirst {

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(std::size_t sentence, const std::string& what)
      : std::runtime_error("sentence " + std::to_string(sentence) + ": " + what), sentence_(sentence) {}
  std::size_t sentence() const { return sentence_; }  // 1-based

 private:
  std::size_t sentence_;
};

struct PosGroupRule {
  std::string pattern;  // trailing '*' means prefix match
  std::string group;
};

struct EvalConfig {
  std::set<std::string> punctuation{"``", "''", ":", ",", "."};
  std::vector<PosGroupRule> pos_groups{
      {"NN*", "noun"},      {"VB*", "verb"},       {"PRP*", "pronoun"},     {"WP*", "pronoun"},
      {"JJ*", "adjective"}, {"RB*", "adverb"},     {"CC", "conjunction"},   {"IN", "conjunction"},
  };
  std::vector<std::string> group_order{"noun", "verb", "pronoun", "adjective", "adverb", "conjunction"};
  int bin_width = 5;

  bool is_punct(const std::string& pos) const { return punctuation.count(pos) != 0; }

  /// Group name for a tag, or empty when the tag is not mapped.
  std::string group_of(const std::string& pos) const {
    for (const PosGroupRule& r : pos_groups) {
      if (!r.pattern.empty() && r.pattern.back() == '*') {
        if (pos.compare(0, r.pattern.size() - 1, r.pattern, 0, r.pattern.size() - 1) == 0) return r.group;
      } else if (pos == r.pattern) {
        return r.group;
      }
    }
    return {};
  }
};

inline void to_json(nlohmann::json& j, const EvalConfig& c) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& r : c.pos_groups) groups.push_back({r.pattern, r.group});
  j = {{"punctuation", c.punctuation}, {"pos_groups", groups}, {"group_order", c.group_order}, {"bin_width", c.bin_width}};
}

inline void from_json(const nlohmann::json& j, EvalConfig& c) {
  if (j.contains("punctuation")) c.punctuation = j.at("punctuation").get<std::set<std::string>>();
  if (j.contains("pos_groups")) {
    c.pos_groups.clear();
    for (const auto& r : j.at("pos_groups")) c.pos_groups.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>()});
  }
  if (j.contains("group_order")) c.group_order = j.at("group_order").get<std::vector<std::string>>();
  if (j.contains("bin_width")) c.bin_width = j.at("bin_width").get<int>();
  if (c.bin_width < 1) throw std::invalid_argument("bin_width must be >= 1");
}

struct RateCell {
  std::string bucket;
  std::size_t errors = 0;
  std::size_t total = 0;
  double rate() const { return total ? static_cast<double>(errors) / static_cast<double>(total) : 0.0; }
  bool operator==(const RateCell&) const = default;
};

struct ErrorProfile {
  std::vector<RateCell> length_bins;
  std::vector<RateCell> pos_groups;
};

struct EvalReport {
  double uas = 0.0;
  double las = 0.0;
  std::size_t counted = 0;
  std::size_t excluded = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labels = 0;
  std::size_t sentences = 0;
  ErrorProfile profile;

  std::size_t total() const { return counted + excluded; }
};

namespace detail {

inline void check_alignment(const std::vector<SentenceRecord>& gold, const std::vector<ArcList>& pred) {
  const std::size_t n = std::min(gold.size(), pred.size());
  for (std::size_t s = 0; s < n; ++s) {
    if (gold[s].size() != pred[s].size())
      throw AlignmentError(s + 1, "gold has " + std::to_string(gold[s].size()) + " tokens, prediction has " +
                                      std::to_string(pred[s].size()));
    if (!gold[s].has_gold() && gold[s].size() > 0) throw AlignmentError(s + 1, "gold file lacks head annotation");
  }
  if (gold.size() != pred.size())
    throw AlignmentError(n + 1, "gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                                    std::to_string(pred.size()));
}

inline std::string bin_label(std::size_t bin, int width) {
  const std::size_t lo = bin * static_cast<std::size_t>(width) + 1;
  return std::to_string(lo) + "-" + std::to_string(lo + static_cast<std::size_t>(width) - 1);
}

}  // namespace detail

/// Unlabeled error rates by sentence-length bin and by POS group. Tokens
/// whose gold tag is punctuation are left out of every count; tags outside
/// the group table are skipped for the POS breakdown.
inline ErrorProfile error_profile(const std::vector<SentenceRecord>& gold, const std::vector<ArcList>& pred,
                                  const EvalConfig& cfg = {}) {
  detail::check_alignment(gold, pred);
  ErrorProfile p;
  for (const std::string& g : cfg.group_order) p.pos_groups.push_back({g, 0, 0});
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& toks = gold[s].tokens;
    if (toks.empty()) continue;
    const std::size_t bin = (toks.size() - 1) / static_cast<std::size_t>(cfg.bin_width);
    while (p.length_bins.size() <= bin) p.length_bins.push_back({detail::bin_label(p.length_bins.size(), cfg.bin_width), 0, 0});
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (cfg.is_punct(toks[i].pos)) continue;
      const bool wrong = pred[s][i].head != toks[i].head;
      p.length_bins[bin].total += 1;
      p.length_bins[bin].errors += wrong;
      const std::string group = cfg.group_of(toks[i].pos);
      if (group.empty()) continue;
      for (RateCell& c : p.pos_groups) {
        if (c.bucket == group) {
          c.total += 1;
          c.errors += wrong;
        }
      }
    }
  }
  return p;
}

inline EvalReport attachment_scores(const std::vector<SentenceRecord>& gold, const std::vector<ArcList>& pred,
                                    const EvalConfig& cfg = {}) {
  detail::check_alignment(gold, pred);
  EvalReport r;
  r.sentences = gold.size();
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].tokens.size(); ++i) {
      const Token& t = gold[s].tokens[i];
      if (cfg.is_punct(t.pos)) {
        ++r.excluded;
        continue;
      }
      ++r.counted;
      if (pred[s][i].head == t.head) {
        ++r.correct_heads;
        if (pred[s][i].rel == t.rel) ++r.correct_labels;
      }
    }
  }
  if (r.counted) {
    r.uas = static_cast<double>(r.correct_heads) / static_cast<double>(r.counted);
    r.las = static_cast<double>(r.correct_labels) / static_cast<double>(r.counted);
  }
  r.profile = error_profile(gold, pred, cfg);
  return r;
}

inline nlohmann::json report_json(const EvalReport& r) {
  auto cells = [](const std::vector<RateCell>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const RateCell& c : v) a.push_back({{"bucket", c.bucket}, {"errors", c.errors}, {"total", c.total}, {"rate", c.rate()}});
    return a;
  };
  return {{"uas", r.uas},
          {"las", r.las},
          {"sentences", r.sentences},
          {"counted_tokens", r.counted},
          {"excluded_tokens", r.excluded},
          {"correct_heads", r.correct_heads},
          {"correct_labels", r.correct_labels},
          {"length_bins", cells(r.profile.length_bins)},
          {"pos_groups", cells(r.profile.pos_groups)}};
}

inline std::string report_text(const EvalReport& r) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(4);
  o << std::left << std::setw(18) << "UAS" << r.uas << '\n';
  o << std::setw(18) << "LAS" << r.las << '\n';
  o << std::setw(18) << "sentences" << r.sentences << '\n';
  o << std::setw(18) << "counted tokens" << r.counted << '\n';
  o << std::setw(18) << "excluded tokens" << r.excluded << '\n';
  return o.str();
}

/// CSV with header kind,bucket,errors,total,rate; length rows first, then POS rows.
inline std::string profile_csv(const ErrorProfile& p) {
  std::ostringstream o;
  o << "kind,bucket,errors,total,rate\n";
  o << std::fixed << std::setprecision(6);
  for (const RateCell& c : p.length_bins) o << "length," << c.bucket << ',' << c.errors << ',' << c.total << ',' << c.rate() << '\n';
  for (const RateCell& c : p.pos_groups) o << "pos," << c.bucket << ',' << c.errors << ',' << c.total << ',' << c.rate() << '\n';
  return o.str();
}

}  // namespace easyfirst
