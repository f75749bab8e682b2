#pragma once

// Hand-counted evaluation fixtures shared by the metric, CLI and acceptance tests.

#include <string>
#include <vector>

#include "easyfirst/treebank.hpp"

namespace fixtures {

struct Row {
  const char* form;
  const char* pos;
  int gold_head;
  const char* gold_rel;
  int pred_head;
  const char* pred_rel;
};

struct Fixture {
  std::string name;
  std::vector<std::vector<Row>> sentences;
  std::size_t correct_heads, correct_labels, counted, excluded;
};

inline std::vector<easyfirst::SentenceRecord> gold(const Fixture& f) {
  std::vector<easyfirst::SentenceRecord> out;
  for (const auto& s : f.sentences) {
    std::vector<std::string> forms, tags;
    easyfirst::ArcList arcs;
    for (const Row& r : s) {
      forms.push_back(r.form);
      tags.push_back(r.pos);
      arcs.push_back({r.gold_head, r.gold_rel});
    }
    out.push_back(easyfirst::make_record(forms, tags, arcs));
  }
  return out;
}

inline std::vector<easyfirst::ArcList> predicted(const Fixture& f) {
  std::vector<easyfirst::ArcList> out;
  for (const auto& s : f.sentences) {
    easyfirst::ArcList arcs;
    for (const Row& r : s) arcs.push_back({r.pred_head, r.pred_rel});
    out.push_back(arcs);
  }
  return out;
}

inline const std::vector<Fixture>& attachment() {
  static const std::vector<Fixture> all{
      {"all_correct",
       {{{"He", "PRP", 2, "nsubj", 2, "nsubj"}, {"runs", "VBZ", 0, "root", 0, "root"}, {"fast", "RB", 2, "advmod", 2, "advmod"}}},
       3, 3, 3, 0},
      {"punct_excluded",
       {{{"The", "DT", 2, "det", 2, "det"},
         {"dog", "NN", 5, "nsubj", 5, "nsubj"},
         {",", ",", 2, "punct", 5, "punct"},
         {"sadly", "RB", 3, "advmod", 3, "dep"},
         {"barked", "VBD", 0, "root", 0, "root"},
         {"at", "IN", 5, "prep", 5, "prep"},
         {"the", "DT", 8, "det", 8, "det"},
         {"cat", "NN", 6, "pobj", 6, "dobj"},
         {".", ".", 5, "punct", 1, "punct"},
         {"today", "NN", 5, "tmod", 5, "tmod"}}},
       8, 6, 8, 2},
      {"labels_wrong",
       {{{"She", "PRP", 2, "nsubj", 2, "dobj"}, {"sang", "VBD", 0, "root", 0, "nsubj"}, {"loudly", "RB", 2, "advmod", 2, "amod"}}},
       3, 0, 3, 0},
      {"label_needs_head",
       {{{"big", "JJ", 2, "amod", 3, "amod"},
         {"dogs", "NNS", 3, "nsubj", 3, "nsubj"},
         {"bark", "VBP", 0, "root", 0, "ccomp"},
         {"often", "RB", 3, "advmod", 3, "advmod"}}},
       3, 2, 4, 0},
      {"two_sentences",
       {{{"I", "PRP", 2, "nsubj", 2, "nsubj"},
         {"saw", "VBD", 0, "root", 0, "root"},
         {"her", "PRP", 2, "dobj", 2, "dobj"},
         {"with", "IN", 2, "prep", 3, "prep"},
         {"binoculars", "NNS", 4, "pobj", 4, "pobj"},
         {".", ".", 2, "punct", 4, "punct"}},
        {{"Dogs", "NNS", 4, "nsubj", 4, "nsubj"},
         {"and", "CC", 1, "cc", 3, "cc"},
         {"cats", "NNS", 1, "conj", 1, "dep"},
         {"fight", "VBP", 0, "root", 0, "root"},
         {":", ":", 4, "punct", 4, "punct"}}},
       7, 6, 9, 2},
  };
  return all;
}

/// Seven tokens, no punctuation, one head error on a noun.
inline const Fixture& profile_seven() {
  static const Fixture f{"profile_seven",
                         {{{"the", "DT", 2, "det", 2, "det"},
                           {"old", "JJ", 3, "amod", 3, "amod"},
                           {"man", "NN", 4, "nsubj", 4, "nsubj"},
                           {"the", "DT", 5, "det", 5, "det"},
                           {"boat", "NN", 0, "root", 0, "root"},
                           {"quickly", "RB", 5, "advmod", 5, "advmod"},
                           {"rows", "NNS", 5, "dobj", 4, "dobj"}}},
                         6, 6, 7, 0};
  return f;
}

}  // namespace fixtures
