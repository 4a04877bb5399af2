#pragma once

// Round cost of every round-consuming primitive. The engine logs one
// invocation key per call; sum(table[key]) over the log must equal the
// party's round counter (checked by the metrics tests).

#include <string>

#include <nlohmann/json.hpp>

#include "lem/field.hpp"

namespace lem::abb::costs {

inline int ceil_log2(int x) {
  int r = 0;
  while ((1 << r) < x) ++r;
  return r;
}

inline int lt_rounds(int width) { return 1 + ceil_log2(width); }
inline int eq_rounds(int width) { return 1 + ceil_log2(width + 1); }

/// Pool bits consumed by one comparison of the given width.
inline int lt_bits(int width, int stat_sec) { return width + stat_sec; }
inline int eq_bits(int width, int stat_sec) { return width + 1 + stat_sec; }

inline constexpr int kProductRounds = 1;
inline constexpr int kOpenRounds = 1;
inline constexpr int kJointRandomRounds = 1;
inline constexpr int kShufflePassRounds = 1;
inline constexpr int kShuffleRounds = 3;
inline constexpr int kPermutationMaterialRounds = 1;
inline constexpr int kIntakeRounds = 1;

inline std::string lt_key(int width) { return "lt/w=" + std::to_string(width); }
inline std::string eq_key(int width) { return "eq/w=" + std::to_string(width); }

/// Rounds for a logged invocation key.
inline int rounds_of(const std::string& key) {
  if (key == "product" || key == "open" || key == "joint_random" || key == "shuffle_pass" ||
      key == "permutation_material" || key == "intake") {
    return 1;
  }
  if (key.rfind("lt/w=", 0) == 0) return lt_rounds(std::stoi(key.substr(5)));
  if (key.rfind("eq/w=", 0) == 0) return eq_rounds(std::stoi(key.substr(5)));
  throw std::invalid_argument("unknown cost key " + key);
}

/// The table for a configuration, as published in reports and docs.
inline nlohmann::json table_json(const FieldParams& p, int tiebreak_width) {
  nlohmann::json t;
  t["product"] = {{"rounds", kProductRounds}, {"pool_bits", 0}};
  t["open"] = {{"rounds", kOpenRounds}, {"pool_bits", 0}};
  t["joint_random"] = {{"rounds", kJointRandomRounds}, {"pool_bits", 0}};
  t["shuffle_pass"] = {{"rounds", kShufflePassRounds}, {"pool_bits", 0}};
  t["shuffle"] = {{"rounds", kShuffleRounds}, {"pool_bits", 0}, {"passes", 3}};
  t["permutation_material"] = {{"rounds", kPermutationMaterialRounds}, {"pool_bits", 0}};
  t["intake"] = {{"rounds", kIntakeRounds}, {"pool_bits", 0}};
  for (int w : {tiebreak_width, p.value_bits, p.value_bits + 1, p.sum_bits}) {
    t[lt_key(w)] = {{"rounds", lt_rounds(w)}, {"pool_bits", lt_bits(w, p.stat_sec)}};
  }
  t[eq_key(p.value_bits)] = {{"rounds", eq_rounds(p.value_bits)}, {"pool_bits", eq_bits(p.value_bits, p.stat_sec)}};
  t["random_bits_chunk"] = {{"rounds", "joint_random + product + open (+ product + open when verified)"}};
  return t;
}

}  // namespace lem::abb::costs
