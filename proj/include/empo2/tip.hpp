#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "empo2/common.hpp"

namespace empo2 {

// A reflection record distilled from one finished trajectory.
struct Tip {
  std::string content;
  std::vector<double> key;  // unit norm
  double score = 0.0;       // extrinsic return of the source trajectory
  std::uint64_t seq = 0;    // assigned by TipMemory on insertion

  bool operator==(const Tip&) const = default;
};

// Structured view of the tip template
//   "missing milestones: <a>, <b>; last action: <tokens>; score <x>"
// An empty missing list is written as "none".
struct TipContent {
  std::vector<std::string> missing;
  std::string last_action;
  double score = 0.0;
};

std::string format_tip_content(const std::vector<std::string>& missing,
                               const Tokens& last_action, double score);
// Returns nullopt when `content` does not follow the template.
std::optional<TipContent> parse_tip_content(std::string_view content);

}  // namespace empo2
