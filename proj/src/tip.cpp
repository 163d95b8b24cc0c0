#include "empo2/tip.hpp"

#include <cstdio>

namespace empo2 {
namespace {

constexpr std::string_view kMissing = "missing milestones: ";
constexpr std::string_view kLast = "; last action: ";
constexpr std::string_view kScore = "; score ";

}  // namespace

std::string format_tip_content(const std::vector<std::string>& missing,
                               const Tokens& last_action, double score) {
  std::string out(kMissing);
  if (missing.empty()) {
    out += "none";
  } else {
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i > 0) out += ", ";
      out += missing[i];
    }
  }
  out += kLast;
  out += last_action.empty() ? "none" : join(last_action);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", score);
  out += kScore;
  out += buf;
  return out;
}

std::optional<TipContent> parse_tip_content(std::string_view content) {
  if (!content.starts_with(kMissing)) return std::nullopt;
  std::size_t last = content.find(kLast);
  std::size_t score = content.rfind(kScore);
  if (last == std::string_view::npos || score == std::string_view::npos || score < last)
    return std::nullopt;
  TipContent out;
  std::string_view missing = content.substr(kMissing.size(), last - kMissing.size());
  if (missing != "none") {
    std::size_t start = 0;
    while (true) {
      std::size_t comma = missing.find(", ", start);
      out.missing.emplace_back(missing.substr(start, comma == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 2;
    }
  }
  out.last_action = std::string(content.substr(last + kLast.size(), score - last - kLast.size()));
  try {
    out.score = parse_double(content.substr(score + kScore.size()));
  } catch (const FormatError&) {
    return std::nullopt;
  }
  return out;
}

}  // namespace empo2
