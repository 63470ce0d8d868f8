#include "apolo/labels.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "apolo/errors.hpp"

namespace apolo {
namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

bool is_opener(char c) { return c == '(' || c == '[' || c == '{'; }
bool is_closer(char c) { return c == ')' || c == ']' || c == '}'; }

char opener_for(char closer) {
  switch (closer) {
    case ')': return '(';
    case ']': return '[';
    default: return '{';
  }
}

// matched[i] is true when s[i] is a bracket with a partner in s.
std::vector<bool> matched_brackets(const std::string& s) {
  std::vector<bool> matched(s.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_opener(s[i])) {
      stack.push_back(i);
    } else if (is_closer(s[i])) {
      if (!stack.empty() && s[stack.back()] == opener_for(s[i])) {
        matched[stack.back()] = true;
        matched[i] = true;
        stack.pop_back();
      }
    }
  }
  return matched;
}

std::string collapse_whitespace(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace

std::string normalize_label_text(std::string_view raw) {
  std::string s = collapse_whitespace(raw);
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    auto matched = matched_brackets(s);
    auto strippable = [&](std::size_t i) {
      auto c = static_cast<unsigned char>(s[i]);
      return std::ispunct(c) != 0 && !matched[i];
    };
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && strippable(begin)) ++begin;
    while (end > begin && strippable(end - 1)) --end;
    if (begin != 0 || end != s.size()) {
      s = collapse_whitespace(std::string_view(s).substr(begin, end - begin));
      changed = true;
    }
  }
  return s;
}

EmotionLabel::EmotionLabel(std::string_view raw)
    : token_(normalize_label_text(raw)) {
  if (token_.empty()) {
    throw InvalidLabelError("invalid label: '" + std::string(raw) +
                            "' is empty after normalization");
  }
}

EmotionLabel normalize_label(std::string_view raw) { return EmotionLabel(raw); }

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::single ? "single" : "multi";
}

LabelMode label_mode_from_string(std::string_view text) {
  if (text == "single") return LabelMode::single;
  if (text == "multi") return LabelMode::multi;
  throw ArgumentError("unknown label mode '" + std::string(text) + "'");
}

LabelSpace::LabelSpace(std::vector<EmotionLabel> labels, LabelMode mode)
    : labels_(std::move(labels)), mode_(mode) {
  if (labels_.size() < 2) {
    throw ArgumentError("a label space needs at least two labels");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l.token()).second) {
      throw ArgumentError("duplicate label '" + l.token() + "' in label space");
    }
  }
}

std::optional<std::size_t> LabelSpace::index_of(const EmotionLabel& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::string LabelSpace::options_list() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += ", ";
    out += labels_[i].token();
  }
  return out;
}

}  // namespace apolo
