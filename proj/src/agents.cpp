#include "apolo/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <sstream>

#include "apolo/data.hpp"

namespace apolo {
namespace {

const std::map<std::string, std::string> kBuiltinSources = {
#include "apolo/builtin_templates.inc"
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string lower_collapsed(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string without_stars(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*') out.push_back(c);
  }
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Occurrence of `needle` in `hay` not flanked by alphanumerics.
bool contains_word(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return false;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(hay[pos - 1]) || !is_word_char(needle.front());
    const auto end = pos + needle.size();
    const bool right_ok =
        end == hay.size() || !is_word_char(hay[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) return true;
  }
  return false;
}

LabelSet labels_mentioned(const std::string& text, const LabelSpace& space) {
  const auto hay = lower_collapsed(text);
  LabelSet found;
  for (const auto& label : space.labels()) {
    if (contains_word(hay, label.token())) found.insert(label);
  }
  return found;
}

std::optional<double> parse_unit_number(std::string_view s) {
  const auto t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return v;
}

// "name: value" → value; "value" → value.
std::optional<double> parse_score_line(const std::string& raw) {
  const auto line = trim(without_stars(raw));
  if (auto direct = parse_unit_number(line)) return direct;
  const auto colon = line.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const auto name = line.substr(0, colon);
  const bool name_ok = std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ' ';
  });
  if (!name_ok) return std::nullopt;
  return parse_unit_number(std::string_view(line).substr(colon + 1));
}

std::string utf8_prefix(const std::string& s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

}  // namespace

// ---------------------------------------------------------------------------

RoleTemplate RoleTemplate::parse(std::string name, const std::string& text) {
  const std::string sys_marker = "### system";
  const std::string user_marker = "### user";
  std::optional<std::size_t> sys_line;
  std::optional<std::size_t> user_line;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto t = trim(lines[i]);
    if (t == sys_marker && !sys_line) sys_line = i;
    if (t == user_marker && !user_line) user_line = i;
  }
  if (!sys_line || !user_line || *user_line < *sys_line) {
    throw TemplateError("template '" + name + "' needs '### system' then '### user' sections");
  }
  auto join = [&lines](std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
      if (i > from) out += '\n';
      out += lines[i];
    }
    return trim(out);
  };
  RoleTemplate t;
  t.name = std::move(name);
  t.system_text = join(*sys_line + 1, *user_line);
  t.user_text = join(*user_line + 1, lines.size());
  if (t.system_text.empty()) throw TemplateError("template '" + t.name + "' has an empty system section");
  static const std::regex slot_re(R"(\{\{([A-Za-z_][A-Za-z0-9_]*)\}\})");
  for (const auto* section : {&t.system_text, &t.user_text}) {
    for (std::sregex_iterator it(section->begin(), section->end(), slot_re), end; it != end; ++it) {
      t.slots.insert((*it)[1].str());
    }
  }
  return t;
}

namespace {

std::string fill(const std::string& text, const SlotValues& values, const std::string& tpl_name) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos) break;
    const auto slot = text.substr(open + 2, close - open - 2);
    auto it = values.find(slot);
    if (it == values.end()) {
      throw TemplateError("template '" + tpl_name + "': slot '" + slot + "' not filled");
    }
    out.append(text, pos, open - pos);
    out += it->second;
    pos = close + 2;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

}  // namespace

std::vector<ChatMessage> render(const RoleTemplate& tpl, const SlotValues& values) {
  for (const auto& [k, v] : values) {
    if (!tpl.slots.count(k)) {
      throw TemplateError("template '" + tpl.name + "' has no slot '" + k + "'");
    }
  }
  for (const auto& slot : tpl.slots) {
    if (!values.count(slot)) {
      throw TemplateError("template '" + tpl.name + "': slot '" + slot + "' not filled");
    }
  }
  std::vector<ChatMessage> msgs;
  msgs.push_back({ChatRole::system, fill(tpl.system_text, values, tpl.name)});
  msgs.push_back({ChatRole::user, fill(tpl.user_text, values, tpl.name)});
  return msgs;
}

const std::map<std::string, std::string>& builtin_template_sources() { return kBuiltinSources; }

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  for (const auto& [name, text] : kBuiltinSources) {
    set.templates_.emplace(name, RoleTemplate::parse(name, text));
  }
  return set;
}

TemplateSet TemplateSet::with_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("template directory '" + dir.string() + "' does not exist");
  }
  auto set = builtin();
  for (auto& [name, tpl] : set.templates_) {
    const auto file = dir / (name + ".tpl");
    if (!std::filesystem::exists(file)) continue;
    auto replacement = RoleTemplate::parse(name, read_text_file(file));
    if (replacement.slots != tpl.slots) {
      throw TemplateError("override '" + file.string() + "' must use the same slots as the built-in");
    }
    tpl = std::move(replacement);
  }
  return set;
}

const RoleTemplate& TemplateSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("no template named '" + name + "'");
  return it->second;
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : templates_) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<SubGoal> parse_plan(const std::string& text) {
  static const std::regex header_re(R"(^\s*total\s+steps\s*:\s*(\d+)\s*\.?\s*$)", std::regex::icase);
  static const std::regex step_re(R"(^\s*step\s+(\d+)\s*[:.]\s*(.*)$)", std::regex::icase);

  std::optional<long> declared;
  std::vector<SubGoal> goals;
  for (const auto& raw : split_lines(text)) {
    const auto line = without_stars(raw);
    std::smatch m;
    if (!declared) {
      if (std::regex_match(line, m, header_re)) {
        declared = std::strtol(m[1].str().c_str(), nullptr, 10);
      } else if (std::regex_match(line, m, step_re)) {
        throw PlanParseError("plan: step line before the 'Total steps:' header");
      }
      continue;
    }
    if (!std::regex_match(line, m, step_re)) continue;
    const long number = std::strtol(m[1].str().c_str(), nullptr, 10);
    const auto expected = static_cast<long>(goals.size()) + 1;
    if (number != expected) {
      throw PlanParseError("plan: expected 'Step " + std::to_string(expected) + ":' but found 'Step " +
                           std::to_string(number) + ":'");
    }
    auto desc = trim(m[2].str());
    if (desc.empty()) throw PlanParseError("plan: step " + std::to_string(number) + " has no description");
    goals.push_back(SubGoal{static_cast<int>(number), std::move(desc), 0.0, 0.0});
  }
  if (!declared) throw PlanParseError("plan: missing 'Total steps:' header");
  if (*declared == 0) throw PlanParseError("plan: zero steps declared");
  if (static_cast<std::size_t>(*declared) != goals.size()) {
    throw PlanParseError("plan: declared " + std::to_string(*declared) + " steps but found " +
                         std::to_string(goals.size()));
  }
  return goals;
}

CriticVerdict parse_verdict(const std::string& text) {
  const auto t = trim(text);
  if (t == "[True]") return CriticVerdict::approve();
  const std::string no = "[False]";
  const std::string tag = "[suggestion:";
  if (t.rfind(no, 0) == 0) {
    const auto rest = trim(std::string_view(t).substr(no.size()));
    if (rest.rfind(tag, 0) == 0 && rest.size() > tag.size() && rest.back() == ']') {
      auto suggestion = trim(std::string_view(rest).substr(tag.size(), rest.size() - tag.size() - 1));
      if (!suggestion.empty()) return CriticVerdict::reject(std::move(suggestion));
    }
    throw VerdictParseError("verdict: '[False]' must be followed by a non-empty '[suggestion: ...]'");
  }
  throw VerdictParseError("verdict: expected '[True]' or '[False]' + '[suggestion: ...]'");
}

TargetParse parse_target_single(const std::string& text, const LabelSpace& space) {
  TargetParse out;
  const auto norm = normalize_label_text(text);
  for (const auto& label : space.labels()) {
    if (label.token() == norm) {
      out.labels.insert(label);
      return out;
    }
  }
  auto found = labels_mentioned(text, space);
  if (found.size() == 1) {
    out.labels = std::move(found);
  } else {
    out.failed = true;
  }
  return out;
}

TargetParse parse_target_multi(const std::string& text, const LabelSpace& space) {
  static const std::regex marker_re(R"(\**\s*emotions\s*\**\s*:\s*\**)", std::regex::icase);
  TargetParse out;
  std::smatch m;
  if (!std::regex_search(text, m, marker_re)) {
    out.labels = labels_mentioned(text, space);
    out.failed = out.labels.empty();
    return out;
  }
  const auto after = static_cast<std::size_t>(m.position(0) + m.length(0));
  std::string list;
  const auto first = text.find_first_not_of(" \t", after);
  if (first != std::string::npos && text[first] == '[') {
    const auto close = text.find(']', first);
    list = text.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
  } else if (first != std::string::npos) {
    const auto eol = text.find('\n', first);
    list = text.substr(first, eol == std::string::npos ? std::string::npos : eol - first);
  }
  std::istringstream items(list);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (trim(item).empty()) continue;
    try {
      EmotionLabel label(item);
      if (space.contains(label)) {
        out.labels.insert(label);
      } else {
        ++out.dropped;
      }
    } catch (const InvalidLabelError&) {
      ++out.dropped;
    }
  }
  out.failed = out.labels.empty();
  return out;
}

std::optional<double> parse_score(const std::string& text) {
  for (const auto& line : split_lines(text)) {
    if (auto v = parse_score_line(line)) return v;
  }
  return std::nullopt;
}

std::optional<RiskRating> parse_risk(const std::string& text) {
  std::optional<double> emo;
  std::optional<double> safety;
  for (const auto& raw : split_lines(text)) {
    const auto line = lower_collapsed(without_stars(raw));
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const auto name = trim(std::string_view(line).substr(0, colon));
    const auto value = parse_unit_number(std::string_view(line).substr(colon + 1));
    if (!value) continue;
    if (name == "emotional_risk" || name == "emotional risk") emo = value;
    if (name == "safety_risk" || name == "safety risk") safety = value;
  }
  if (!emo || !safety) return std::nullopt;
  return RiskRating{*emo, *safety};
}

std::string format_verdict(const CriticVerdict& verdict) {
  if (verdict.approved) return "[True]";
  return "[False] [suggestion: " + verdict.suggestion.value_or("") + "]";
}

std::string history_digest(std::span<const SocraticTurn> history) {
  if (history.empty()) return "(none)";
  constexpr std::size_t kMaxTurns = 4;
  constexpr std::size_t kExcerptBytes = 400;
  const auto start = history.size() - std::min(history.size(), kMaxTurns);
  std::string out;
  for (std::size_t i = start; i < history.size(); ++i) {
    const auto& turn = history[i];
    if (i > start) out += "\n\n";
    out += "Turn " + std::to_string(turn.step) + ":\nQ: " + trim(turn.question) + "\nVerdict: ";
    for (std::size_t v = 0; v < turn.verdicts.size(); ++v) {
      if (v) out += " -> revised -> ";
      out += format_verdict(turn.verdicts[v]);
    }
    if (turn.verdicts.empty()) out += "(not judged)";
    out += "\nPrompt excerpt: " + utf8_prefix(turn.result_prompt.text, kExcerptBytes);
  }
  return out;
}

// ---------------------------------------------------------------------------

CompletionResult AgentClient::call(std::span<const ChatMessage> messages, const CallTag& tag) {
  auto result = backend_.complete(messages, temperature_, tag);
  std::lock_guard lock(mutex_);
  usage_.add(tag.role, result.prompt_tokens, result.completion_tokens);
  return result;
}

TokenUsage AgentClient::usage() const {
  std::lock_guard lock(mutex_);
  return usage_;
}

TokenUsage AgentClient::take_usage() {
  std::lock_guard lock(mutex_);
  return std::exchange(usage_, TokenUsage{});
}

void AgentClient::throw_same(const GrammarError& original, const std::string& msg) {
  if (dynamic_cast<const PlanParseError*>(&original)) throw PlanParseError(msg);
  if (dynamic_cast<const VerdictParseError*>(&original)) throw VerdictParseError(msg);
  throw GrammarError(msg);
}

}  // namespace apolo
