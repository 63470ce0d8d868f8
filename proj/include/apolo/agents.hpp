#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "apolo/backend.hpp"
#include "apolo/errors.hpp"
#include "apolo/labels.hpp"
#include "apolo/types.hpp"

namespace apolo {

// ---------------------------------------------------------------------------
// Templates
//
// A template file has a "### system" section and a "### user" section.
// Slots are written {{name}}; a template's slot set is exactly the names
// it references, so every declared slot must be filled.

struct RoleTemplate {
  std::string name;
  std::string system_text;
  std::string user_text;
  std::set<std::string> slots;

  /// Throws TemplateError when a section is missing.
  static RoleTemplate parse(std::string name, const std::string& text);
};

using SlotValues = std::map<std::string, std::string>;

/// Fills both sections. Throws TemplateError for a missing or unknown slot.
std::vector<ChatMessage> render(const RoleTemplate& tpl, const SlotValues& values);

class TemplateSet {
 public:
  /// The templates compiled into the library from templates/*.tpl.
  static TemplateSet builtin();
  /// Built-ins overridden by any <name>.tpl found in `dir`.
  static TemplateSet with_overrides(const std::filesystem::path& dir);

  const RoleTemplate& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, RoleTemplate> templates_;
};

/// Raw text of the built-in template files, keyed by file stem.
const std::map<std::string, std::string>& builtin_template_sources();

// ---------------------------------------------------------------------------
// Output grammars

/// "Total steps: N" followed by "Step 1: ..." .. "Step N: ...".
/// Throws PlanParseError on a missing header, zero steps, a count mismatch,
/// out-of-order numbering or an empty description.
std::vector<SubGoal> parse_plan(const std::string& text);

/// "[True]" alone, or "[False]" then "[suggestion: ...]". Bracket tokens are
/// case-sensitive. Throws VerdictParseError otherwise.
CriticVerdict parse_verdict(const std::string& text);

struct TargetParse {
  LabelSet labels;
  bool failed = false;
  int dropped = 0;  // list entries outside the label space
};

TargetParse parse_target_single(const std::string& text, const LabelSpace& space);
TargetParse parse_target_multi(const std::string& text, const LabelSpace& space);

/// First line holding just a number (optionally "name: number") in [0,1].
std::optional<double> parse_score(const std::string& text);

struct RiskRating {
  double emo = 0.0;
  double safety = 0.0;
};

/// Needs both "emotional_risk: x" and "safety_risk: y" lines, values in [0,1].
std::optional<RiskRating> parse_risk(const std::string& text);

/// Bounded digest of the interaction history: the last min(|history|, 4)
/// turns, each as question, verdict, and the first 400 characters of the
/// resulting prompt.
std::string history_digest(std::span<const SocraticTurn> history);

std::string format_verdict(const CriticVerdict& verdict);

// ---------------------------------------------------------------------------

/// Routes agent calls to a backend at a fixed temperature and meters token
/// usage per role. Safe to share between threads.
class AgentClient {
 public:
  AgentClient(Backend& backend, double temperature)
      : backend_(backend), temperature_(temperature) {}

  CompletionResult call(std::span<const ChatMessage> messages, const CallTag& tag);

  /// Calls and parses; on GrammarError re-asks up to `kMaxReasks` times with
  /// the bad answer and a format reminder appended. Re-ask number r uses
  /// occurrence = tag.occurrence + r * stride.
  template <class Parser>
  auto ask(std::vector<ChatMessage> messages, CallTag tag, int stride, Parser&& parser)
      -> decltype(parser(std::string{})) {
    const int first_occurrence = tag.occurrence;
    for (int reask = 0;; ++reask) {
      tag.occurrence = first_occurrence + reask * stride;
      auto result = call(messages, tag);
      try {
        return parser(result.text);
      } catch (const GrammarError& e) {
        if (reask >= kMaxReasks) {
          throw_same(e, to_string(tag) + ": output still outside the required format after " +
                            std::to_string(kMaxReasks) + " re-asks: " + e.what());
        }
        messages.push_back({ChatRole::assistant, result.text});
        messages.push_back({ChatRole::user, kFormatReminder});
      }
    }
  }

  TokenUsage usage() const;
  /// Returns the usage since the previous take and resets the meter.
  TokenUsage take_usage();

  double temperature() const { return temperature_; }

  static constexpr int kMaxReasks = 2;
  static constexpr const char* kFormatReminder =
      "Your previous answer did not follow the required output format. Answer again and "
      "follow the format exactly.";

 private:
  [[noreturn]] static void throw_same(const GrammarError& original, const std::string& msg);

  Backend& backend_;
  double temperature_;
  mutable std::mutex mutex_;
  TokenUsage usage_;
};

}  // namespace apolo
