#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace apolo {

/// Lowercase, trim, collapse inner whitespace, strip surrounding
/// punctuation. Brackets that are balanced inside the token survive, so
/// "brain dysfunction (forget)" is kept intact. Idempotent.
std::string normalize_label_text(std::string_view raw);

class EmotionLabel {
 public:
  /// Throws InvalidLabelError when nothing is left after normalization.
  explicit EmotionLabel(std::string_view raw);

  const std::string& token() const { return token_; }

  auto operator<=>(const EmotionLabel&) const = default;
  bool operator==(const EmotionLabel&) const = default;

 private:
  std::string token_;
};

EmotionLabel normalize_label(std::string_view raw);

using LabelSet = std::set<EmotionLabel>;

enum class LabelMode { single, multi };

std::string_view to_string(LabelMode mode);
LabelMode label_mode_from_string(std::string_view text);

class LabelSpace {
 public:
  LabelSpace(std::vector<EmotionLabel> labels, LabelMode mode);

  const std::vector<EmotionLabel>& labels() const { return labels_; }
  LabelMode mode() const { return mode_; }
  std::size_t size() const { return labels_.size(); }

  std::optional<std::size_t> index_of(const EmotionLabel& label) const;
  bool contains(const EmotionLabel& label) const {
    return index_of(label).has_value();
  }

  /// "a, b, c" in canonical order; used for the Target options line.
  std::string options_list() const;

 private:
  std::vector<EmotionLabel> labels_;
  LabelMode mode_;
};

}  // namespace apolo
