#include "apolo/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "apolo/errors.hpp"

namespace apolo {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const char* key, std::size_t line) {
  if (!v.is_array()) throw ParseError(std::string("field '") + key + "' must be a list", line);
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw ParseError(std::string("field '") + key + "' must contain only strings", line);
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

EmotionLabel gold_label(const std::string& raw, const LabelSpace& space,
                        const std::string& id) {
  try {
    EmotionLabel label(raw);
    if (!space.contains(label)) {
      throw SchemaError("sample '" + id + "': unknown label '" + raw + "'");
    }
    return label;
  } catch (const InvalidLabelError&) {
    throw SchemaError("sample '" + id + "': invalid label '" + raw + "'");
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabelSpace parse_label_space(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<LabelMode> mode;
  std::vector<EmotionLabel> labels;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!mode) {
      const std::string prefix = "mode:";
      if (line.rfind(prefix, 0) != 0) {
        throw ParseError("label file must start with 'mode: single' or 'mode: multi'", lineno);
      }
      try {
        mode = label_mode_from_string(trim(line.substr(prefix.size())));
      } catch (const ArgumentError& e) {
        throw ParseError(e.what(), lineno);
      }
      continue;
    }
    try {
      labels.emplace_back(line);
    } catch (const InvalidLabelError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!mode) throw ParseError("label file has no mode line", lineno);
  try {
    return LabelSpace(std::move(labels), *mode);
  } catch (const ArgumentError& e) {
    throw SchemaError(std::string("label file: ") + e.what());
  }
}

LabelSpace load_label_space(const std::filesystem::path& path) {
  return parse_label_space(read_text_file(path));
}

std::vector<Sample> parse_samples(const std::string& text, const LabelSpace& space) {
  std::vector<Sample> samples;
  std::unordered_set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("record must be an object", lineno);

    Sample s;
    s.id = require_string(obj, "id", lineno);
    if (s.id.empty()) throw ParseError("empty sample id", lineno);

    if (space.mode() == LabelMode::single) {
      if (auto it = obj.find("context"); it != obj.end() && !it->is_null()) {
        s.context = string_list(*it, "context", lineno);
      }
      s.focus_text = require_string(obj, "utterance", lineno);
      const auto& label = require(obj, "label", lineno);
      if (label.is_string()) {
        s.gold.insert(gold_label(label.get<std::string>(), space, s.id));
      } else if (label.is_array()) {
        for (const auto& raw : string_list(label, "label", lineno)) {
          s.gold.insert(gold_label(raw, space, s.id));
        }
      } else {
        throw ParseError("field 'label' must be a string", lineno);
      }
      if (s.gold.size() != 1) {
        throw SchemaError("sample '" + s.id + "': single-label samples need exactly one label");
      }
    } else {
      if (auto it = obj.find("title"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("field 'title' must be a string", lineno);
        s.title = it->get<std::string>();
      }
      s.focus_text = require_string(obj, "text", lineno);
      for (const auto& raw : string_list(require(obj, "labels", lineno), "labels", lineno)) {
        s.gold.insert(gold_label(raw, space, s.id));
      }
      if (s.gold.empty()) {
        throw SchemaError("sample '" + s.id + "': multi-label samples need at least one label");
      }
    }
    if (trim(s.focus_text).empty()) {
      throw SchemaError("sample '" + s.id + "': empty text to classify");
    }
    if (!ids.insert(s.id).second) {
      throw SchemaError("duplicate sample id '" + s.id + "'");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> load_samples(const DatasetDescriptor& descriptor,
                                 const std::string& split) {
  auto it = descriptor.splits.find(split);
  if (it == descriptor.splits.end()) {
    throw ArgumentError("dataset '" + descriptor.name + "' has no split '" + split + "'");
  }
  return parse_samples(read_text_file(it->second), descriptor.label_space);
}

std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t k,
                              std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (k < 1 || k > n) {
    throw ArgumentError("subsample size " + std::to_string(k) + " outside [1, " +
                        std::to_string(n) + "]");
  }
  if (k == n) return samples;

  // Partial Fisher-Yates with rejection sampling on raw engine output;
  // std::uniform_int_distribution is implementation-defined.
  std::mt19937_64 engine(seed);
  auto uniform_below = [&engine](std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine();
    } while (x >= limit);
    return x % bound;
  };
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::vector<Sample> out;
  out.reserve(k);
  for (auto i : idx) out.push_back(samples[i]);
  return out;
}

}  // namespace apolo
