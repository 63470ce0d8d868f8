#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "apolo/labels.hpp"
#include "apolo/types.hpp"

namespace apolo {

/// Label-space file: first line "mode: single" or "mode: multi", then one
/// label per line. Blank lines and lines starting with '#' are ignored.
LabelSpace load_label_space(const std::filesystem::path& path);
LabelSpace parse_label_space(const std::string& text);

struct DatasetDescriptor {
  std::string name;
  LabelSpace label_space;
  std::map<std::string, std::filesystem::path> splits;

  LabelMode mode() const { return label_space.mode(); }
};

/// Reads one split as line-delimited JSON records.
///
/// Single-label records: {"id", "context"?: [..], "utterance", "label"}.
/// Multi-label records:  {"id", "title"?, "text", "labels": [..]}.
///
/// Samples come back in file order. Malformed JSON or missing fields raise
/// ParseError with the 1-based line number; an unknown or wrong number of
/// gold labels and duplicate ids raise SchemaError naming the sample id.
std::vector<Sample> load_samples(const DatasetDescriptor& descriptor,
                                 const std::string& split);

std::vector<Sample> parse_samples(const std::string& text, const LabelSpace& space);

/// Seeded selection of k samples without replacement. The chosen samples
/// keep their input order. Uses only mt19937_64 raw output so the choice is
/// identical across standard libraries.
std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t k,
                              std::uint64_t seed);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace apolo
