#pragma once

// Shared-task dataset formats, exact-match evaluation and model checkpoints.

#include <filesystem>
#include <string>
#include <vector>

#include "mtrans/core.hpp"
#include "mtrans/network.hpp"

namespace mtrans {

// SIG2017: lemma TAB inflected TAB feats(;)    prediction input: lemma TAB feats
// SIG2016: lemma TAB feats(,) TAB inflected    prediction input: lemma TAB feats
// PAIRS:   source TAB target                   prediction input: source
enum class DatasetFormat { Sig2017, Sig2016, Pairs };

std::string to_string(DatasetFormat f);
// Accepts sig2017, sig2016, pairs (case-insensitive).
DatasetFormat parse_format(std::string_view name);

struct ReadReport {
  std::size_t lines = 0;
  std::size_t blank_lines = 0;
  std::size_t samples = 0;
};

// One sample per non-blank line. Throws ParseError (with the 1-based line
// number) on a wrong column count or empty field and InputError on invalid
// UTF-8 or an unreadable file.
std::vector<Sample> read_dataset(const std::filesystem::path& path, DatasetFormat format,
                                 ReadReport* report = nullptr);
std::vector<Sample> parse_dataset(const std::string& text, DatasetFormat format,
                                  ReadReport* report = nullptr);

// Mirrors the input layout with the target column set to the prediction.
// Throws InputError when a field would contain a tab or newline and
// UsageError when the lists differ in length.
std::string format_predictions(const std::vector<Sample>& samples,
                               const std::vector<std::u32string>& predictions,
                               DatasetFormat format);
void write_predictions(const std::filesystem::path& path, const std::vector<Sample>& samples,
                       const std::vector<std::u32string>& predictions, DatasetFormat format);

struct Evaluation {
  double exact_match = 0;
  double mean_distance = 0;
};

// Throws UsageError when the lists differ in length or a gold target is
// missing.
Evaluation evaluate(const std::vector<Sample>& gold, const std::vector<std::u32string>& predictions);

struct ModelBundle {
  Model model;
  TrainConfig config;
};

// Binary container: magic, format version, config, vocabularies and every
// tensor as raw little-endian doubles. Loading reproduces the model bit for
// bit. Throws LoadError on a bad magic, unknown version or truncation.
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainConfig& config);
ModelBundle load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Model& model, const TrainConfig& config);
ModelBundle deserialize_checkpoint(const std::string& bytes);

}  // namespace mtrans
