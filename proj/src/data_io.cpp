#include "mtrans/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mtrans/errors.hpp"
#include "mtrans/oracle.hpp"
#include "mtrans/utf8.hpp"

namespace mtrans {

std::string to_string(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::Sig2017:
      return "sig2017";
    case DatasetFormat::Sig2016:
      return "sig2016";
    case DatasetFormat::Pairs:
      return "pairs";
  }
  return "?";
}

DatasetFormat parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "sig2017") return DatasetFormat::Sig2017;
  if (lower == "sig2016") return DatasetFormat::Sig2016;
  if (lower == "pairs") return DatasetFormat::Pairs;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                   : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

char feature_separator(DatasetFormat f) { return f == DatasetFormat::Sig2016 ? ',' : ';'; }

std::u32string field(std::string_view raw, std::size_t line, const char* name) {
  if (raw.empty()) throw ParseError(std::string("empty ") + name + " field", line);
  return utf8::decode(raw);
}

std::vector<std::string> features(std::string_view raw, DatasetFormat f, std::size_t line) {
  std::vector<std::string> out;
  for (auto part : split(raw, feature_separator(f))) {
    const auto t = trim(part);
    if (t.empty()) continue;
    if (!utf8::is_valid(t)) throw ParseError("invalid UTF-8 in features", line);
    out.emplace_back(t);
  }
  return out;
}

}  // namespace

std::vector<Sample> parse_dataset(const std::string& text, DatasetFormat format,
                                  ReadReport* report) {
  ReadReport rep;
  std::vector<Sample> samples;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    ++rep.lines;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      ++rep.blank_lines;
      continue;
    }
    if (!utf8::is_valid(line)) throw ParseError("invalid UTF-8", line_no);
    auto cols = split(line, '\t');
    for (auto& c : cols) c = trim(c);

    Sample s;
    switch (format) {
      case DatasetFormat::Sig2017:
        if (cols.size() == 3) {
          s.x = field(cols[0], line_no, "lemma");
          s.y = field(cols[1], line_no, "inflected");
          s.features = features(cols[2], format, line_no);
        } else if (cols.size() == 2) {
          s.x = field(cols[0], line_no, "lemma");
          s.features = features(cols[1], format, line_no);
        } else {
          throw ParseError("expected 3 columns (or 2 without target), got " +
                               std::to_string(cols.size()),
                           line_no);
        }
        break;
      case DatasetFormat::Sig2016:
        if (cols.size() == 3) {
          s.x = field(cols[0], line_no, "lemma");
          s.features = features(cols[1], format, line_no);
          s.y = field(cols[2], line_no, "inflected");
        } else if (cols.size() == 2) {
          s.x = field(cols[0], line_no, "lemma");
          s.features = features(cols[1], format, line_no);
        } else {
          throw ParseError("expected 3 columns (or 2 without target), got " +
                               std::to_string(cols.size()),
                           line_no);
        }
        break;
      case DatasetFormat::Pairs:
        if (cols.size() == 2) {
          s.x = field(cols[0], line_no, "source");
          s.y = field(cols[1], line_no, "target");
        } else if (cols.size() == 1) {
          s.x = field(cols[0], line_no, "source");
        } else {
          throw ParseError("expected 2 columns (or 1 without target), got " +
                               std::to_string(cols.size()),
                           line_no);
        }
        break;
    }
    samples.push_back(std::move(s));
  }
  rep.samples = samples.size();
  if (samples.empty()) std::cerr << "warning: dataset contains no samples\n";
  if (report) *report = rep;
  return samples;
}

std::vector<Sample> read_dataset(const std::filesystem::path& path, DatasetFormat format,
                                 ReadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format, report);
}

std::string format_predictions(const std::vector<Sample>& samples,
                               const std::vector<std::u32string>& predictions,
                               DatasetFormat format) {
  if (samples.size() != predictions.size()) {
    throw UsageError("prediction count does not match sample count");
  }
  auto check = [](const std::u32string& s) {
    if (s.find(U'\t') != std::u32string::npos || s.find(U'\n') != std::u32string::npos) {
      throw InputError("a field cannot contain a tab or newline: '" + utf8::encode(s) + "'");
    }
    return utf8::encode(s);
  };
  const std::string sep(1, feature_separator(format));
  std::string out;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    std::string feats;
    for (std::size_t f = 0; f < s.features.size(); ++f) {
      if (f) feats += sep;
      feats += s.features[f];
    }
    switch (format) {
      case DatasetFormat::Sig2017:
        out += check(s.x) + '\t' + check(predictions[k]) + '\t' + feats;
        break;
      case DatasetFormat::Sig2016:
        out += check(s.x) + '\t' + feats + '\t' + check(predictions[k]);
        break;
      case DatasetFormat::Pairs:
        out += check(s.x) + '\t' + check(predictions[k]);
        break;
    }
    out += '\n';
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Sample>& samples,
                       const std::vector<std::u32string>& predictions, DatasetFormat format) {
  const auto text = format_predictions(samples, predictions, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

Evaluation evaluate(const std::vector<Sample>& gold,
                    const std::vector<std::u32string>& predictions) {
  if (gold.size() != predictions.size()) {
    throw UsageError("gold and prediction lists differ in length");
  }
  Evaluation e;
  if (gold.empty()) return e;
  std::size_t correct = 0;
  double dist = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (!gold[k].y) throw UsageError("gold sample without a target");
    if (*gold[k].y == predictions[k]) ++correct;
    dist += levenshtein(*gold[k].y, predictions[k]);
  }
  e.exact_match = static_cast<double>(correct) / gold.size();
  e.mean_distance = dist / gold.size();
  return e;
}

}  // namespace mtrans
