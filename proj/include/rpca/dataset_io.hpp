#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/sample_source.hpp"

namespace rpca {

namespace detail {

// Parses one non-empty data line. Returns false for blank/comment lines.
inline bool parse_sample_line(const std::string& line, std::size_t lineno, std::vector<double>& coords,
                              Label& label) {
  std::istringstream in(line);
  std::string tok;
  bool first = true;
  label = Label::Unknown;
  coords.clear();
  while (in >> tok) {
    if (first && tok[0] == '#') return false;
    if (first && (tok == "inlier" || tok == "outlier")) {
      label = tok == "inlier" ? Label::Inlier : Label::Outlier;
      first = false;
      continue;
    }
    first = false;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
      throw InvalidArgument("line " + std::to_string(lineno) + ": cannot parse '" + tok + "' as a number");
    if (!std::isfinite(v)) throw InvalidArgument("line " + std::to_string(lineno) + ": non-finite value");
    coords.push_back(v);
  }
  if (first) return false;
  if (coords.empty()) throw InvalidArgument("line " + std::to_string(lineno) + ": label without coordinates");
  return true;
}

}  // namespace detail

/// Reads whitespace-separated samples, one per line, optional leading
/// inlier/outlier column. Labels must be all present or all absent.
inline PointSet read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0, dim = 0;
  std::vector<double> coords, row;
  std::vector<Label> labels;
  bool labelled = false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Label lab;
    if (!detail::parse_sample_line(line, lineno, row, lab)) continue;
    if (rows == 0) {
      dim = row.size();
      labelled = lab != Label::Unknown;
    } else {
      if (row.size() != dim)
        throw InvalidArgument("line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                              " coordinates, found " + std::to_string(row.size()));
      if ((lab != Label::Unknown) != labelled)
        throw InvalidArgument("line " + std::to_string(lineno) + ": label column present on some lines only");
    }
    coords.insert(coords.end(), row.begin(), row.end());
    if (labelled) labels.push_back(lab);
    ++rows;
  }
  if (rows == 0) throw InvalidArgument("dataset has no samples");
  return PointSet(dim, std::move(coords), std::move(labels));
}

inline PointSet read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset file: " + path);
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const PointSet& ps) {
  char buf[32];
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps.has_labels()) out << to_string(ps.label(i)) << ' ';
    auto x = ps[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x[j]);
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
}

inline void write_dataset_file(const std::string& path, const PointSet& ps) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open output file: " + path);
  write_dataset(out, ps);
  if (!out) throw InvalidArgument("write failed: " + path);
}

/// Streams a dataset file line by line without loading it.
class FileReplaySource final : public SampleSource {
 public:
  explicit FileReplaySource(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw InvalidArgument("cannot open dataset file: " + path);
    if (!advance()) throw InvalidArgument("dataset has no samples: " + path);
    dim_ = pending_.size();
  }

  std::size_t dim() const override { return dim_; }
  bool next(std::span<double> out) override {
    if (!has_pending_) return false;
    if (pending_.size() != dim_)
      throw InvalidArgument(path_ + ": line " + std::to_string(lineno_) + ": dimension mismatch");
    std::copy(pending_.begin(), pending_.end(), out.begin());
    last_ = pending_label_;
    advance();
    return true;
  }
  Label last_label() const override { return last_; }
  SourceOrigin origin() const override { return SourceOrigin::FileReplay; }

 private:
  bool advance() {
    std::string line;
    has_pending_ = false;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (detail::parse_sample_line(line, lineno_, pending_, pending_label_)) {
        has_pending_ = true;
        return true;
      }
    }
    return false;
  }

  std::ifstream in_;
  std::string path_;
  std::size_t dim_ = 0;
  std::size_t lineno_ = 0;
  std::vector<double> pending_;
  Label pending_label_ = Label::Unknown;
  bool has_pending_ = false;
  Label last_ = Label::Unknown;
};

}  // namespace rpca
