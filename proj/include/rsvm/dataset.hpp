#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rsvm {

struct Feature {
  int index;  // 1-based; strictly increasing within a row
  double value;
};

using SparseRow = std::vector<Feature>;

struct Dataset {
  std::vector<SparseRow> rows;
  std::vector<int> labels;  // +1 / -1
  int max_feature = 0;

  int n() const { return static_cast<int>(rows.size()); }
};

// LIBSVM text format: one sample per line, "<label> <index>:<value> ...".
// Labels > 0 map to +1, everything else to -1. Blank lines are skipped.
// Malformed tokens and non-increasing indices raise with the line number.
Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm_string(const std::string& text);
Dataset load_libsvm_file(const std::string& path);

void write_libsvm(const Dataset& ds, std::ostream& out);
std::string to_libsvm_string(const Dataset& ds);

// m samples drawn without replacement, deterministic in (ds, m, seed).
// Fisher-Yates prefix on mt19937_64 with rejection-sampled bounds.
Dataset subsample(const Dataset& ds, int m, std::uint64_t seed);

// Two unit-variance 2-D Gaussian clusters centered at (+-separation/2, 0)
// with balanced labels; a flip_fraction share of labels (seeded choice) are
// negated to act as outliers. Feature indices are 1 and 2.
Dataset make_synthetic(int n, double flip_fraction, double separation,
                       std::uint64_t seed);

}  // namespace rsvm
