#include "rsvm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rsvm/rng.hpp"

namespace rsvm {

namespace {

[[noreturn]] void parse_fail(long line_no, const std::string& what) {
  throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                           ": " + what);
}

const char* skip_ws(const char* p, const char* end) {
  while (p != end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  return p;
}

double parse_double(const char*& p, const char* end, long line_no,
                    const char* what) {
  if (p != end && *p == '+') ++p;  // from_chars rejects an explicit plus
  double v = 0;
  auto [next, ec] = std::from_chars(p, end, v);
  if (ec != std::errc{} || next == p) parse_fail(line_no, std::string("bad ") + what);
  if (!std::isfinite(v)) parse_fail(line_no, std::string("non-finite ") + what);
  p = next;
  return v;
}

int parse_index(const char*& p, const char* end, long line_no) {
  if (p != end && *p == '+') ++p;
  int v = 0;
  auto [next, ec] = std::from_chars(p, end, v);
  if (ec != std::errc{} || next == p) parse_fail(line_no, "bad feature index");
  p = next;
  return v;
}

void validate(const Dataset& ds) {
  if (ds.rows.size() != ds.labels.size())
    throw std::logic_error("dataset: rows/labels length mismatch");
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (ds.labels[i] != 1 && ds.labels[i] != -1)
      throw std::logic_error("dataset: label outside {-1,+1}");
    int prev = 0;
    for (const Feature& f : ds.rows[i]) {
      if (f.index <= prev) throw std::logic_error("dataset: indices not increasing");
      prev = f.index;
    }
  }
}

int max_feature_of(const Dataset& ds) {
  int d = 0;
  for (const auto& row : ds.rows)
    if (!row.empty()) d = std::max(d, row.back().index);
  return d;
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  Dataset ds;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const char* p = line.data();
    const char* end = p + line.size();
    p = skip_ws(p, end);
    if (p == end) continue;

    double raw_label = parse_double(p, end, line_no, "label");
    SparseRow row;
    int prev_index = 0;
    for (;;) {
      p = skip_ws(p, end);
      if (p == end) break;
      int idx = parse_index(p, end, line_no);
      if (p == end || *p != ':') parse_fail(line_no, "expected ':' after index");
      ++p;
      double val = parse_double(p, end, line_no, "feature value");
      if (idx < 1) parse_fail(line_no, "feature index must be >= 1");
      if (idx <= prev_index) parse_fail(line_no, "non-increasing feature indices");
      prev_index = idx;
      row.push_back({idx, val});
    }
    ds.labels.push_back(raw_label > 0 ? 1 : -1);
    ds.rows.push_back(std::move(row));
  }
  if (ds.rows.empty()) throw std::runtime_error("parse error: no samples");
  ds.max_feature = max_feature_of(ds);
  validate(ds);
  return ds;
}

Dataset parse_libsvm_string(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

Dataset load_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_libsvm(in);
}

void write_libsvm(const Dataset& ds, std::ostream& out) {
  char buf[64];
  for (int i = 0; i < ds.n(); ++i) {
    out << ds.labels[i];
    for (const Feature& f : ds.rows[i]) {
      std::snprintf(buf, sizeof buf, " %d:%.17g", f.index, f.value);
      out << buf;
    }
    out << '\n';
  }
}

std::string to_libsvm_string(const Dataset& ds) {
  std::ostringstream out;
  write_libsvm(ds, out);
  return out.str();
}

Dataset subsample(const Dataset& ds, int m, std::uint64_t seed) {
  if (m < 1 || m > ds.n())
    throw std::invalid_argument("subsample: need 1 <= m <= n, got m=" +
                                std::to_string(m) + ", n=" + std::to_string(ds.n()));
  std::vector<int> idx(ds.n());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(seed);
  Dataset out;
  out.rows.reserve(m);
  out.labels.reserve(m);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(bounded_u64(gen, ds.n() - i));
    std::swap(idx[i], idx[j]);
    out.rows.push_back(ds.rows[idx[i]]);
    out.labels.push_back(ds.labels[idx[i]]);
  }
  out.max_feature = max_feature_of(out);
  validate(out);
  return out;
}

Dataset make_synthetic(int n, double flip_fraction, double separation,
                       std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_synthetic: n must be >= 2");
  if (!(flip_fraction >= 0.0 && flip_fraction <= 0.5))
    throw std::invalid_argument("make_synthetic: flip_fraction must be in [0, 0.5]");
  if (!(separation > 0.0))
    throw std::invalid_argument("make_synthetic: separation must be > 0");

  std::mt19937_64 gen(seed);
  Dataset ds;
  ds.rows.reserve(n);
  ds.labels.reserve(n);
  const int n_pos = (n + 1) / 2;
  for (int i = 0; i < n; ++i) {
    const int label = i < n_pos ? 1 : -1;
    const double cx = label * separation / 2.0;
    auto [gx, gy] = gauss_pair(gen);
    ds.rows.push_back({{1, cx + gx}, {2, gy}});
    ds.labels.push_back(label);
  }

  // Label flips drawn after all features so flip=0 runs share the geometry.
  const int flips = static_cast<int>(std::llround(flip_fraction * n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < flips; ++i) {
    const int j = i + static_cast<int>(bounded_u64(gen, n - i));
    std::swap(idx[i], idx[j]);
    ds.labels[idx[i]] = -ds.labels[idx[i]];
  }

  ds.max_feature = 2;
  validate(ds);
  return ds;
}

}  // namespace rsvm
