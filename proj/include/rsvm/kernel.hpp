#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "rsvm/dataset.hpp"

namespace rsvm {

enum class KernelKind { linear, gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double kappa = 0.0;  // gaussian width: K(a,b) = exp(-kappa * |a-b|^2)
};

double kernel_eval(const KernelSpec& spec, const SparseRow& a, const SparseRow& b);

struct KernelCacheConfig {
  int full_matrix_threshold = 4096;  // n <= threshold: rows persist once built
  int lru_capacity = 256;            // rows kept above the threshold
  bool enable_row_norms = false;     // ||[K_i1..K_in]||_2, needed by propagation
};

// Row-oriented kernel access. Rows are built on demand and either kept for
// good (full-matrix mode) or recycled least-recently-used. Values from the
// cache are identical to direct evaluation. Concurrent readers are fine;
// insertion is serialized internally.
class KernelCache {
 public:
  KernelCache(const Dataset& ds, KernelSpec spec, KernelCacheConfig cfg = {});

  int n() const { return n_; }
  const KernelSpec& spec() const { return spec_; }
  const Dataset& dataset() const { return *ds_; }
  const KernelCacheConfig& config() const { return cfg_; }

  double diag(int i) const { return diag_[i]; }  // exactly 1 for gaussian

  // [K(x_i, x_1), ..., K(x_i, x_n)]; the shared_ptr keeps the row alive
  // across a later eviction.
  std::shared_ptr<const std::vector<double>> row(int i);

  // ||I_i||_2 for all i, computed once on first use. Throws unless
  // enable_row_norms was set (they cost a full pass over the matrix).
  const std::vector<double>& row_norms();

  std::uint64_t eval_count() const { return evals_.load(); }
  std::uint64_t row_builds() const { return row_builds_.load(); }

 private:
  std::vector<double> build_row(int i) const;

  const Dataset* ds_;
  KernelSpec spec_;
  KernelCacheConfig cfg_;
  int n_;
  bool full_mode_;
  std::vector<double> diag_;
  std::vector<double> self_dot_;  // <x_i, x_i>, for gaussian distances

  mutable std::mutex mtx_;
  std::vector<std::shared_ptr<const std::vector<double>>> slots_;  // full mode
  std::list<int> lru_order_;
  std::unordered_map<int, std::pair<std::shared_ptr<const std::vector<double>>,
                                    std::list<int>::iterator>>
      lru_;

  std::once_flag norms_once_;
  std::vector<double> row_norms_;

  mutable std::atomic<std::uint64_t> evals_{0};
  std::atomic<std::uint64_t> row_builds_{0};
};

}  // namespace rsvm
