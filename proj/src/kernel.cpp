#include "rsvm/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace rsvm {

namespace {

double sparse_dot(const SparseRow& a, const SparseRow& b) {
  double s = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].index == b[j].index) {
      s += a[i].value * b[j].value;
      ++i;
      ++j;
    } else if (a[i].index < b[j].index) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

double self_dot(const SparseRow& a) {
  double s = 0;
  for (const Feature& f : a) s += f.value * f.value;
  return s;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const SparseRow& a, const SparseRow& b) {
  if (spec.kind == KernelKind::linear) return sparse_dot(a, b);
  const double d2 = self_dot(a) + self_dot(b) - 2.0 * sparse_dot(a, b);
  return std::exp(-spec.kappa * std::max(d2, 0.0));
}

KernelCache::KernelCache(const Dataset& ds, KernelSpec spec, KernelCacheConfig cfg)
    : ds_(&ds), spec_(spec), cfg_(cfg), n_(ds.n()) {
  if (spec_.kind == KernelKind::gaussian && !(spec_.kappa > 0))
    throw std::invalid_argument("kernel: gaussian kappa must be > 0");
  full_mode_ = n_ <= cfg_.full_matrix_threshold;
  if (full_mode_) slots_.resize(n_);

  self_dot_.resize(n_);
  diag_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    self_dot_[i] = self_dot(ds.rows[i]);
    if (spec_.kind == KernelKind::gaussian) {
      diag_[i] = 1.0;
    } else {
      diag_[i] = self_dot_[i];
      evals_.fetch_add(1, std::memory_order_relaxed);
    }
  }
}

std::vector<double> KernelCache::build_row(int i) const {
  const auto& rows = ds_->rows;
  std::vector<double> out(n_);
  if (spec_.kind == KernelKind::linear) {
    for (int j = 0; j < n_; ++j) out[j] = sparse_dot(rows[i], rows[j]);
  } else {
    const double si = self_dot_[i];
    for (int j = 0; j < n_; ++j) {
      const double d2 = si + self_dot_[j] - 2.0 * sparse_dot(rows[i], rows[j]);
      out[j] = std::exp(-spec_.kappa * std::max(d2, 0.0));
    }
    out[i] = 1.0;
  }
  evals_.fetch_add(static_cast<std::uint64_t>(n_), std::memory_order_relaxed);
  return out;
}

std::shared_ptr<const std::vector<double>> KernelCache::row(int i) {
  if (i < 0 || i >= n_) throw std::out_of_range("kernel row index out of range");
  {
    std::lock_guard<std::mutex> lock(mtx_);
    if (full_mode_) {
      if (slots_[i]) return slots_[i];
    } else {
      auto it = lru_.find(i);
      if (it != lru_.end()) {
        lru_order_.splice(lru_order_.begin(), lru_order_, it->second.second);
        return it->second.first;
      }
    }
  }
  auto fresh = std::make_shared<const std::vector<double>>(build_row(i));
  row_builds_.fetch_add(1, std::memory_order_relaxed);
  std::lock_guard<std::mutex> lock(mtx_);
  if (full_mode_) {
    if (!slots_[i]) slots_[i] = fresh;
    return slots_[i];
  }
  auto it = lru_.find(i);
  if (it != lru_.end()) return it->second.first;  // raced with another builder
  lru_order_.push_front(i);
  lru_.emplace(i, std::make_pair(fresh, lru_order_.begin()));
  if (static_cast<int>(lru_.size()) > std::max(1, cfg_.lru_capacity)) {
    const int victim = lru_order_.back();
    lru_order_.pop_back();
    lru_.erase(victim);
  }
  return fresh;
}

const std::vector<double>& KernelCache::row_norms() {
  if (!cfg_.enable_row_norms)
    throw std::logic_error(
        "kernel row norms disabled; set KernelCacheConfig::enable_row_norms "
        "before constructing the cache");
  std::call_once(norms_once_, [this] {
    std::vector<double> norms(n_);
    for (int i = 0; i < n_; ++i) {
      auto r = row(i);
      double s = 0;
      for (double v : *r) s += v * v;
      norms[i] = std::sqrt(s);
    }
    row_norms_ = std::move(norms);
  });
  return row_norms_;
}

}  // namespace rsvm
