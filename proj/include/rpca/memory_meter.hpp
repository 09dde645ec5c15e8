#pragma once

#include <algorithm>
#include <cstddef>
#include <string>

#include "rpca/errors.hpp"

namespace rpca {

/// Counts live real numbers attributable to algorithm state and tracks the
/// peak. Allocations register through RAII leases.
class MemoryMeter {
 public:
  explicit MemoryMeter(std::size_t budget = 0) : budget_(budget) {}

  class Lease {
   public:
    Lease() = default;
    Lease(MemoryMeter* m, std::size_t n) : meter_(m), n_(n) {
      if (meter_) meter_->acquire(n_);
    }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease(Lease&& o) noexcept : meter_(o.meter_), n_(o.n_) { o.meter_ = nullptr; }
    Lease& operator=(Lease&& o) noexcept {
      if (this != &o) {
        release();
        meter_ = o.meter_;
        n_ = o.n_;
        o.meter_ = nullptr;
      }
      return *this;
    }
    ~Lease() { release(); }

    void resize(std::size_t n) {
      if (!meter_) return;
      if (n > n_) meter_->acquire(n - n_);
      else meter_->current_ -= n_ - n;
      n_ = n;
    }

   private:
    void release() {
      if (meter_) meter_->current_ -= n_;
      meter_ = nullptr;
    }
    MemoryMeter* meter_ = nullptr;
    std::size_t n_ = 0;
  };

  Lease lease(std::size_t scalars) { return Lease(this, scalars); }

  std::size_t current() const noexcept { return current_; }
  std::size_t peak() const noexcept { return peak_; }
  std::size_t budget() const noexcept { return budget_; }
  void set_budget(std::size_t b) { budget_ = b; }

 private:
  void acquire(std::size_t n) {
    current_ += n;
    peak_ = std::max(peak_, current_);
    if (budget_ != 0 && current_ > budget_)
      throw InternalError("memory budget exceeded: " + std::to_string(current_) + " > " + std::to_string(budget_) +
                          " scalars");
  }

  std::size_t budget_;
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
};

/// Lease helper that tolerates a null meter.
inline MemoryMeter::Lease lease(MemoryMeter* m, std::size_t scalars) { return MemoryMeter::Lease(m, scalars); }

}  // namespace rpca
