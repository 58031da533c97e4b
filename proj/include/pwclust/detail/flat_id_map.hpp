#pragma once

#include <cstdint>
#include <vector>

#include "pwclust/detail/rng.hpp"

namespace pwclust::detail {

/// Open-addressing map from 64-bit cube keys to dense ids, reused across the
/// (u, v) scales of one distance evaluation. Epoch stamping makes clearing
/// O(1); keys never equal the empty sentinel because the packed layouts leave
/// the top bits of the low word zero.
class FlatIdMap {
 public:
  explicit FlatIdMap(std::size_t max_entries) {
    std::size_t cap = 16;
    while (cap < 2 * max_entries) cap <<= 1;
    slots_.resize(cap);
    mask_ = cap - 1;
  }

  void clear() {
    ++epoch_;
    if (epoch_ == 0) {  // epoch counter wrapped; reset stamps
      for (Slot& s : slots_) s.epoch = 0;
      epoch_ = 1;
    }
  }

  /// Returns the dense id of `key`, assigning `next_id` (and incrementing it)
  /// on first sight within the current epoch.
  std::uint32_t get_or_add(std::uint64_t key, std::uint32_t& next_id) {
    std::size_t i = mix64(key) & mask_;
    for (;;) {
      Slot& s = slots_[i];
      if (s.epoch != epoch_) {
        s.key = key;
        s.id = next_id++;
        s.epoch = epoch_;
        return s.id;
      }
      if (s.key == key) return s.id;
      i = (i + 1) & mask_;
    }
  }

 private:
  struct Slot {
    std::uint64_t key = 0;
    std::uint32_t id = 0;
    std::uint32_t epoch = 0;
  };
  std::vector<Slot> slots_;
  std::size_t mask_ = 0;
  std::uint32_t epoch_ = 0;
};

}  // namespace pwclust::detail
