#pragma once

#include <cstdint>

namespace mumimo {

// Complex operation tally. An addition costs one flop and a multiplication
// three; divisions and square roots are booked as multiplications.
struct FlopCount {
  std::uint64_t adds = 0;
  std::uint64_t mults = 0;

  [[nodiscard]] constexpr std::uint64_t weighted() const noexcept {
    return adds + 3 * mults;
  }

  constexpr FlopCount& operator+=(const FlopCount& other) noexcept {
    adds += other.adds;
    mults += other.mults;
    return *this;
  }

  friend constexpr FlopCount operator+(FlopCount a, const FlopCount& b) noexcept {
    return a += b;
  }

  friend constexpr bool operator==(const FlopCount&, const FlopCount&) = default;
};

namespace detail {

// Kernels take an optional counter; a null pointer disables accounting.
inline void tally(FlopCount* flops, std::uint64_t adds, std::uint64_t mults) noexcept {
  if (flops != nullptr) {
    flops->adds += adds;
    flops->mults += mults;
  }
}

}  // namespace detail
}  // namespace mumimo
