#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace cabfare {

// US dollar amount held as integer cents.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }
  // Rounds half away from zero to the cent.
  static Money from_dollars(double usd) { return Money(std::llround(usd * 100.0)); }

  constexpr std::int64_t cents() const noexcept { return cents_; }
  constexpr double dollars() const noexcept { return static_cast<double>(cents_) / 100.0; }

  constexpr Money operator+(Money o) const noexcept { return Money(cents_ + o.cents_); }
  constexpr Money operator-(Money o) const noexcept { return Money(cents_ - o.cents_); }
  constexpr Money operator-() const noexcept { return Money(-cents_); }
  friend constexpr auto operator<=>(Money, Money) = default;

  // "12.50", "-3.07"
  std::string str() const;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

inline std::string Money::str() const {
  const std::int64_t a = cents_ < 0 ? -cents_ : cents_;
  std::string frac = std::to_string(a % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (cents_ < 0 ? "-" : "") + std::to_string(a / 100) + "." + frac;
}

}  // namespace cabfare
