#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace affaudit::detail {

template <typename E, std::size_t N>
constexpr std::string_view enum_name(E value, const std::array<std::string_view, N>& names) {
  const auto i = static_cast<std::size_t>(value);
  return i < N ? names[i] : std::string_view{"?"};
}

template <typename E, std::size_t N>
constexpr std::optional<E> enum_parse(std::string_view text,
                                      const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace affaudit::detail
