#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proxbound {

/// A parsed `name(key=value,...)` call. Keys keep their order of appearance.
struct SpecCall {
  std::string name;
  std::vector<std::pair<std::string, std::string>> args;

  static SpecCall parse(std::string_view text);

  std::optional<std::string> find(std::string_view key) const;
  double real(std::string_view key) const;
  double real_or(std::string_view key, double fallback) const;
  long long integer(std::string_view key) const;
  long long integer_or(std::string_view key, long long fallback) const;
  std::string text(std::string_view key) const;

  /// Throws ConfigError naming every key not in `allowed`.
  void expect_only(std::initializer_list<std::string_view> allowed) const;
};

double parse_real(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);
std::string trim(std::string_view text);

}  // namespace proxbound
