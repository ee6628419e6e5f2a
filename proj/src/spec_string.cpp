#include "proxbound/spec_string.hpp"

#include "proxbound/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace proxbound {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double parse_real(std::string_view text, std::string_view what) {
  std::string s = trim(text);
  double v = 0.0;
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  const char* begin = s.data();
  const char* end = begin + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(std::string(what) + ": '" + s + "' is not a real number");
  }
  return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
  std::string s = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(what) + ": '" + s + "' is not an integer");
  }
  return v;
}

SpecCall SpecCall::parse(std::string_view text) {
  std::string s = trim(text);
  SpecCall call;
  auto open = s.find('(');
  if (open == std::string::npos) {
    call.name = s;
  } else {
    if (s.back() != ')') throw ConfigError("spec '" + s + "': missing closing parenthesis");
    call.name = trim(std::string_view(s).substr(0, open));
    std::string_view body = std::string_view(s).substr(open + 1, s.size() - open - 2);
    while (!trim(body).empty()) {
      auto comma = body.find(',');
      std::string_view item = body.substr(0, comma);
      auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("spec '" + s + "': argument '" + trim(item) + "' is not key=value");
      }
      std::string key = trim(item.substr(0, eq));
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (call.find(key)) throw ConfigError("spec '" + s + "': duplicate key '" + key + "'");
      call.args.emplace_back(key, trim(item.substr(eq + 1)));
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
  }
  std::transform(call.name.begin(), call.name.end(), call.name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (call.name.empty()) throw ConfigError("spec '" + s + "': empty kind name");
  return call;
}

std::optional<std::string> SpecCall::find(std::string_view key) const {
  for (const auto& [k, v] : args) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double SpecCall::real(std::string_view key) const {
  auto v = find(key);
  if (!v) throw ConfigError(name + ": missing parameter '" + std::string(key) + "'");
  return parse_real(*v, name + "." + std::string(key));
}

double SpecCall::real_or(std::string_view key, double fallback) const {
  return find(key) ? real(key) : fallback;
}

long long SpecCall::integer(std::string_view key) const {
  auto v = find(key);
  if (!v) throw ConfigError(name + ": missing parameter '" + std::string(key) + "'");
  return parse_integer(*v, name + "." + std::string(key));
}

long long SpecCall::integer_or(std::string_view key, long long fallback) const {
  return find(key) ? integer(key) : fallback;
}

std::string SpecCall::text(std::string_view key) const {
  auto v = find(key);
  if (!v) throw ConfigError(name + ": missing parameter '" + std::string(key) + "'");
  return *v;
}

void SpecCall::expect_only(std::initializer_list<std::string_view> allowed) const {
  std::string unknown;
  for (const auto& [k, v] : args) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      unknown += (unknown.empty() ? "" : ", ") + k;
    }
  }
  if (!unknown.empty()) throw ConfigError(name + ": unknown parameter(s) " + unknown);
}

}  // namespace proxbound
