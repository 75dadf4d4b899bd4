#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ffrt {

enum class ErrorKind {
  dimension,
  numeric,
  parameter,
  parse,
  config,
  empty_region,
  undefined_metric,
  bad_magic,
  unsupported_version,
  bad_checksum,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::parse: return "parse";
    case ErrorKind::config: return "config";
    case ErrorKind::empty_region: return "empty_region";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::unsupported_version: return "unsupported_version";
    case ErrorKind::bad_checksum: return "bad_checksum";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << args);
  return oss.str();
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(ErrorKind kind, Args&&... args) {
  throw Error(kind, detail::concat(std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool cond, ErrorKind kind, Args&&... args) {
  if (!cond) fail(kind, std::forward<Args>(args)...);
}

}  // namespace ffrt
