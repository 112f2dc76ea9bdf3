// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fixv2w {

// Broad failure class; the CLI maps each one to an exit code.
enum class ErrorClass { Config, Data, Numeric, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string kind, const std::string& message)
      : std::runtime_error(message), class_(cls), kind_(std::move(kind)) {}

  ErrorClass error_class() const noexcept { return class_; }
  // Short machine-readable tag, e.g. "parse_error".
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorClass class_;
  std::string kind_;
};

#define FIXV2W_DEFINE_ERROR(Name, Class, Tag)                      \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& message)                      \
        : Error(ErrorClass::Class, Tag, message) {}                \
  };

FIXV2W_DEFINE_ERROR(ConfigError, Config, "config_error")
FIXV2W_DEFINE_ERROR(ValidationError, Data, "validation_error")
FIXV2W_DEFINE_ERROR(UnknownEntityError, Data, "unknown_entity")
FIXV2W_DEFINE_ERROR(KindError, Data, "kind_error")
FIXV2W_DEFINE_ERROR(FrozenGraphError, Internal, "frozen_graph")
FIXV2W_DEFINE_ERROR(DateRangeError, Data, "date_out_of_range")
FIXV2W_DEFINE_ERROR(FormatError, Data, "format_error")
FIXV2W_DEFINE_ERROR(VersionMismatchError, Data, "version_mismatch")
FIXV2W_DEFINE_ERROR(StrategyMismatchError, Data, "strategy_mismatch")
FIXV2W_DEFINE_ERROR(LeakageError, Data, "leakage")
FIXV2W_DEFINE_ERROR(UnlabeledCaseError, Data, "unlabeled_case")
FIXV2W_DEFINE_ERROR(EmptyInputError, Data, "empty_input")
FIXV2W_DEFINE_ERROR(DivergenceError, Numeric, "divergence")
FIXV2W_DEFINE_ERROR(InternalError, Internal, "internal")
FIXV2W_DEFINE_ERROR(NetworkError, Data, "network_error")

#undef FIXV2W_DEFINE_ERROR

// Malformed input document. `offset` is the byte position of the failure
// when the underlying parser reports one.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(ErrorClass::Data, "parse_error",
              message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit ParseError(const std::string& message)
      : Error(ErrorClass::Data, "parse_error", message), offset_(0) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace fixv2w
