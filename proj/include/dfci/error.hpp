#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfci {

enum class ErrorKind {
  InvalidDocument,
  CyclicOrder,
  UnresolvedReference,
  CapExceeded,
  ExpansionOutOfBounds,
  ProtocolMismatch,
  InvalidFirstAction,
  BrokenChain,
  NoCustodySpan,
  ConfigOutOfBounds,
  Parse,
  Format,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDocument: return "InvalidDocument";
    case ErrorKind::CyclicOrder: return "CyclicOrder";
    case ErrorKind::UnresolvedReference: return "UnresolvedReference";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::ExpansionOutOfBounds: return "ExpansionOutOfBounds";
    case ErrorKind::ProtocolMismatch: return "ProtocolMismatch";
    case ErrorKind::InvalidFirstAction: return "InvalidFirstAction";
    case ErrorKind::BrokenChain: return "BrokenChain";
    case ErrorKind::NoCustodySpan: return "NoCustodySpan";
    case ErrorKind::ConfigOutOfBounds: return "ConfigOutOfBounds";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Format: return "FormatError";
  }
  return "Unknown";
}

// Base exception for every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dfci
