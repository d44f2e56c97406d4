#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace scg {

/**
 * Exception carrying a stable machine-readable code alongside the human
 * message. Codes used across the library:
 *
 *   AllDegenerate, NonFinite, ValidationError  — distribution / input checks
 *   GridOverflow                               — convolution hull too wide
 *   PathLimit, BadLoad                         — network
 *   SupportExplosion, TensorCap, PlayersCap    — mixed-strategy caps
 *   EnumerationCap, EmptyEquilibria            — pure enumeration / PoA
 *   NoBracket                                  — non-atomic solver
 *   ParseError                                 — scenario config
 *
 * CLI layers print the code verbatim so callers can dispatch on it.
 */
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error("[" + code + "] " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace scg
