#pragma once

#include <stdexcept>
#include <string>

namespace delegrid {

enum class Errc {
  unreachable_after_retries,
  insufficient_open_cells,
  non_monotone_time,
  time_paradox,
  empty_activations,
  empty_candidates,
  empty_group,
  parse_error,
  invariant_violation,
  kind_mismatch,
  io_error,
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::unreachable_after_retries: return "UNREACHABLE_AFTER_RETRIES";
    case Errc::insufficient_open_cells: return "INSUFFICIENT_OPEN_CELLS";
    case Errc::non_monotone_time: return "NON_MONOTONE_TIME";
    case Errc::time_paradox: return "TIME_PARADOX";
    case Errc::empty_activations: return "EMPTY_ACTIVATIONS";
    case Errc::empty_candidates: return "EMPTY_CANDIDATES";
    case Errc::empty_group: return "EMPTY_GROUP";
    case Errc::parse_error: return "PARSE_ERROR";
    case Errc::invariant_violation: return "INVARIANT_VIOLATION";
    case Errc::kind_mismatch: return "KIND_MISMATCH";
    case Errc::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace delegrid
