#pragma once

#include <stdexcept>
#include <string>

namespace lf {

enum class Errc {
  invalid_input,
  not_found,
  invalid_split,
  invalid_transform,
  invalid_spec,
  invalid_laminate,
  contract_violation,
  unsupported,
  parse_error,
  internal
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

}  // namespace lf
