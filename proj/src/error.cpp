#include "lf/error.hpp"

namespace lf {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::not_found: return "not-found";
    case Errc::invalid_split: return "invalid-split";
    case Errc::invalid_transform: return "invalid-transform";
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::invalid_laminate: return "invalid-laminate";
    case Errc::contract_violation: return "contract-violation";
    case Errc::unsupported: return "unsupported";
    case Errc::parse_error: return "parse-error";
    case Errc::internal: return "internal-error";
  }
  return "unknown";
}

}  // namespace lf
