#include "vdsa/error.hpp"

namespace vdsa {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::parse: return "parse";
    case Errc::empty_input: return "empty-input";
    case Errc::gap_too_large: return "gap-too-large";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::coverage: return "coverage";
    case Errc::unknown_channel: return "unknown-channel";
    case Errc::schema_version: return "schema-version";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::config: return "config";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace vdsa
