#include "spiralis/errors.hpp"

namespace spiralis {

const char* kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::unsupported_input: return "unsupported_input";
    case ErrorKind::pathological_exponent: return "pathological_exponent";
    case ErrorKind::guard_violation: return "guard_violation";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::stagnation: return "stagnation";
    case ErrorKind::range: return "range";
    case ErrorKind::missing: return "missing";
    }
    return "unknown";
}

} // namespace spiralis
