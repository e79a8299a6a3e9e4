#pragma once

namespace ldi {

inline constexpr const char* LDISIM_VERSION = "0.1.0";

} // namespace ldi
