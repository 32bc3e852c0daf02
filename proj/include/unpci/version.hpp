#pragma once

namespace unpci {

inline constexpr const char* kVersion = "0.1.0";

}
