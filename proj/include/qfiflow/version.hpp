#pragma once

namespace qfiflow {

inline constexpr const char* version = "0.1.0";

}
