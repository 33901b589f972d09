#pragma once

namespace srl {

inline constexpr const char* kVersion = "srl-lab 1.0.0";

}  // namespace srl
