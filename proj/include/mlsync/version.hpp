#pragma once

namespace mlsync {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mlsync
