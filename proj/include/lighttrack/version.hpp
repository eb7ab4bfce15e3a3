#ifndef LIGHTTRACK_VERSION_HPP
#define LIGHTTRACK_VERSION_HPP

namespace lighttrack {

inline constexpr const char* kToolName = "lighttrack";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace lighttrack

#endif  // LIGHTTRACK_VERSION_HPP
