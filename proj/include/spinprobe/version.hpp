// version.hpp: library version string recorded in run manifests

#pragma once

namespace spinprobe {

inline constexpr const char* kVersion = "0.1.0";

} // namespace spinprobe
