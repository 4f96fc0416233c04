#pragma once

#include <chrono>
#include <cstdint>

namespace kidvoice {

inline std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace kidvoice
