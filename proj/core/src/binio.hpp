#pragma once

// Internal little-endian binary file helpers. The build targets are all
// little endian; refuse to compile elsewhere rather than silently swapping.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace irx {

static_assert(std::endian::native == std::endian::little,
              "file formats are little endian");

inline void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

inline std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

inline double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

} // namespace irx
