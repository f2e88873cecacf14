#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sfbc::detail {

inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash = 0xCBF29CE484222325ull) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < size; ++k) {
        hash ^= bytes[k];
        hash *= 0x100000001B3ull;
    }
    return hash;
}

inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

inline std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t out = 0;
        for (int k = 0; k < 8; ++k) out |= ((v >> (8 * k)) & 0xFF) << (8 * (7 - k));
        return out;
    }
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    const std::uint64_t le = to_little(v);
    os.write(reinterpret_cast<const char*>(&le), 8);
}

inline bool read_u64(std::istream& is, std::uint64_t& v) {
    std::uint64_t le = 0;
    if (!is.read(reinterpret_cast<char*>(&le), 8)) return false;
    v = to_little(le);
    return true;
}

/// Doubles encoded as little-endian IEEE-754 bytes.
inline std::vector<unsigned char> encode_doubles(std::span<const double> values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t k = 0; k < values.size(); ++k) {
        const std::uint64_t le = to_little(std::bit_cast<std::uint64_t>(values[k]));
        std::memcpy(bytes.data() + 8 * k, &le, 8);
    }
    return bytes;
}

inline void decode_doubles(std::span<const unsigned char> bytes, std::span<double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint64_t le = 0;
        std::memcpy(&le, bytes.data() + 8 * k, 8);
        values[k] = std::bit_cast<double>(to_little(le));
    }
}

}  // namespace sfbc::detail
