#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace contribchain {

/// 256-bit identifier for nodes and accounts, totally ordered by numeric
/// value. Canonical text form is 64 lowercase hex characters.
struct Address {
    // limbs[0] holds the most significant 64 bits, so lexicographic
    // comparison of the array equals numeric comparison.
    std::array<std::uint64_t, 4> limbs{};

    constexpr Address() = default;

    static constexpr Address from_u64(std::uint64_t v) {
        Address a;
        a.limbs[3] = v;
        return a;
    }

    static Address from_bytes(const std::array<unsigned char, 32>& b) {
        Address a;
        for (int i = 0; i < 4; ++i) {
            std::uint64_t limb = 0;
            for (int j = 0; j < 8; ++j)
                limb = (limb << 8) | b[static_cast<std::size_t>(i * 8 + j)];
            a.limbs[static_cast<std::size_t>(i)] = limb;
        }
        return a;
    }

    /// Accepts an optional 0x prefix and up to 64 hex digits; shorter
    /// strings are zero-padded on the left.
    static Address parse_hex(std::string_view text) {
        if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
            text.remove_prefix(2);
        if (text.empty() || text.size() > 64)
            throw std::invalid_argument("address hex must have 1..64 digits");
        Address a;
        for (char c : text) {
            int digit;
            if (c >= '0' && c <= '9')
                digit = c - '0';
            else if (c >= 'a' && c <= 'f')
                digit = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F')
                digit = c - 'A' + 10;
            else
                throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
            // shift the whole 256-bit value left by one nibble
            for (int i = 0; i < 3; ++i)
                a.limbs[static_cast<std::size_t>(i)] =
                    (a.limbs[static_cast<std::size_t>(i)] << 4) | (a.limbs[static_cast<std::size_t>(i + 1)] >> 60);
            a.limbs[3] = (a.limbs[3] << 4) | static_cast<std::uint64_t>(digit);
        }
        return a;
    }

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(64, '0');
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 16; ++j)
                out[static_cast<std::size_t>(i * 16 + j)] =
                    digits[(limbs[static_cast<std::size_t>(i)] >> (60 - 4 * j)) & 0xf];
        return out;
    }

    std::array<unsigned char, 32> bytes() const {
        std::array<unsigned char, 32> out{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 8; ++j)
                out[static_cast<std::size_t>(i * 8 + j)] =
                    static_cast<unsigned char>(limbs[static_cast<std::size_t>(i)] >> (56 - 8 * j));
        return out;
    }

    /// Index of this address among `parts` equal slices of [0, 2^256),
    /// i.e. floor(value * parts / 2^256). Used for interval-based shard
    /// assignment and prefix-hash account placement.
    std::uint32_t interval_index(std::uint32_t parts) const {
        if (parts == 0)
            throw std::invalid_argument("interval_index: parts must be positive");
        unsigned __int128 carry = 0;
        for (int i = 3; i >= 0; --i) {
            unsigned __int128 cur =
                static_cast<unsigned __int128>(limbs[static_cast<std::size_t>(i)]) * parts + carry;
            carry = cur >> 64;
        }
        return static_cast<std::uint32_t>(carry);
    }

    auto operator<=>(const Address&) const = default;
};

} // namespace contribchain

template <>
struct std::hash<contribchain::Address> {
    std::size_t operator()(const contribchain::Address& a) const noexcept {
        // limbs are already well mixed for the random identities this
        // codebase produces; fold them together
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (auto limb : a.limbs)
            h = (h ^ limb) * 0xbf58476d1ce4e5b9ULL;
        return static_cast<std::size_t>(h);
    }
};
