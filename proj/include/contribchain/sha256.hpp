#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace contribchain {

struct Digest {
    std::array<unsigned char, 32> bytes{};

    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(64, '0');
        for (std::size_t i = 0; i < 32; ++i) {
            out[2 * i] = digits[bytes[i] >> 4];
            out[2 * i + 1] = digits[bytes[i] & 0xf];
        }
        return out;
    }

    static Digest parse_hex(std::string_view hex) {
        if (hex.size() != 64)
            throw std::invalid_argument("digest hex must have 64 chars");
        auto nibble = [](char c) -> unsigned {
            if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
            throw std::invalid_argument("invalid hex digit in digest");
        };
        Digest d;
        for (std::size_t i = 0; i < 32; ++i)
            d.bytes[i] = static_cast<unsigned char>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
        return d;
    }

    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0)
                return false;
        return true;
    }

    auto operator<=>(const Digest&) const = default;
};

/// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
public:
    Sha256() { reset(); }

    void reset() {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        buffered_ = 0;
        total_ = 0;
    }

    void update(std::span<const unsigned char> data) {
        total_ += data.size();
        while (!data.empty()) {
            const std::size_t take = std::min(data.size(), buffer_.size() - buffered_);
            std::memcpy(buffer_.data() + buffered_, data.data(), take);
            buffered_ += take;
            data = data.subspan(take);
            if (buffered_ == buffer_.size()) {
                compress(buffer_.data());
                buffered_ = 0;
            }
        }
    }

    void update(std::string_view text) {
        update(std::span<const unsigned char>(
            reinterpret_cast<const unsigned char*>(text.data()), text.size()));
    }

    Digest finish() {
        const std::uint64_t bit_length = total_ * 8;
        const unsigned char pad = 0x80;
        update(std::span<const unsigned char>(&pad, 1));
        const unsigned char zero = 0;
        while (buffered_ != 56)
            update(std::span<const unsigned char>(&zero, 1));
        std::array<unsigned char, 8> length_be;
        for (int i = 0; i < 8; ++i)
            length_be[static_cast<std::size_t>(i)] =
                static_cast<unsigned char>(bit_length >> (56 - 8 * i));
        update(std::span<const unsigned char>(length_be.data(), 8));
        Digest out;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                out.bytes[4 * i + j] = static_cast<unsigned char>(state_[i] >> (24 - 8 * j));
        reset();
        return out;
    }

private:
    static constexpr std::array<std::uint32_t, 64> k_ = {
        0x428a2f98u, 0x71374491u, 0xb5c0fbcfu, 0xe9b5dba5u, 0x3956c25bu, 0x59f111f1u,
        0x923f82a4u, 0xab1c5ed5u, 0xd807aa98u, 0x12835b01u, 0x243185beu, 0x550c7dc3u,
        0x72be5d74u, 0x80deb1feu, 0x9bdc06a7u, 0xc19bf174u, 0xe49b69c1u, 0xefbe4786u,
        0x0fc19dc6u, 0x240ca1ccu, 0x2de92c6fu, 0x4a7484aau, 0x5cb0a9dcu, 0x76f988dau,
        0x983e5152u, 0xa831c66du, 0xb00327c8u, 0xbf597fc7u, 0xc6e00bf3u, 0xd5a79147u,
        0x06ca6351u, 0x14292967u, 0x27b70a85u, 0x2e1b2138u, 0x4d2c6dfcu, 0x53380d13u,
        0x650a7354u, 0x766a0abbu, 0x81c2c92eu, 0x92722c85u, 0xa2bfe8a1u, 0xa81a664bu,
        0xc24b8b70u, 0xc76c51a3u, 0xd192e819u, 0xd6990624u, 0xf40e3585u, 0x106aa070u,
        0x19a4c116u, 0x1e376c08u, 0x2748774cu, 0x34b0bcb5u, 0x391c0cb3u, 0x4ed8aa4au,
        0x5b9cca4fu, 0x682e6ff3u, 0x748f82eeu, 0x78a5636fu, 0x84c87814u, 0x8cc70208u,
        0x90befffau, 0xa4506cebu, 0xbef9a3f7u, 0xc67178f2u};

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void compress(const unsigned char* block) {
        std::array<std::uint32_t, 64> w;
        for (std::size_t i = 0; i < 16; ++i)
            w[i] = (static_cast<std::uint32_t>(block[4 * i]) << 24) |
                   (static_cast<std::uint32_t>(block[4 * i + 1]) << 16) |
                   (static_cast<std::uint32_t>(block[4 * i + 2]) << 8) |
                   static_cast<std::uint32_t>(block[4 * i + 3]);
        for (std::size_t i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, h] = state_;
        for (std::size_t i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t temp1 = h + s1 + ch + k_[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t temp2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        state_[0] += a;
        state_[1] += b;
        state_[2] += c;
        state_[3] += d;
        state_[4] += e;
        state_[5] += f;
        state_[6] += g;
        state_[7] += h;
    }

    std::array<std::uint32_t, 8> state_;
    std::array<unsigned char, 64> buffer_;
    std::size_t buffered_ = 0;
    std::uint64_t total_ = 0;
};

inline Digest sha256(std::span<const unsigned char> data) {
    Sha256 h;
    h.update(data);
    return h.finish();
}

inline Digest sha256(std::string_view text) {
    Sha256 h;
    h.update(text);
    return h.finish();
}

using Bytes = std::vector<unsigned char>;

/// Append-only canonical encoder. All multi-byte integers are
/// little-endian; see docs/FORMATS.md for the full layout rules.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u16(std::uint16_t v) {
        out_.push_back(static_cast<unsigned char>(v));
        out_.push_back(static_cast<unsigned char>(v >> 8));
    }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }

    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }

    void raw(std::span<const unsigned char> data) { out_.insert(out_.end(), data.begin(), data.end()); }

    /// Length-prefixed byte string.
    void blob(std::span<const unsigned char> data) {
        u32(static_cast<std::uint32_t>(data.size()));
        raw(data);
    }

    void digest(const Digest& d) { raw(std::span<const unsigned char>(d.bytes.data(), 32)); }

    const Bytes& bytes() const { return out_; }

    Digest hash() const { return sha256(std::span<const unsigned char>(out_.data(), out_.size())); }

private:
    Bytes out_;
};

} // namespace contribchain
