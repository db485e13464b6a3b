#ifndef HITLIST_ADDR_HPP
#define HITLIST_ADDR_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hitlist {

using uint128 = unsigned __int128;

inline constexpr uint128 make_u128(std::uint64_t hi, std::uint64_t lo) {
    return (static_cast<uint128>(hi) << 64) | lo;
}

/// A 128-bit IPv6 address as a plain unsigned value. Bit 0 is the most
/// significant bit, so unsigned ordering equals address ordering.
class Addr128 {
public:
    constexpr Addr128() = default;
    explicit constexpr Addr128(uint128 value) : value_(value) {}

    static Addr128 from_bytes(const std::array<std::uint8_t, 16>& bytes);

    constexpr uint128 value() const { return value_; }
    constexpr std::uint64_t hi() const { return static_cast<std::uint64_t>(value_ >> 64); }
    constexpr std::uint64_t lo() const { return static_cast<std::uint64_t>(value_); }

    std::array<std::uint8_t, 16> bytes() const;

    // index 0 is the most significant byte / hextet / nibble
    constexpr std::uint8_t byte(int index) const {
        return static_cast<std::uint8_t>(value_ >> (8 * (15 - index)));
    }
    constexpr std::uint16_t hextet(int index) const {
        return static_cast<std::uint16_t>(value_ >> (16 * (7 - index)));
    }
    constexpr std::uint8_t nibble(int index) const {
        return static_cast<std::uint8_t>(value_ >> (4 * (31 - index))) & 0xf;
    }

    friend constexpr bool operator==(Addr128 a, Addr128 b) { return a.value_ == b.value_; }
    friend constexpr bool operator!=(Addr128 a, Addr128 b) { return a.value_ != b.value_; }
    friend constexpr bool operator<(Addr128 a, Addr128 b) { return a.value_ < b.value_; }
    friend constexpr bool operator<=(Addr128 a, Addr128 b) { return a.value_ <= b.value_; }
    friend constexpr bool operator>(Addr128 a, Addr128 b) { return a.value_ > b.value_; }
    friend constexpr bool operator>=(Addr128 a, Addr128 b) { return a.value_ >= b.value_; }

private:
    uint128 value_ = 0;
};

/// Parses RFC 4291 textual forms: full, "::"-compressed and embedded IPv4.
/// Throws std::invalid_argument naming the offending token.
Addr128 parse_addr(std::string_view text);

/// RFC 5952 canonical form: lowercase, longest zero run compressed.
std::string format_addr(Addr128 a);

/// |a - b| as an unsigned 128-bit magnitude.
constexpr uint128 addr_distance(Addr128 a, Addr128 b) {
    return a.value() >= b.value() ? a.value() - b.value() : b.value() - a.value();
}

/// CIDR prefix in canonical form: all host bits of the base are zero.
/// Construction rejects non-canonical bases instead of masking them.
class Prefix {
public:
    constexpr Prefix() = default;
    Prefix(Addr128 base, int length);  // throws std::invalid_argument

    static Prefix parse(std::string_view text);

    constexpr Addr128 base() const { return base_; }
    constexpr int length() const { return length_; }

    static constexpr uint128 mask_bits(int length) {
        if (length == 0) return 0;
        return ~uint128{0} << (128 - length);
    }
    constexpr uint128 mask() const { return mask_bits(length_); }
    constexpr bool contains(Addr128 a) const {
        return (a.value() & mask()) == base_.value();
    }
    /// true when `other` lies inside this prefix (equal prefixes included)
    constexpr bool contains(const Prefix& other) const {
        return other.length_ >= length_ && contains(other.base_);
    }
    /// highest address of the prefix
    constexpr Addr128 last() const { return Addr128(base_.value() | ~mask()); }

    std::string to_string() const;

    friend constexpr bool operator==(const Prefix& a, const Prefix& b) {
        return a.length_ == b.length_ && a.base_ == b.base_;
    }
    friend constexpr bool operator<(const Prefix& a, const Prefix& b) {
        if (a.base_ != b.base_) return a.base_ < b.base_;
        return a.length_ < b.length_;
    }

private:
    Addr128 base_{};
    int length_ = 0;
};

enum class Protocol : std::uint8_t { icmp = 0, tcp80, tcp443, udp53, udp443 };

inline constexpr std::array<Protocol, 5> kAllProtocols{
    Protocol::icmp, Protocol::tcp80, Protocol::tcp443, Protocol::udp53, Protocol::udp443};

std::string_view protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(std::string_view name);

/// Small fixed-universe set over the five probed protocols.
class ProtocolSet {
public:
    constexpr ProtocolSet() = default;
    constexpr ProtocolSet(std::initializer_list<Protocol> ps) {
        for (Protocol p : ps) insert(p);
    }

    constexpr void insert(Protocol p) { bits_ |= bit(p); }
    constexpr bool contains(Protocol p) const { return bits_ & bit(p); }
    constexpr bool empty() const { return bits_ == 0; }

    static ProtocolSet parse(std::string_view csv);  // "icmp,tcp80"
    std::string to_string() const;

    friend constexpr bool operator==(ProtocolSet a, ProtocolSet b) { return a.bits_ == b.bits_; }

private:
    static constexpr std::uint8_t bit(Protocol p) {
        return static_cast<std::uint8_t>(1u << static_cast<std::uint8_t>(p));
    }
    std::uint8_t bits_ = 0;
};

struct MacAddr {
    std::array<std::uint8_t, 6> octets{};

    static MacAddr parse(std::string_view text);  // "00:11:22:33:44:55"
    std::string to_string() const;
    /// first three octets as an uppercase hex string, e.g. "001122"
    std::string oui_hex() const;

    friend bool operator==(const MacAddr& a, const MacAddr& b) { return a.octets == b.octets; }
    friend bool operator<(const MacAddr& a, const MacAddr& b) { return a.octets < b.octets; }
};

/// MAC recovery from an EUI-64 interface identifier: requires the ff:fe
/// marker at IID bytes 4-5 and flips the universal/local bit back.
std::optional<MacAddr> eui64_extract(Addr128 a);

/// EUI-64 address construction (inverse of eui64_extract) inside a /64.
Addr128 eui64_address(const Prefix& prefix64, const MacAddr& mac);

struct TeredoInfo {
    std::uint32_t client_v4 = 0;
    std::uint16_t client_port = 0;
    std::uint32_t server_v4 = 0;

    friend bool operator==(const TeredoInfo& a, const TeredoInfo& b) {
        return a.client_v4 == b.client_v4 && a.client_port == b.client_port &&
               a.server_v4 == b.server_v4;
    }
};

inline const Prefix& teredo_prefix() {
    static const Prefix p(Addr128(make_u128(0x2001'0000'0000'0000ULL, 0)), 32);
    return p;
}

/// RFC 4380 decoding for addresses in 2001:0::/32; empty elsewhere.
std::optional<TeredoInfo> teredo_decode(Addr128 a);

std::string format_ipv4(std::uint32_t v4);

}  // namespace hitlist

template <>
struct std::hash<hitlist::Addr128> {
    std::size_t operator()(hitlist::Addr128 a) const noexcept {
        std::uint64_t h = a.hi() * 0x9e3779b97f4a7c15ULL;
        h ^= a.lo() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

#endif  // HITLIST_ADDR_HPP
