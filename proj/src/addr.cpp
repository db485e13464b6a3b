#include "hitlist/addr.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace hitlist {

namespace {

[[noreturn]] void parse_fail(std::string_view what, std::string_view token) {
    throw std::invalid_argument("address parse error: " + std::string(what) + " '" +
                                std::string(token) + "'");
}

bool parse_hextet(std::string_view token, std::uint16_t& out) {
    if (token.empty() || token.size() > 4) return false;
    std::uint32_t v = 0;
    for (char c : token) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return false;
        v = v * 16 + static_cast<std::uint32_t>(d);
    }
    out = static_cast<std::uint16_t>(v);
    return true;
}

bool parse_v4_quad(std::string_view token, std::uint32_t& out) {
    std::uint32_t parts[4];
    std::size_t idx = 0, pos = 0;
    while (idx < 4) {
        std::size_t dot = token.find('.', pos);
        std::string_view part = (dot == std::string_view::npos)
                                    ? token.substr(pos)
                                    : token.substr(pos, dot - pos);
        if (part.empty() || part.size() > 3) return false;
        std::uint32_t v = 0;
        for (char c : part) {
            if (c < '0' || c > '9') return false;
            v = v * 10 + static_cast<std::uint32_t>(c - '0');
        }
        if (v > 255) return false;
        parts[idx++] = v;
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    if (idx != 4) return false;
    if (token.find('.', pos) != std::string_view::npos) return false;
    out = (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
    return true;
}

// splits "a:b:c" on ':'; an empty piece means two adjacent colons
std::vector<std::string_view> split_colons(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t colon = s.find(':', pos);
        if (colon == std::string_view::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, colon - pos));
        pos = colon + 1;
    }
}

// parses one side of a "::" split into hextets; a dotted quad may only
// appear as the final token and contributes two hextets
void parse_groups(std::string_view part, std::string_view whole,
                  std::vector<std::uint16_t>& out) {
    if (part.empty()) return;
    auto tokens = split_colons(part);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::string_view tok = tokens[i];
        if (tok.find('.') != std::string_view::npos) {
            if (i + 1 != tokens.size()) parse_fail("embedded IPv4 must be last in", whole);
            std::uint32_t v4;
            if (!parse_v4_quad(tok, v4)) parse_fail("bad embedded IPv4", tok);
            out.push_back(static_cast<std::uint16_t>(v4 >> 16));
            out.push_back(static_cast<std::uint16_t>(v4));
            return;
        }
        std::uint16_t h;
        if (!parse_hextet(tok, h)) parse_fail("bad group", tok.empty() ? whole : tok);
        out.push_back(h);
    }
}

}  // namespace

Addr128 Addr128::from_bytes(const std::array<std::uint8_t, 16>& bytes) {
    uint128 v = 0;
    for (std::uint8_t b : bytes) v = (v << 8) | b;
    return Addr128(v);
}

std::array<std::uint8_t, 16> Addr128::bytes() const {
    std::array<std::uint8_t, 16> out{};
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(i)] = byte(i);
    return out;
}

Addr128 parse_addr(std::string_view text) {
    if (text.empty()) parse_fail("empty address", text);
    if (text.find('%') != std::string_view::npos) parse_fail("scope identifier in", text);

    std::size_t dc = text.find("::");
    std::vector<std::uint16_t> head, tail;
    if (dc != std::string_view::npos) {
        if (text.find("::", dc + 1) != std::string_view::npos)
            parse_fail("multiple '::' in", text);
        parse_groups(text.substr(0, dc), text, head);
        parse_groups(text.substr(dc + 2), text, tail);
        if (head.size() + tail.size() > 7) parse_fail("too many groups in", text);
    } else {
        parse_groups(text, text, head);
        if (head.size() != 8) parse_fail("wrong group count in", text);
    }

    std::array<std::uint16_t, 8> groups{};
    for (std::size_t i = 0; i < head.size(); ++i) groups[i] = head[i];
    for (std::size_t i = 0; i < tail.size(); ++i)
        groups[8 - tail.size() + i] = tail[i];

    uint128 v = 0;
    for (std::uint16_t g : groups) v = (v << 16) | g;
    return Addr128(v);
}

std::string format_addr(Addr128 a) {
    std::array<std::uint16_t, 8> g{};
    for (int i = 0; i < 8; ++i) g[static_cast<std::size_t>(i)] = a.hextet(i);

    // longest run of zero hextets, length >= 2, leftmost wins ties
    int best_start = -1, best_len = 0;
    for (int i = 0; i < 8;) {
        if (g[static_cast<std::size_t>(i)] != 0) { ++i; continue; }
        int j = i;
        while (j < 8 && g[static_cast<std::size_t>(j)] == 0) ++j;
        if (j - i > best_len) { best_start = i; best_len = j - i; }
        i = j;
    }
    if (best_len < 2) best_start = -1;

    char buf[8];
    std::string out;
    for (int i = 0; i < 8;) {
        if (i == best_start) {
            out += "::";
            i += best_len;
            continue;
        }
        std::snprintf(buf, sizeof buf, "%x", g[static_cast<std::size_t>(i)]);
        out += buf;
        ++i;
        if (i < 8 && i != best_start) out += ':';
    }
    return out;
}

Prefix::Prefix(Addr128 base, int length) : base_(base), length_(length) {
    if (length < 0 || length > 128)
        throw std::invalid_argument("prefix length out of range: " + std::to_string(length));
    if ((base.value() & ~mask()) != 0)
        throw std::invalid_argument("non-canonical prefix (host bits set): " +
                                    format_addr(base) + "/" + std::to_string(length));
}

Prefix Prefix::parse(std::string_view text) {
    std::size_t slash = text.rfind('/');
    if (slash == std::string_view::npos)
        throw std::invalid_argument("prefix parse error: missing '/' in '" +
                                    std::string(text) + "'");
    std::string_view lenpart = text.substr(slash + 1);
    if (lenpart.empty() || lenpart.size() > 3)
        throw std::invalid_argument("prefix parse error: bad length '" + std::string(text) + "'");
    int len = 0;
    for (char c : lenpart) {
        if (c < '0' || c > '9')
            throw std::invalid_argument("prefix parse error: bad length '" +
                                        std::string(text) + "'");
        len = len * 10 + (c - '0');
    }
    if (len > 128)
        throw std::invalid_argument("prefix parse error: length out of range in '" +
                                    std::string(text) + "'");
    return Prefix(parse_addr(text.substr(0, slash)), len);
}

std::string Prefix::to_string() const {
    return format_addr(base_) + "/" + std::to_string(length_);
}

std::string_view protocol_name(Protocol p) {
    switch (p) {
        case Protocol::icmp: return "icmp";
        case Protocol::tcp80: return "tcp80";
        case Protocol::tcp443: return "tcp443";
        case Protocol::udp53: return "udp53";
        case Protocol::udp443: return "udp443";
    }
    return "?";
}

std::optional<Protocol> protocol_from_name(std::string_view name) {
    for (Protocol p : kAllProtocols)
        if (protocol_name(p) == name) return p;
    return std::nullopt;
}

ProtocolSet ProtocolSet::parse(std::string_view csv) {
    ProtocolSet out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string_view tok = (comma == std::string_view::npos)
                                   ? csv.substr(pos)
                                   : csv.substr(pos, comma - pos);
        auto p = protocol_from_name(tok);
        if (!p) throw std::invalid_argument("unknown protocol '" + std::string(tok) + "'");
        out.insert(*p);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string ProtocolSet::to_string() const {
    std::string out;
    for (Protocol p : kAllProtocols) {
        if (!contains(p)) continue;
        if (!out.empty()) out += ',';
        out += protocol_name(p);
    }
    return out;
}

MacAddr MacAddr::parse(std::string_view text) {
    MacAddr mac;
    std::size_t pos = 0;
    for (int i = 0; i < 6; ++i) {
        if (i > 0) {
            if (pos >= text.size() || text[pos] != ':')
                throw std::invalid_argument("mac parse error: '" + std::string(text) + "'");
            ++pos;
        }
        std::uint16_t v;
        if (pos + 2 > text.size() || !parse_hextet(text.substr(pos, 2), v) || v > 0xff)
            throw std::invalid_argument("mac parse error: '" + std::string(text) + "'");
        mac.octets[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
        pos += 2;
    }
    if (pos != text.size())
        throw std::invalid_argument("mac parse error: '" + std::string(text) + "'");
    return mac;
}

std::string MacAddr::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1],
                  octets[2], octets[3], octets[4], octets[5]);
    return buf;
}

std::string MacAddr::oui_hex() const {
    char buf[7];
    std::snprintf(buf, sizeof buf, "%02X%02X%02X", octets[0], octets[1], octets[2]);
    return buf;
}

std::optional<MacAddr> eui64_extract(Addr128 a) {
    if (a.byte(11) != 0xff || a.byte(12) != 0xfe) return std::nullopt;
    MacAddr mac;
    mac.octets[0] = static_cast<std::uint8_t>(a.byte(8) ^ 0x02);  // universal/local bit
    mac.octets[1] = a.byte(9);
    mac.octets[2] = a.byte(10);
    mac.octets[3] = a.byte(13);
    mac.octets[4] = a.byte(14);
    mac.octets[5] = a.byte(15);
    return mac;
}

Addr128 eui64_address(const Prefix& prefix64, const MacAddr& mac) {
    if (prefix64.length() != 64)
        throw std::invalid_argument("EUI-64 address requires a /64, got " + prefix64.to_string());
    std::uint64_t iid = 0;
    iid |= static_cast<std::uint64_t>(mac.octets[0] ^ 0x02) << 56;
    iid |= static_cast<std::uint64_t>(mac.octets[1]) << 48;
    iid |= static_cast<std::uint64_t>(mac.octets[2]) << 40;
    iid |= static_cast<std::uint64_t>(0xff) << 32;
    iid |= static_cast<std::uint64_t>(0xfe) << 24;
    iid |= static_cast<std::uint64_t>(mac.octets[3]) << 16;
    iid |= static_cast<std::uint64_t>(mac.octets[4]) << 8;
    iid |= static_cast<std::uint64_t>(mac.octets[5]);
    return Addr128(prefix64.base().value() | iid);
}

std::optional<TeredoInfo> teredo_decode(Addr128 a) {
    if (!teredo_prefix().contains(a)) return std::nullopt;
    TeredoInfo info;
    info.server_v4 = static_cast<std::uint32_t>(a.value() >> 64);
    info.client_port = static_cast<std::uint16_t>(static_cast<std::uint16_t>(a.value() >> 32) ^ 0xffff);
    info.client_v4 = static_cast<std::uint32_t>(a.value()) ^ 0xffffffffu;
    return info;
}

std::string format_ipv4(std::uint32_t v4) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", v4 >> 24, (v4 >> 16) & 0xff,
                  (v4 >> 8) & 0xff, v4 & 0xff);
    return buf;
}

}  // namespace hitlist
