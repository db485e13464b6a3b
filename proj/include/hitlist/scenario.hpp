#ifndef HITLIST_SCENARIO_HPP
#define HITLIST_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/probe.hpp"

namespace hitlist {

enum class DnsMode : std::uint8_t { valid = 0, error, referral };

/// TCP SYN-ACK surface of a host or aliased entity.
struct TcpPersona {
    int ttl = 64;
    std::uint32_t window = 65535;
    int wscale = 7;   // -1 = option absent
    int mss = 1440;   // -1 = option absent
    std::string options_order = "mss-sackok-ws";
};

struct HostSpec {
    Addr128 addr;
    ProtocolSet protocols;
    DnsMode dns_mode = DnsMode::valid;
    TcpPersona tcp;
};

enum class AliasMode : std::uint8_t { single_host = 0, multi_host };

/// Which SYN-ACK field differs between the backends of a multi_host entity.
enum class PersonaVariation : std::uint8_t { none = 0, window, options };

/// A fully responsive prefix: every address inside answers on the entity's
/// protocols. single_host models one machine (one PMTU cache for the whole
/// prefix); multi_host models a load-balanced farm where each address is its
/// own PMTU-cache group unless an explicit `group` stanza joins several.
struct AliasedEntity {
    Prefix prefix;
    AliasMode mode = AliasMode::single_host;
    ProtocolSet protocols;
    DnsMode dns_mode = DnsMode::valid;
    TcpPersona tcp;
    PersonaVariation vary = PersonaVariation::none;     // multi_host only
    std::vector<std::vector<Addr128>> groups;           // multi_host shared caches

    /// explicit group index an address belongs to, if any
    std::optional<std::size_t> group_of(Addr128 a) const;
};

struct GfwSpec {
    std::vector<Prefix> covered;
    std::vector<std::string> blocked_qnames;   // exact match
    std::vector<ResourceRecord> answer_pool;   // A records and Teredo AAAAs
    int replies_per_query = 1;

    bool covers(Addr128 a) const;
    bool blocks(const std::string& qname) const;
};

struct CpeFleet {
    std::vector<MacAddr> macs;
    std::vector<Prefix> prefix_pool;   // /64s the CPEs rotate through
    std::uint32_t rotation_period = 1;  // scans between re-assignments
};

/// Declarative ground truth for the simulated network. All randomness in a
/// run derives from `seed`, so a scenario file pins behavior completely.
struct Scenario {
    std::uint64_t seed = 0;
    double loss_rate = 0.0;
    std::vector<HostSpec> hosts;
    std::vector<AliasedEntity> aliased;
    std::optional<GfwSpec> injector;
    std::vector<CpeFleet> fleets;

    static Scenario load(const std::filesystem::path& file);
    static Scenario parse(const std::string& text, const std::string& origin = "<scenario>");

    /// throws std::invalid_argument on overlapping entities or bad fields
    void validate() const;

    const HostSpec* find_host(Addr128 a) const;
    const AliasedEntity* find_aliased(Addr128 a) const;
};

}  // namespace hitlist

#endif  // HITLIST_SCENARIO_HPP
