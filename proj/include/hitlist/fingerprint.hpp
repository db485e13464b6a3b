#ifndef HITLIST_FINGERPRINT_HPP
#define HITLIST_FINGERPRINT_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hitlist/probe.hpp"

namespace hitlist {

// Two ways of telling whether the addresses of a prefix are one machine:
// comparing TCP handshake features across addresses, and checking whether
// a Path-MTU cache entry planted at one address surfaces at the others.

/// Initial-TTL class of an observed hop-decremented TTL: the smallest of
/// {32, 64, 128, 255} at or above it. Throws std::invalid_argument outside
/// [1, 255].
int ittl(int ttl);

/// TCP handshake features of one address. wscale/mss are empty when the
/// SYN-ACK did not carry the option.
struct TcpFingerprint {
    int ittl = 64;
    std::string options_order;
    std::uint32_t window = 0;
    std::optional<int> wscale;
    std::optional<int> mss;

    friend bool operator==(const TcpFingerprint& a, const TcpFingerprint& b) {
        return a.ittl == b.ittl && a.options_order == b.options_order && a.window == b.window &&
               a.wscale == b.wscale && a.mss == b.mss;
    }
};

/// Throws std::invalid_argument unless `r` is a SYN-ACK.
TcpFingerprint fingerprint_from_synack(const ProbeResponse& r);

/// SYNs every address once and keeps the fingerprints of those that
/// answered, in address order.
std::vector<TcpFingerprint> collect_fingerprints(ProbeEngine& engine, std::uint32_t scan_id,
                                                 const std::vector<Addr128>& addrs,
                                                 std::uint16_t port = 443,
                                                 RateLimiter* limiter = nullptr);

enum class FieldConsistency : std::uint8_t { uniform = 0, differs };

/// A lone differing window is a weak signal (it moves on a single host);
/// any other differing field separates machines.
enum class OverallConsistency : std::uint8_t { uniform = 0, weakly_differs, differs };

std::string_view overall_consistency_name(OverallConsistency c);

struct ConsistencyReport {
    FieldConsistency ittl = FieldConsistency::uniform;
    FieldConsistency options_order = FieldConsistency::uniform;
    FieldConsistency window = FieldConsistency::uniform;
    FieldConsistency wscale = FieldConsistency::uniform;
    FieldConsistency mss = FieldConsistency::uniform;
    OverallConsistency overall = OverallConsistency::uniform;
};

/// Per-field uniformity across >= 2 fingerprints; an absent optional field
/// counts as one more distinct value. Throws std::invalid_argument on
/// fewer than two fingerprints.
ConsistencyReport prefix_consistency(const std::vector<TcpFingerprint>& fps);

// --- Too-Big-Trick ---------------------------------------------------------

enum class TbtClass : std::uint8_t {
    full_alias = 0,   // all 7 untouched addresses served the planted cache
    partial,          // some did
    no_shared_cache,  // none did
    inconclusive,     // the preconditions did not hold on this prefix
};

struct TbtOutcome {
    Prefix prefix;
    std::array<Addr128, 8> tested{};
    bool step1_ok = false;              // all 8 replied unfragmented pre-PTB
    bool step2_ok = false;              // address 0 replied fragmented post-PTB
    int fragmented_without_ptb = 0;     // of addresses 1..7
    TbtClass cls = TbtClass::inconclusive;
};

/// "full_alias", "partial(3)", "no_shared_cache", "inconclusive"
std::string tbt_class_name(const TbtOutcome& o);

/// Eight distinct seeded addresses inside `prefix`. The all-zeros base is
/// skipped (it is rarely a real host) except at length 125, where the
/// prefix holds exactly the 8 addresses needed. Throws
/// std::invalid_argument for length > 125.
std::array<Addr128, 8> tbt_targets(const Prefix& prefix, std::uint32_t scan_id,
                                   std::uint64_t seed);

/// The three-step cache probe, 17 probes in fixed order: echo(1300) to all
/// 8 targets, ptb(1280) to target 0, echo(1300) re-probe of target 0, then
/// echo(1300) to targets 1..7. All probes are always issued; a failed
/// step 1 or 2 yields class inconclusive. Runs against one PMTU domain
/// must not interleave, so call sites parallelize across prefixes only.
TbtOutcome tbt_run(ProbeEngine& engine, std::uint32_t scan_id, const Prefix& prefix,
                   std::uint64_t seed, RateLimiter* limiter = nullptr);

/// outcome log as `prefix,class,fragmented_count,step1_ok` rows
void write_tbt_csv(std::ostream& out, const std::vector<TbtOutcome>& outcomes);
void write_tbt_csv(const std::filesystem::path& file, const std::vector<TbtOutcome>& outcomes);

}  // namespace hitlist

#endif  // HITLIST_FINGERPRINT_HPP
