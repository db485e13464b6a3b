#ifndef HITLIST_APD_HPP
#define HITLIST_APD_HPP

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "hitlist/asn.hpp"
#include "hitlist/probe.hpp"

namespace hitlist {

// Aliased-prefix detection. A prefix whose every address answers probes
// (one machine owning the whole block) would flood the hitlist with
// pseudo-responsive addresses; we detect such prefixes by probing one
// pseudo-random address in each of their 16 next-nibble subprefixes and
// calling the prefix aliased only when all 16 answer.

/// where a candidate prefix came from
enum class CandidateOrigin : std::uint8_t {
    bgp = 0,       // announced in the routing table
    slash64,       // /64 around at least one input address
    dense_longer,  // longer prefix (68..124 step 4) holding >= 100 inputs
};

std::string_view candidate_origin_name(CandidateOrigin o);

struct ApdCandidate {
    Prefix prefix;
    CandidateOrigin origin = CandidateOrigin::bgp;

    friend bool operator==(const ApdCandidate& a, const ApdCandidate& b) {
        return a.prefix == b.prefix && a.origin == b.origin;
    }
    friend bool operator<(const ApdCandidate& a, const ApdCandidate& b) {
        return a.prefix < b.prefix;
    }
};

/// number of input addresses a longer-prefix level needs to qualify
inline constexpr std::size_t kDenseThreshold = 100;

/// protocols the detector probes and merges
inline constexpr std::array<Protocol, 2> kApdProtocols{Protocol::icmp, Protocol::tcp80};

/// Candidate prefixes for one scan: every routed prefix of length <= 124
/// (longer ones cannot host 16 subprefixes and are skipped with a warning),
/// the /64 around every input address, and every 68..124-step-4 prefix
/// holding >= kDenseThreshold inputs — each level counted independently.
/// When one prefix qualifies through several origins the listed priority
/// (bgp, then slash64, then dense_longer) wins. `input` must be sorted;
/// the result is sorted by prefix.
std::vector<ApdCandidate> enumerate_candidates(const std::vector<Addr128>& input,
                                               const RibTable& rib);

/// One probe target per next-nibble subprefix: target i has the nibble
/// after the prefix fixed to i and its remaining host bits drawn from a
/// generator keyed by (seed, scan_id, prefix, i), so any worker computes
/// the same 16 addresses. Throws std::invalid_argument for length > 124.
std::array<Addr128, 16> generate_probe_targets(const Prefix& prefix, std::uint32_t scan_id,
                                               std::uint64_t seed);

/// Responsiveness of the 16 subprefix targets for one scan, one bit per
/// (subprefix, probed protocol) cell.
class SubprefixGrid {
public:
    SubprefixGrid() = default;
    explicit SubprefixGrid(std::uint32_t bits) : bits_(bits) {}

    void set(int subprefix, int protocol_index);
    bool get(int subprefix, int protocol_index) const;

    /// OR over the probed protocols
    bool subprefix_responsive(int subprefix) const;

    /// raw cell bits, for persistence
    std::uint32_t bits() const { return bits_; }

    friend bool operator==(SubprefixGrid a, SubprefixGrid b) { return a.bits_ == b.bits_; }

private:
    std::uint32_t bits_ = 0;  // bit (subprefix * 2 + protocol_index)
};

/// Probes all 16 targets of `prefix` on the detector protocols and fills
/// the grid. `limiter` is required when the engine is paced.
SubprefixGrid probe_prefix(ProbeEngine& engine, std::uint32_t scan_id, const Prefix& prefix,
                           std::uint64_t seed, RateLimiter* limiter = nullptr);

/// how many scans back the merge window reaches (current + 3 previous)
inline constexpr int kApdWindowScans = 4;

struct ApdResult {
    Prefix prefix;
    std::uint32_t scan_id = 0;
    std::vector<SubprefixGrid> window;  // grids of the in-window scans
    bool aliased = false;
};

/// Merges the window grids cell-wise by OR and labels the prefix aliased
/// when every subprefix answered at least once in the window on either
/// protocol. `window` holds the grids of the current and up to three
/// previous scans; throws std::invalid_argument when empty or larger than
/// the window.
ApdResult evaluate(const Prefix& prefix, std::uint32_t scan_id,
                   std::vector<SubprefixGrid> window);

/// Minimal covering set: drops every prefix contained in another one.
/// The result is sorted and pairwise disjoint.
std::vector<Prefix> collapse(std::vector<Prefix> aliased);

/// the member of a collapsed (sorted, disjoint) prefix set containing `a`
std::optional<Prefix> covering_prefix(const std::vector<Prefix>& collapsed, Addr128 a);

/// membership test against a collapsed (sorted, disjoint) prefix set
bool covered_by(const std::vector<Prefix>& collapsed, Addr128 a);

/// Splits `input` into (kept, removed) around the aliased prefix set;
/// removed = input addresses inside any aliased prefix. Both outputs stay
/// sorted and partition the input.
std::pair<std::vector<Addr128>, std::vector<Addr128>> filter_addresses(
    const std::vector<Addr128>& input, const std::vector<Prefix>& aliased);

/// One address to carry per aliased prefix: the lowest input address
/// inside it when one exists, otherwise a seeded pseudo-random member.
/// `input` must be sorted.
std::map<Prefix, Addr128> representatives(const std::vector<Prefix>& aliased,
                                          const std::vector<Addr128>& input, std::uint64_t seed);

}  // namespace hitlist

#endif  // HITLIST_APD_HPP
