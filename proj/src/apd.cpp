#include "hitlist/apd.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>
#include <unordered_map>

#include "hitlist/rng.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

std::string_view candidate_origin_name(CandidateOrigin o) {
    switch (o) {
        case CandidateOrigin::bgp: return "bgp";
        case CandidateOrigin::slash64: return "slash64";
        case CandidateOrigin::dense_longer: return "dense_longer";
    }
    return "?";
}

std::vector<ApdCandidate> enumerate_candidates(const std::vector<Addr128>& input,
                                               const RibTable& rib) {
    // lower enum value = higher priority when origins collide on one prefix
    std::map<Prefix, CandidateOrigin> merged;
    auto offer = [&](const Prefix& p, CandidateOrigin o) {
        auto [it, inserted] = merged.emplace(p, o);
        if (!inserted && o < it->second) it->second = o;
    };

    for (const auto& entry : rib.entries()) {
        if (entry.prefix.length() > 124) {
            std::cerr << "apd: skipping routed prefix " << entry.prefix.to_string()
                      << " (too long to subdivide into 16 subprefixes)\n";
            continue;
        }
        offer(entry.prefix, CandidateOrigin::bgp);
    }

    for (std::size_t i = 0; i < input.size(); ++i) {
        Addr128 base(input[i].value() & Prefix::mask_bits(64));
        // input is sorted, so equal /64s are adjacent
        if (i == 0 || Addr128(input[i - 1].value() & Prefix::mask_bits(64)) != base)
            offer(Prefix(base, 64), CandidateOrigin::slash64);
    }

    // each longer level counts the input on its own, one run-length pass
    // over the sorted addresses per level
    for (int len = 68; len <= 124; len += 4) {
        const uint128 mask = Prefix::mask_bits(len);
        std::size_t run_start = 0;
        for (std::size_t i = 1; i <= input.size(); ++i) {
            if (i == input.size() || (input[i].value() & mask) != (input[run_start].value() & mask)) {
                if (i - run_start >= kDenseThreshold)
                    offer(Prefix(Addr128(input[run_start].value() & mask), len),
                          CandidateOrigin::dense_longer);
                run_start = i;
            }
        }
    }

    std::vector<ApdCandidate> out;
    out.reserve(merged.size());
    for (const auto& [prefix, origin] : merged) out.push_back({prefix, origin});
    return out;
}

std::array<Addr128, 16> generate_probe_targets(const Prefix& prefix, std::uint32_t scan_id,
                                               std::uint64_t seed) {
    if (prefix.length() > 124)
        throw std::invalid_argument("generate_probe_targets: " + prefix.to_string() +
                                    " has no room for 16 subprefixes");
    const int host_bits = 128 - prefix.length() - 4;
    std::array<Addr128, 16> targets;
    for (int i = 0; i < 16; ++i) {
        CounterRng rng;
        rng.mix(std::string_view("apd")).mix(seed).mix(std::uint64_t{scan_id}).mix(prefix).mix(
            static_cast<std::uint64_t>(i));
        uint128 sub = static_cast<uint128>(i) << host_bits;
        targets[i] = Addr128(prefix.base().value() | sub | rng.next_bits(host_bits));
    }
    return targets;
}

void SubprefixGrid::set(int subprefix, int protocol_index) {
    bits_ |= 1u << (subprefix * 2 + protocol_index);
}

bool SubprefixGrid::get(int subprefix, int protocol_index) const {
    return bits_ & (1u << (subprefix * 2 + protocol_index));
}

bool SubprefixGrid::subprefix_responsive(int subprefix) const {
    return bits_ & (3u << (subprefix * 2));
}

SubprefixGrid probe_prefix(ProbeEngine& engine, std::uint32_t scan_id, const Prefix& prefix,
                           std::uint64_t seed, RateLimiter* limiter) {
    auto targets = generate_probe_targets(prefix, scan_id, seed);
    std::unordered_map<Addr128, int> index;
    std::vector<ProbeRequest> requests;
    requests.reserve(targets.size() * kApdProtocols.size());
    for (int i = 0; i < 16; ++i) {
        index.emplace(targets[i], i);
        requests.push_back(ProbeRequest::echo(targets[i]));
        requests.push_back(ProbeRequest::syn(targets[i], 80));
    }

    SubprefixGrid grid;
    for (const auto& entry : probe_batch(engine, scan_id, std::move(requests), limiter)) {
        bool responsive = false;
        for (const auto& r : entry.responses) responsive |= r.responsive();
        if (!responsive) continue;
        int protocol_index = entry.request.kind == ProbeKind::echo ? 0 : 1;
        grid.set(index.at(entry.request.target), protocol_index);
    }
    return grid;
}

ApdResult evaluate(const Prefix& prefix, std::uint32_t scan_id,
                   std::vector<SubprefixGrid> window) {
    if (window.empty() || window.size() > static_cast<std::size_t>(kApdWindowScans))
        throw std::invalid_argument("evaluate: window must hold 1.." +
                                    std::to_string(kApdWindowScans) + " grids, got " +
                                    std::to_string(window.size()));
    std::uint32_t merged = 0;
    for (SubprefixGrid g : window) merged |= g.bits();
    SubprefixGrid any(merged);
    bool aliased = true;
    for (int i = 0; i < 16; ++i) aliased &= any.subprefix_responsive(i);
    return {prefix, scan_id, std::move(window), aliased};
}

std::vector<Prefix> collapse(std::vector<Prefix> aliased) {
    sort_unique(aliased);
    // sorted by (base, length): any contained prefix follows a prefix that
    // covers it, so one sweep with the last survivor suffices
    std::vector<Prefix> out;
    for (const Prefix& p : aliased) {
        if (!out.empty() && out.back().contains(p)) continue;
        out.push_back(p);
    }
    return out;
}

std::optional<Prefix> covering_prefix(const std::vector<Prefix>& collapsed, Addr128 a) {
    auto it = std::upper_bound(collapsed.begin(), collapsed.end(), a,
                               [](Addr128 x, const Prefix& p) { return x < p.base(); });
    if (it != collapsed.begin() && std::prev(it)->contains(a)) return *std::prev(it);
    return std::nullopt;
}

bool covered_by(const std::vector<Prefix>& collapsed, Addr128 a) {
    return covering_prefix(collapsed, a).has_value();
}

std::pair<std::vector<Addr128>, std::vector<Addr128>> filter_addresses(
    const std::vector<Addr128>& input, const std::vector<Prefix>& aliased) {
    std::vector<Prefix> collapsed = collapse(aliased);
    std::vector<Addr128> kept, removed;
    for (Addr128 a : input) (covered_by(collapsed, a) ? removed : kept).push_back(a);
    return {std::move(kept), std::move(removed)};
}

std::map<Prefix, Addr128> representatives(const std::vector<Prefix>& aliased,
                                          const std::vector<Addr128>& input, std::uint64_t seed) {
    std::map<Prefix, Addr128> out;
    for (const Prefix& p : aliased) {
        auto it = std::lower_bound(input.begin(), input.end(), p.base());
        if (it != input.end() && *it <= p.last()) {
            out.emplace(p, *it);  // lowest known member
        } else {
            CounterRng rng;
            rng.mix(std::string_view("representative")).mix(seed).mix(p);
            out.emplace(p, Addr128(p.base().value() | rng.next_bits(128 - p.length())));
        }
    }
    return out;
}

}  // namespace hitlist
