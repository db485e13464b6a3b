#include "hitlist/simnet.hpp"

#include <algorithm>

#include "hitlist/rng.hpp"

namespace hitlist {

SimNet::SimNet(Scenario scenario) : sc_(std::move(scenario)) {
    sc_.validate();
    for (std::size_t i = 0; i < sc_.hosts.size(); ++i) host_index_[sc_.hosts[i].addr] = i;
    for (std::size_t i = 0; i < sc_.aliased.size(); ++i) aliased_by_base_.push_back(i);
    std::sort(aliased_by_base_.begin(), aliased_by_base_.end(), [&](std::size_t a, std::size_t b) {
        return sc_.aliased[a].prefix.base() < sc_.aliased[b].prefix.base();
    });
}

// entity prefixes are pairwise disjoint, so the candidate is the last one
// whose base is <= the address
const AliasedEntity* SimNet::entity_for(Addr128 a, std::size_t* index_out) const {
    auto it = std::upper_bound(aliased_by_base_.begin(), aliased_by_base_.end(), a,
                               [&](Addr128 x, std::size_t i) { return x < sc_.aliased[i].prefix.base(); });
    if (it == aliased_by_base_.begin()) return nullptr;
    std::size_t idx = *std::prev(it);
    if (!sc_.aliased[idx].prefix.contains(a)) return nullptr;
    if (index_out) *index_out = idx;
    return &sc_.aliased[idx];
}

std::vector<std::pair<MacAddr, Addr128>> SimNet::cpe_assignments(std::uint32_t scan_id) const {
    std::vector<std::pair<MacAddr, Addr128>> out;
    for (std::size_t fi = 0; fi < sc_.fleets.size(); ++fi) {
        const CpeFleet& fleet = sc_.fleets[fi];
        std::uint64_t epoch = scan_id / fleet.rotation_period;
        for (std::size_t mi = 0; mi < fleet.macs.size(); ++mi) {
            CounterRng rng;
            rng.mix(std::string_view("cpe"))
                .mix(sc_.seed)
                .mix(static_cast<std::uint64_t>(fi))
                .mix(epoch)
                .mix(static_cast<std::uint64_t>(mi));
            const Prefix& pool = fleet.prefix_pool[rng.next_below(fleet.prefix_pool.size())];
            out.emplace_back(fleet.macs[mi], eui64_address(pool, fleet.macs[mi]));
        }
    }
    return out;
}

bool SimNet::cpe_has(std::uint32_t scan_id, Addr128 a) {
    if (sc_.fleets.empty()) return false;
    auto it = cpe_cache_.find(scan_id);
    if (it == cpe_cache_.end()) {
        std::unordered_set<Addr128> members;
        for (const auto& [mac, addr] : cpe_assignments(scan_id)) members.insert(addr);
        it = cpe_cache_.emplace(scan_id, std::move(members)).first;
    }
    return it->second.count(a) > 0;
}

// maps a target to its PMTU-cache identity; false when nothing is there
bool SimNet::cache_key_for(std::uint32_t scan_id, Addr128 target, CacheKey& out) {
    if (host_index_.count(target)) {
        out = CacheKey{scan_id, 0, target.value()};
        return true;
    }
    std::size_t idx = 0;
    if (const AliasedEntity* ent = entity_for(target, &idx)) {
        if (ent->mode == AliasMode::single_host) {
            out = CacheKey{scan_id, 1, static_cast<uint128>(idx)};
        } else if (auto g = ent->group_of(target)) {
            out = CacheKey{scan_id, 2, (static_cast<uint128>(idx) << 64) | *g};
        } else {
            out = CacheKey{scan_id, 3, target.value()};
        }
        return true;
    }
    if (cpe_has(scan_id, target)) {
        out = CacheKey{scan_id, 4, target.value()};
        return true;
    }
    return false;
}

ProbeResponse SimNet::synack_for(const TcpPersona& tcp) const {
    TcpFields f;
    f.ttl = tcp.ttl;
    f.window = tcp.window;
    f.wscale = tcp.wscale;
    f.mss = tcp.mss;
    f.options_order = tcp.options_order;
    return ProbeResponse::synack(std::move(f));
}

// multi_host entities may differ per backend; the backend identity is the
// explicit group index or, for singleton groups, the address itself
ProbeResponse SimNet::entity_synack(const AliasedEntity& ent, Addr128 target) const {
    TcpPersona tcp = ent.tcp;
    if (ent.mode == AliasMode::multi_host && ent.vary != PersonaVariation::none) {
        std::uint64_t backend;
        if (auto g = ent.group_of(target)) {
            backend = *g;
        } else {
            CounterRng rng;
            rng.mix(std::string_view("backend")).mix(target);
            backend = rng.next();
        }
        if (ent.vary == PersonaVariation::window)
            tcp.window = ent.tcp.window + static_cast<std::uint32_t>(backend % 1024) + 1;
        else
            tcp.options_order = ent.tcp.options_order + "-g" + std::to_string(backend % 16);
    }
    return synack_for(tcp);
}

std::vector<ProbeResponse> SimNet::dns_answer(std::uint32_t scan_id, const ProbeRequest& req) {
    // the injector sits on-path: coverage shadows whatever is behind it
    if (sc_.injector && sc_.injector->covers(req.target)) {
        const GfwSpec& gfw = *sc_.injector;
        if (!gfw.blocks(req.qname)) return {};  // silence, not even an error
        CounterRng rng;
        rng.mix(std::string_view("inject"))
            .mix(sc_.seed)
            .mix(static_cast<std::uint64_t>(scan_id))
            .mix(req.target)
            .mix(std::string_view(req.qname));
        std::vector<ProbeResponse> replies;
        for (int i = 0; i < gfw.replies_per_query; ++i) {
            const ResourceRecord& rec = gfw.answer_pool[rng.next_below(gfw.answer_pool.size())];
            replies.push_back(ProbeResponse::dns(0, {rec}));
        }
        return replies;
    }

    DnsMode mode;
    Addr128 self;
    if (auto it = host_index_.find(req.target); it != host_index_.end()) {
        const HostSpec& host = sc_.hosts[it->second];
        if (!host.protocols.contains(Protocol::udp53)) return {};
        mode = host.dns_mode;
        self = host.addr;
    } else if (const AliasedEntity* ent = entity_for(req.target, nullptr)) {
        if (!ent->protocols.contains(Protocol::udp53)) return {};
        mode = ent->dns_mode;
        self = req.target;
    } else {
        return {};
    }

    switch (mode) {
        case DnsMode::valid:
            return {ProbeResponse::dns(0, {ResourceRecord::aaaa(self)})};
        case DnsMode::error:
            return {ProbeResponse::dns(2, {})};  // SERVFAIL
        case DnsMode::referral:
            return {ProbeResponse::dns(0, {}, /*referral=*/true)};
    }
    return {};
}

std::vector<ProbeResponse> SimNet::answer(std::uint32_t scan_id, const ProbeRequest& req) {
    switch (req.kind) {
        case ProbeKind::ptb: {
            CacheKey key{};
            if (cache_key_for(scan_id, req.target, key)) {
                auto [it, inserted] = pmtu_.emplace(key, req.mtu);
                if (!inserted) it->second = std::min(it->second, req.mtu);
            }
            return {};  // one-way notification
        }
        case ProbeKind::echo: {
            bool reachable = false;
            if (auto it = host_index_.find(req.target); it != host_index_.end())
                reachable = sc_.hosts[it->second].protocols.contains(Protocol::icmp);
            else if (const AliasedEntity* ent = entity_for(req.target, nullptr))
                reachable = ent->protocols.contains(Protocol::icmp);
            else if (cpe_has(scan_id, req.target))
                reachable = true;
            if (!reachable) return {};

            bool fragmented = false;
            CacheKey key{};
            if (cache_key_for(scan_id, req.target, key)) {
                auto it = pmtu_.find(key);
                if (it != pmtu_.end() && req.size > it->second) fragmented = true;
            }
            return {ProbeResponse::echo(fragmented)};
        }
        case ProbeKind::syn: {
            Protocol proto = req.port == 443 ? Protocol::tcp443 : Protocol::tcp80;
            if (auto it = host_index_.find(req.target); it != host_index_.end()) {
                const HostSpec& host = sc_.hosts[it->second];
                if (host.protocols.contains(proto)) return {synack_for(host.tcp)};
                return {};
            }
            if (const AliasedEntity* ent = entity_for(req.target, nullptr)) {
                if (ent->protocols.contains(proto)) return {entity_synack(*ent, req.target)};
            }
            return {};
        }
        case ProbeKind::dns_aaaa:
            return dns_answer(scan_id, req);
        case ProbeKind::quic_initial: {
            if (auto it = host_index_.find(req.target); it != host_index_.end())
                return sc_.hosts[it->second].protocols.contains(Protocol::udp443)
                           ? std::vector<ProbeResponse>{ProbeResponse::quic()}
                           : std::vector<ProbeResponse>{};
            if (const AliasedEntity* ent = entity_for(req.target, nullptr))
                if (ent->protocols.contains(Protocol::udp443)) return {ProbeResponse::quic()};
            return {};
        }
    }
    return {};
}

std::vector<ProbeResponse> SimNet::probe(std::uint32_t scan_id, const ProbeRequest& req) {
    std::lock_guard<std::mutex> lock(mu_);
    if (logging_) log_.push_back(LogEntry{scan_id, req});

    std::vector<ProbeResponse> replies = answer(scan_id, req);

    // loss hits replies, never requests, and each reply rolls independently
    if (sc_.loss_rate > 0.0 && !replies.empty()) {
        CounterRng rng;
        rng.mix(std::string_view("loss"))
            .mix(sc_.seed)
            .mix(static_cast<std::uint64_t>(scan_id))
            .mix(req.target)
            .mix(static_cast<std::uint64_t>(req.kind));
        std::vector<ProbeResponse> kept;
        for (auto& r : replies)
            if (rng.next_unit() >= sc_.loss_rate) kept.push_back(std::move(r));
        replies = std::move(kept);
    }

    if (replies.empty()) replies.push_back(ProbeResponse::timeout());
    for (std::size_t i = 0; i < replies.size(); ++i) {
        replies[i].target = req.target;
        replies[i].arrival_index = static_cast<int>(i);
    }
    return replies;
}

void SimNet::set_request_logging(bool enabled) {
    std::lock_guard<std::mutex> lock(mu_);
    logging_ = enabled;
    if (!enabled) log_.clear();
}

std::vector<SimNet::LogEntry> SimNet::request_log() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

void SimNet::clear_request_log() {
    std::lock_guard<std::mutex> lock(mu_);
    log_.clear();
}

}  // namespace hitlist
