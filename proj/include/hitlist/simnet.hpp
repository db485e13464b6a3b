#ifndef HITLIST_SIMNET_HPP
#define HITLIST_SIMNET_HPP

#include <cstdint>
#include <map>
#include <mutex>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hitlist/probe.hpp"
#include "hitlist/scenario.hpp"

namespace hitlist {

/// Deterministic network simulator: answers probes straight from a
/// Scenario's ground truth. All randomness (loss, injected answers, CPE
/// rotation) is counter-based off the scenario seed, so identical runs
/// produce identical traffic. The only mutable state is the per-scan PMTU
/// cache written by Packet-Too-Big probes.
class SimNet : public ProbeEngine {
public:
    explicit SimNet(Scenario scenario);

    std::vector<ProbeResponse> probe(std::uint32_t scan_id, const ProbeRequest& req) override;
    bool paced() const override { return false; }

    const Scenario& scenario() const { return sc_; }

    /// EUI-64 address of every fleet MAC at this scan; stable within one
    /// rotation period, re-drawn at the next
    std::vector<std::pair<MacAddr, Addr128>> cpe_assignments(std::uint32_t scan_id) const;

    struct LogEntry {
        std::uint32_t scan_id;
        ProbeRequest request;
    };

    /// Request logging is off by default (large runs would hoard memory);
    /// tests that assert probe sequences switch it on.
    void set_request_logging(bool enabled);
    std::vector<LogEntry> request_log() const;
    void clear_request_log();

private:
    // which PMTU cache a target shares; domain disambiguates the id space
    struct CacheKey {
        std::uint32_t scan_id;
        std::uint8_t domain;  // 0 host, 1 single_host entity, 2 explicit group, 3 singleton, 4 cpe
        uint128 id;

        friend bool operator<(const CacheKey& a, const CacheKey& b) {
            if (a.scan_id != b.scan_id) return a.scan_id < b.scan_id;
            if (a.domain != b.domain) return a.domain < b.domain;
            return a.id < b.id;
        }
    };

    const AliasedEntity* entity_for(Addr128 a, std::size_t* index_out) const;
    bool cpe_has(std::uint32_t scan_id, Addr128 a);
    bool cache_key_for(std::uint32_t scan_id, Addr128 target, CacheKey& out);
    std::vector<ProbeResponse> answer(std::uint32_t scan_id, const ProbeRequest& req);
    ProbeResponse synack_for(const TcpPersona& tcp) const;
    ProbeResponse entity_synack(const AliasedEntity& ent, Addr128 target) const;
    std::vector<ProbeResponse> dns_answer(std::uint32_t scan_id, const ProbeRequest& req);

    Scenario sc_;
    std::unordered_map<Addr128, std::size_t> host_index_;
    std::vector<std::size_t> aliased_by_base_;  // entity indices sorted by prefix base

    mutable std::mutex mu_;
    std::map<CacheKey, std::uint32_t> pmtu_;                              // lowered MTUs
    std::unordered_map<std::uint32_t, std::unordered_set<Addr128>> cpe_cache_;  // per-scan members
    bool logging_ = false;
    std::vector<LogEntry> log_;
};

}  // namespace hitlist

#endif  // HITLIST_SIMNET_HPP
