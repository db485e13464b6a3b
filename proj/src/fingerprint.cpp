#include "hitlist/fingerprint.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "hitlist/io.hpp"
#include "hitlist/rng.hpp"

namespace hitlist {

int ittl(int ttl) {
    if (ttl < 1 || ttl > 255)
        throw std::invalid_argument("ittl: observed TTL " + std::to_string(ttl) +
                                    " outside [1, 255]");
    if (ttl <= 32) return 32;
    if (ttl <= 64) return 64;
    if (ttl <= 128) return 128;
    return 255;
}

TcpFingerprint fingerprint_from_synack(const ProbeResponse& r) {
    if (r.kind != ResponseKind::tcp_synack)
        throw std::invalid_argument("fingerprint_from_synack: response is not a SYN-ACK");
    TcpFingerprint fp;
    fp.ittl = ittl(r.tcp.ttl);
    fp.options_order = r.tcp.options_order;
    fp.window = r.tcp.window;
    if (r.tcp.wscale >= 0) fp.wscale = r.tcp.wscale;
    if (r.tcp.mss >= 0) fp.mss = r.tcp.mss;
    return fp;
}

namespace {

// honors the engine's pacing contract for probes that must stay ordered
std::vector<ProbeResponse> paced_probe(ProbeEngine& engine, std::uint32_t scan_id,
                                       const ProbeRequest& req, RateLimiter* limiter) {
    if (engine.paced()) {
        if (!limiter) throw std::runtime_error("paced engine requires a rate limiter");
        limiter->acquire();
    }
    return engine.probe(scan_id, req);
}

}  // namespace

std::vector<TcpFingerprint> collect_fingerprints(ProbeEngine& engine, std::uint32_t scan_id,
                                                 const std::vector<Addr128>& addrs,
                                                 std::uint16_t port, RateLimiter* limiter) {
    std::vector<TcpFingerprint> out;
    for (Addr128 a : addrs) {
        for (const auto& r : paced_probe(engine, scan_id, ProbeRequest::syn(a, port), limiter)) {
            if (r.kind == ResponseKind::tcp_synack) {
                out.push_back(fingerprint_from_synack(r));
                break;
            }
        }
    }
    return out;
}

std::string_view overall_consistency_name(OverallConsistency c) {
    switch (c) {
        case OverallConsistency::uniform: return "uniform";
        case OverallConsistency::weakly_differs: return "weakly_differs";
        case OverallConsistency::differs: return "differs";
    }
    return "?";
}

ConsistencyReport prefix_consistency(const std::vector<TcpFingerprint>& fps) {
    if (fps.size() < 2)
        throw std::invalid_argument("prefix_consistency: need at least two fingerprints");

    ConsistencyReport rep;
    const TcpFingerprint& first = fps.front();
    for (const TcpFingerprint& fp : fps) {
        if (fp.ittl != first.ittl) rep.ittl = FieldConsistency::differs;
        if (fp.options_order != first.options_order) rep.options_order = FieldConsistency::differs;
        if (fp.window != first.window) rep.window = FieldConsistency::differs;
        if (fp.wscale != first.wscale) rep.wscale = FieldConsistency::differs;
        if (fp.mss != first.mss) rep.mss = FieldConsistency::differs;
    }

    bool strong = rep.ittl == FieldConsistency::differs ||
                  rep.options_order == FieldConsistency::differs ||
                  rep.wscale == FieldConsistency::differs || rep.mss == FieldConsistency::differs;
    if (strong)
        rep.overall = OverallConsistency::differs;
    else if (rep.window == FieldConsistency::differs)
        rep.overall = OverallConsistency::weakly_differs;
    return rep;
}

std::string tbt_class_name(const TbtOutcome& o) {
    switch (o.cls) {
        case TbtClass::full_alias: return "full_alias";
        case TbtClass::partial:
            return "partial(" + std::to_string(o.fragmented_without_ptb) + ")";
        case TbtClass::no_shared_cache: return "no_shared_cache";
        case TbtClass::inconclusive: return "inconclusive";
    }
    return "?";
}

std::array<Addr128, 8> tbt_targets(const Prefix& prefix, std::uint32_t scan_id,
                                   std::uint64_t seed) {
    if (prefix.length() > 125)
        throw std::invalid_argument("tbt_targets: " + prefix.to_string() +
                                    " holds fewer than 8 addresses");
    const int host_bits = 128 - prefix.length();
    CounterRng rng;
    rng.mix(std::string_view("tbt")).mix(seed).mix(std::uint64_t{scan_id}).mix(prefix);

    std::array<Addr128, 8> out;
    if (host_bits <= 6) {
        // space of at most 64: enumerate, shuffle, take the front. The
        // base stays out unless the prefix is exactly the 8 addresses.
        std::vector<Addr128> pool;
        const uint128 space = uint128{1} << host_bits;
        for (uint128 v = 0; v < space; ++v) {
            if (v == 0 && prefix.length() != 125) continue;
            pool.push_back(Addr128(prefix.base().value() | v));
        }
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[rng.next_below(i)]);
        std::copy_n(pool.begin(), 8, out.begin());
    } else {
        std::unordered_set<Addr128> seen;
        std::size_t filled = 0;
        while (filled < 8) {
            uint128 host = rng.next_bits(host_bits);
            if (host == 0) continue;
            Addr128 a(prefix.base().value() | host);
            if (seen.insert(a).second) out[filled++] = a;
        }
    }
    return out;
}

TbtOutcome tbt_run(ProbeEngine& engine, std::uint32_t scan_id, const Prefix& prefix,
                   std::uint64_t seed, RateLimiter* limiter) {
    constexpr std::uint32_t kProbeSize = 1300;
    constexpr std::uint32_t kReportedMtu = 1280;

    TbtOutcome o;
    o.prefix = prefix;
    o.tested = tbt_targets(prefix, scan_id, seed);

    // one echo's verdict: (got a reply, reply was fragmented)
    auto echo = [&](Addr128 a) -> std::pair<bool, bool> {
        for (const auto& r :
             paced_probe(engine, scan_id, ProbeRequest::echo(a, kProbeSize), limiter))
            if (r.kind == ResponseKind::echo_reply) return {true, r.fragmented};
        return {false, false};
    };

    // step 1: everyone answers whole before any PTB
    o.step1_ok = true;
    for (Addr128 a : o.tested) {
        auto [replied, fragmented] = echo(a);
        o.step1_ok = o.step1_ok && replied && !fragmented;
    }

    // step 2: plant the cache entry at target 0 and confirm it took
    paced_probe(engine, scan_id, ProbeRequest::ptb(o.tested[0], kReportedMtu), limiter);
    {
        auto [replied, fragmented] = echo(o.tested[0]);
        o.step2_ok = replied && fragmented;
    }

    // step 3: see who else serves the planted entry
    for (std::size_t i = 1; i < o.tested.size(); ++i) {
        auto [replied, fragmented] = echo(o.tested[i]);
        if (replied && fragmented) ++o.fragmented_without_ptb;
    }

    if (!o.step1_ok || !o.step2_ok)
        o.cls = TbtClass::inconclusive;
    else if (o.fragmented_without_ptb == 7)
        o.cls = TbtClass::full_alias;
    else if (o.fragmented_without_ptb == 0)
        o.cls = TbtClass::no_shared_cache;
    else
        o.cls = TbtClass::partial;
    return o;
}

void write_tbt_csv(std::ostream& out, const std::vector<TbtOutcome>& outcomes) {
    out << "prefix,class,fragmented_count,step1_ok\n";
    for (const auto& o : outcomes)
        out << o.prefix.to_string() << ',' << tbt_class_name(o) << ',' << o.fragmented_without_ptb
            << ',' << (o.step1_ok ? "true" : "false") << '\n';
}

void write_tbt_csv(const std::filesystem::path& file, const std::vector<TbtOutcome>& outcomes) {
    auto out = open_output(file);
    write_tbt_csv(out, outcomes);
}

}  // namespace hitlist
