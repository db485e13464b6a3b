#ifndef HITLIST_PROBE_HPP
#define HITLIST_PROBE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

enum class ProbeKind : std::uint8_t {
    echo = 0,      // ICMPv6 echo request, sized payload
    syn,           // TCP SYN to port 80 or 443
    dns_aaaa,      // UDP/53 AAAA query
    quic_initial,  // UDP/443 QUIC initial
    ptb,           // ICMPv6 packet-too-big notification (no reply expected)
};

std::string_view probe_kind_name(ProbeKind k);

/// One outbound probe. Use the factories; they validate the kind-specific
/// fields (payload size, port, MTU) so malformed requests fail loudly at
/// construction instead of producing silent timeouts.
struct ProbeRequest {
    ProbeKind kind = ProbeKind::echo;
    Addr128 target;
    std::uint16_t port = 0;     // syn only
    std::uint32_t size = 0;     // echo payload bytes, >= 8
    std::uint32_t mtu = 0;      // ptb only
    std::string qname;          // dns_aaaa only

    static ProbeRequest echo(Addr128 target, std::uint32_t payload_size = 8);
    static ProbeRequest syn(Addr128 target, std::uint16_t port);
    static ProbeRequest dns(Addr128 target, std::string qname);
    static ProbeRequest quic(Addr128 target);
    static ProbeRequest ptb(Addr128 target, std::uint32_t mtu);

    friend bool operator==(const ProbeRequest& a, const ProbeRequest& b) {
        return a.kind == b.kind && a.target == b.target && a.port == b.port &&
               a.size == b.size && a.mtu == b.mtu && a.qname == b.qname;
    }
    friend bool operator<(const ProbeRequest& a, const ProbeRequest& b);
};

/// Protocol bucket a request's answer counts toward.
Protocol request_protocol(const ProbeRequest& req);

enum class RrType : std::uint8_t { a = 0, aaaa, ns, other };

struct ResourceRecord {
    RrType type = RrType::aaaa;
    Addr128 aaaa_data;          // valid when type == aaaa
    std::uint32_t a_data = 0;   // valid when type == a
    std::string text;           // valid when type == ns or other

    static ResourceRecord a(std::uint32_t v4);
    static ResourceRecord aaaa(Addr128 v6);
    static ResourceRecord ns(std::string name);

    friend bool operator==(const ResourceRecord& x, const ResourceRecord& y) {
        return x.type == y.type && x.aaaa_data == y.aaaa_data && x.a_data == y.a_data &&
               x.text == y.text;
    }
};

enum class ResponseKind : std::uint8_t {
    timeout = 0,
    echo_reply,
    tcp_synack,
    dns_reply,
    quic_reply,
};

std::string_view response_kind_name(ResponseKind k);

/// TCP header fields of a SYN-ACK. wscale and mss are -1 when the option
/// was absent; options_order lists option kinds in wire order ("mss-sackok-ws").
struct TcpFields {
    int ttl = 64;
    std::uint32_t window = 0;
    int wscale = -1;
    int mss = -1;
    std::string options_order;

    friend bool operator==(const TcpFields& a, const TcpFields& b) {
        return a.ttl == b.ttl && a.window == b.window && a.wscale == b.wscale &&
               a.mss == b.mss && a.options_order == b.options_order;
    }
};

/// One answer to a probe. A timed-out probe is represented explicitly so
/// batch results always carry at least one response per request, and a
/// request may yield several answers (injected DNS replies); arrival_index
/// orders them.
struct ProbeResponse {
    ResponseKind kind = ResponseKind::timeout;
    Addr128 target;                          // address the probe was sent to
    int arrival_index = 0;
    bool fragmented = false;                 // echo_reply: reply arrived in fragments
    TcpFields tcp;                           // tcp_synack
    int rcode = 0;                           // dns_reply
    std::vector<ResourceRecord> answers;     // dns_reply answer section
    bool referral = false;                   // dns_reply: name-server referral

    static ProbeResponse timeout();
    static ProbeResponse echo(bool fragmented = false);
    static ProbeResponse synack(TcpFields fields);
    static ProbeResponse dns(int rcode, std::vector<ResourceRecord> answers, bool referral = false);
    static ProbeResponse quic();

    bool responsive() const { return kind != ResponseKind::timeout; }
};

/// Anything that can answer probes: the simulated network in tests and
/// offline runs, a raw-socket engine in a live deployment.
class ProbeEngine {
public:
    virtual ~ProbeEngine() = default;

    /// All replies the network produced for one probe, timeout included;
    /// never returns an empty vector.
    virtual std::vector<ProbeResponse> probe(std::uint32_t scan_id, const ProbeRequest& req) = 0;

    /// true when callers must pace their probes through a RateLimiter
    virtual bool paced() const = 0;
};

/// Token bucket; clock and sleep are injectable so tests can run it on a
/// fake timeline.
class RateLimiter {
public:
    using Clock = std::function<double()>;            // seconds, monotonic
    using Sleeper = std::function<void(double)>;      // seconds

    explicit RateLimiter(double per_second);
    RateLimiter(double per_second, Clock clock, Sleeper sleep);

    /// blocks until a token is available, then consumes it
    void acquire();

    double rate() const { return rate_; }

private:
    double rate_;
    double tokens_;
    double last_;
    Clock clock_;
    Sleeper sleep_;
};

struct BatchEntry {
    ProbeRequest request;
    std::vector<ProbeResponse> responses;
};

/// Deduplicates `requests`, probes each unique one once, and returns the
/// entries sorted by request. Applies `limiter` per probe when the engine
/// is paced (limiter may be null for unpaced engines).
std::vector<BatchEntry> probe_batch(ProbeEngine& engine, std::uint32_t scan_id,
                                    std::vector<ProbeRequest> requests,
                                    RateLimiter* limiter = nullptr);

}  // namespace hitlist

#endif  // HITLIST_PROBE_HPP
