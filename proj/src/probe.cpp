#include "hitlist/probe.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace hitlist {

std::string_view probe_kind_name(ProbeKind k) {
    switch (k) {
        case ProbeKind::echo: return "echo";
        case ProbeKind::syn: return "syn";
        case ProbeKind::dns_aaaa: return "dns_aaaa";
        case ProbeKind::quic_initial: return "quic_initial";
        case ProbeKind::ptb: return "ptb";
    }
    return "?";
}

std::string_view response_kind_name(ResponseKind k) {
    switch (k) {
        case ResponseKind::timeout: return "timeout";
        case ResponseKind::echo_reply: return "echo_reply";
        case ResponseKind::tcp_synack: return "tcp_synack";
        case ResponseKind::dns_reply: return "dns_reply";
        case ResponseKind::quic_reply: return "quic_reply";
    }
    return "?";
}

ProbeRequest ProbeRequest::echo(Addr128 target, std::uint32_t payload_size) {
    if (payload_size < 8 || payload_size > 65535)
        throw std::invalid_argument("echo payload outside [8, 65535] bytes");
    ProbeRequest r;
    r.kind = ProbeKind::echo;
    r.target = target;
    r.size = payload_size;
    return r;
}

ProbeRequest ProbeRequest::syn(Addr128 target, std::uint16_t port) {
    if (port != 80 && port != 443)
        throw std::invalid_argument("syn probes target port 80 or 443 only");
    ProbeRequest r;
    r.kind = ProbeKind::syn;
    r.target = target;
    r.port = port;
    return r;
}

ProbeRequest ProbeRequest::dns(Addr128 target, std::string qname) {
    if (qname.empty()) throw std::invalid_argument("dns probe needs a query name");
    ProbeRequest r;
    r.kind = ProbeKind::dns_aaaa;
    r.target = target;
    r.qname = std::move(qname);
    return r;
}

ProbeRequest ProbeRequest::quic(Addr128 target) {
    ProbeRequest r;
    r.kind = ProbeKind::quic_initial;
    r.target = target;
    return r;
}

ProbeRequest ProbeRequest::ptb(Addr128 target, std::uint32_t mtu) {
    if (mtu < 1280) throw std::invalid_argument("ptb MTU below the IPv6 minimum of 1280");
    ProbeRequest r;
    r.kind = ProbeKind::ptb;
    r.target = target;
    r.mtu = mtu;
    return r;
}

bool operator<(const ProbeRequest& a, const ProbeRequest& b) {
    auto key = [](const ProbeRequest& r) {
        return std::tuple(static_cast<int>(r.kind), r.target.value(), r.port, r.size, r.mtu,
                          std::string_view(r.qname));
    };
    return key(a) < key(b);
}

Protocol request_protocol(const ProbeRequest& req) {
    switch (req.kind) {
        case ProbeKind::echo:
        case ProbeKind::ptb:
            return Protocol::icmp;
        case ProbeKind::syn:
            return req.port == 443 ? Protocol::tcp443 : Protocol::tcp80;
        case ProbeKind::dns_aaaa:
            return Protocol::udp53;
        case ProbeKind::quic_initial:
            return Protocol::udp443;
    }
    return Protocol::icmp;
}

ResourceRecord ResourceRecord::a(std::uint32_t v4) {
    ResourceRecord r;
    r.type = RrType::a;
    r.a_data = v4;
    return r;
}

ResourceRecord ResourceRecord::aaaa(Addr128 v6) {
    ResourceRecord r;
    r.type = RrType::aaaa;
    r.aaaa_data = v6;
    return r;
}

ResourceRecord ResourceRecord::ns(std::string name) {
    ResourceRecord r;
    r.type = RrType::ns;
    r.text = std::move(name);
    return r;
}

ProbeResponse ProbeResponse::timeout() { return ProbeResponse{}; }

ProbeResponse ProbeResponse::echo(bool fragmented) {
    ProbeResponse r;
    r.kind = ResponseKind::echo_reply;
    r.fragmented = fragmented;
    return r;
}

ProbeResponse ProbeResponse::synack(TcpFields fields) {
    ProbeResponse r;
    r.kind = ResponseKind::tcp_synack;
    r.tcp = std::move(fields);
    return r;
}

ProbeResponse ProbeResponse::dns(int rcode, std::vector<ResourceRecord> answers, bool referral) {
    ProbeResponse r;
    r.kind = ResponseKind::dns_reply;
    r.rcode = rcode;
    r.answers = std::move(answers);
    r.referral = referral;
    return r;
}

ProbeResponse ProbeResponse::quic() {
    ProbeResponse r;
    r.kind = ResponseKind::quic_reply;
    return r;
}

namespace {

double steady_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void real_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

}  // namespace

RateLimiter::RateLimiter(double per_second)
    : RateLimiter(per_second, steady_seconds, real_sleep) {}

RateLimiter::RateLimiter(double per_second, Clock clock, Sleeper sleep)
    : rate_(per_second), tokens_(per_second), clock_(std::move(clock)), sleep_(std::move(sleep)) {
    if (!(per_second > 0)) throw std::invalid_argument("rate limit must be positive");
    last_ = clock_();
}

void RateLimiter::acquire() {
    for (;;) {
        double now = clock_();
        tokens_ = std::min(rate_, tokens_ + (now - last_) * rate_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        sleep_((1.0 - tokens_) / rate_);
    }
}

std::vector<BatchEntry> probe_batch(ProbeEngine& engine, std::uint32_t scan_id,
                                    std::vector<ProbeRequest> requests, RateLimiter* limiter) {
    std::sort(requests.begin(), requests.end());
    requests.erase(std::unique(requests.begin(), requests.end()), requests.end());

    if (engine.paced() && limiter == nullptr)
        throw std::runtime_error("paced probe engine requires a rate limiter");

    std::vector<BatchEntry> out;
    out.reserve(requests.size());
    for (auto& req : requests) {
        if (engine.paced()) limiter->acquire();
        auto responses = engine.probe(scan_id, req);
        if (responses.empty())
            throw std::runtime_error("probe engine returned no response (not even a timeout)");
        out.push_back(BatchEntry{std::move(req), std::move(responses)});
    }
    return out;
}

}  // namespace hitlist
