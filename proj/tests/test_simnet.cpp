#include <doctest.h>

#include <set>

#include "hitlist/rng.hpp"
#include "hitlist/simnet.hpp"

using namespace hitlist;

namespace {

Scenario basic() {
    return Scenario::parse(
        "seed 7\n"
        "host 2001:db8::1 icmp,tcp80,udp53 dns=valid ttl=57 window=4096 wscale=3 mss=1380 "
        "options=mss-ws\n"
        "host 2001:db8::2 udp443\n"
        "host 2001:db8::3 udp53 dns=error\n"
        "host 2001:db8::4 udp53 dns=referral\n"
        "aliased 2001:db8:a::/64 single_host icmp,tcp80,tcp443,udp53,udp443\n"
        "aliased 2001:db8:b::/64 multi_host icmp\n"
        "group 2001:db8:b::11 2001:db8:b::12 2001:db8:b::13\n");
}

std::vector<ProbeResponse> one(SimNet& net, std::uint32_t scan, const ProbeRequest& req) {
    return net.probe(scan, req);
}

}  // namespace

TEST_CASE("plain hosts answer exactly their protocols") {
    SimNet net(basic());
    Addr128 h1 = parse_addr("2001:db8::1");

    auto echo = one(net, 1, ProbeRequest::echo(h1));
    REQUIRE(echo.size() == 1);
    CHECK(echo[0].kind == ResponseKind::echo_reply);
    CHECK(!echo[0].fragmented);
    CHECK(echo[0].target == h1);
    CHECK(echo[0].arrival_index == 0);

    auto syn = one(net, 1, ProbeRequest::syn(h1, 80));
    REQUIRE(syn.size() == 1);
    CHECK(syn[0].kind == ResponseKind::tcp_synack);
    CHECK(syn[0].tcp.ttl == 57);
    CHECK(syn[0].tcp.window == 4096);
    CHECK(syn[0].tcp.wscale == 3);
    CHECK(syn[0].tcp.mss == 1380);
    CHECK(syn[0].tcp.options_order == "mss-ws");

    // not in the host's protocol set
    CHECK(one(net, 1, ProbeRequest::syn(h1, 443))[0].kind == ResponseKind::timeout);
    CHECK(one(net, 1, ProbeRequest::quic(h1))[0].kind == ResponseKind::timeout);

    // quic-only host
    Addr128 h2 = parse_addr("2001:db8::2");
    CHECK(one(net, 1, ProbeRequest::quic(h2))[0].kind == ResponseKind::quic_reply);
    CHECK(one(net, 1, ProbeRequest::echo(h2))[0].kind == ResponseKind::timeout);

    // nothing lives here
    Addr128 ghost = parse_addr("2001:db8::99");
    CHECK(one(net, 1, ProbeRequest::echo(ghost))[0].kind == ResponseKind::timeout);
    CHECK(one(net, 1, ProbeRequest::dns(ghost, "x.example"))[0].kind == ResponseKind::timeout);
}

TEST_CASE("dns modes shape the reply") {
    SimNet net(basic());

    auto valid = one(net, 1, ProbeRequest::dns(parse_addr("2001:db8::1"), "a.example"));
    REQUIRE(valid.size() == 1);
    CHECK(valid[0].kind == ResponseKind::dns_reply);
    CHECK(valid[0].rcode == 0);
    REQUIRE(valid[0].answers.size() == 1);
    CHECK(valid[0].answers[0].type == RrType::aaaa);
    CHECK(valid[0].answers[0].aaaa_data == parse_addr("2001:db8::1"));
    CHECK(!valid[0].referral);

    auto err = one(net, 1, ProbeRequest::dns(parse_addr("2001:db8::3"), "a.example"));
    REQUIRE(err.size() == 1);
    CHECK(err[0].rcode == 2);
    CHECK(err[0].answers.empty());

    auto ref = one(net, 1, ProbeRequest::dns(parse_addr("2001:db8::4"), "a.example"));
    REQUIRE(ref.size() == 1);
    CHECK(ref[0].rcode == 0);
    CHECK(ref[0].referral);
}

TEST_CASE("aliased entities answer on every address") {
    SimNet net(basic());
    CounterRng rng;
    rng.mix(std::string_view("sample"));
    Prefix p = Prefix::parse("2001:db8:a::/64");
    for (int i = 0; i < 50; ++i) {
        Addr128 a(p.base().value() | rng.next_bits(64));
        CHECK(one(net, 1, ProbeRequest::echo(a))[0].kind == ResponseKind::echo_reply);
        CHECK(one(net, 1, ProbeRequest::syn(a, 80))[0].kind == ResponseKind::tcp_synack);
        CHECK(one(net, 1, ProbeRequest::syn(a, 443))[0].kind == ResponseKind::tcp_synack);
        CHECK(one(net, 1, ProbeRequest::dns(a, "q.example"))[0].kind == ResponseKind::dns_reply);
        CHECK(one(net, 1, ProbeRequest::quic(a))[0].kind == ResponseKind::quic_reply);
    }
    // just outside the prefix: silence
    CHECK(one(net, 1, ProbeRequest::echo(parse_addr("2001:db8:c::1")))[0].kind ==
          ResponseKind::timeout);
}

TEST_CASE("single_host entity shares one PMTU cache across the prefix") {
    SimNet net(basic());
    Addr128 a = parse_addr("2001:db8:a::1");
    Addr128 b = parse_addr("2001:db8:a::ffff");

    // before any PTB: large echoes come back whole
    CHECK(!one(net, 3, ProbeRequest::echo(a, 1300))[0].fragmented);

    one(net, 3, ProbeRequest::ptb(a, 1280));
    CHECK(one(net, 3, ProbeRequest::echo(a, 1300))[0].fragmented);
    CHECK(one(net, 3, ProbeRequest::echo(b, 1300))[0].fragmented);  // same cache
    // replies that fit in the lowered MTU stay whole
    CHECK(!one(net, 3, ProbeRequest::echo(b, 1200))[0].fragmented);

    // PMTU state is scoped to the scan
    CHECK(!one(net, 4, ProbeRequest::echo(a, 1300))[0].fragmented);
}

TEST_CASE("multi_host groups share, singletons do not") {
    SimNet net(basic());
    Addr128 g1 = parse_addr("2001:db8:b::11");
    Addr128 g2 = parse_addr("2001:db8:b::12");
    Addr128 solo = parse_addr("2001:db8:b::77");
    Addr128 other = parse_addr("2001:db8:b::78");

    one(net, 1, ProbeRequest::ptb(g1, 1280));
    CHECK(one(net, 1, ProbeRequest::echo(g1, 1300))[0].fragmented);
    CHECK(one(net, 1, ProbeRequest::echo(g2, 1300))[0].fragmented);   // same group
    CHECK(!one(net, 1, ProbeRequest::echo(solo, 1300))[0].fragmented);  // different cache

    one(net, 1, ProbeRequest::ptb(solo, 1280));
    CHECK(one(net, 1, ProbeRequest::echo(solo, 1300))[0].fragmented);
    CHECK(!one(net, 1, ProbeRequest::echo(other, 1300))[0].fragmented);  // singleton stays alone
}

TEST_CASE("plain hosts keep their own PMTU cache") {
    SimNet net(basic());
    Addr128 h1 = parse_addr("2001:db8::1");
    one(net, 2, ProbeRequest::ptb(h1, 1280));
    CHECK(one(net, 2, ProbeRequest::echo(h1, 1300))[0].fragmented);
    CHECK(!one(net, 3, ProbeRequest::echo(h1, 1300))[0].fragmented);
}

TEST_CASE("injector forges answers for blocked names and silences the rest") {
    Scenario sc = Scenario::parse(
        "seed 5\n"
        "host 2001:db8:dead::5 tcp80,udp53 dns=valid\n"
        "host 2001:db8::1 udp53 dns=valid\n"
        "injector replies=3\n"
        "covered 2001:db8:dead::/48\n"
        "blocked www.example.com\n"
        "answer a 31.13.64.1\n"
        "answer aaaa 2001:0:4136:e378::1\n");
    SimNet net(sc);

    // dead covered address: three forged replies, one record each
    Addr128 dead = parse_addr("2001:db8:dead::1234");
    auto forged = one(net, 1, ProbeRequest::dns(dead, "www.example.com"));
    REQUIRE(forged.size() == 3);
    for (std::size_t i = 0; i < forged.size(); ++i) {
        CHECK(forged[i].kind == ResponseKind::dns_reply);
        CHECK(forged[i].rcode == 0);
        CHECK(forged[i].answers.size() == 1);
        CHECK(forged[i].arrival_index == static_cast<int>(i));
        bool from_pool = forged[i].answers[0] == ResourceRecord::a(0x1f0d4001) ||
                         forged[i].answers[0] == ResourceRecord::aaaa(parse_addr("2001:0:4136:e378::1"));
        CHECK(from_pool);
    }

    // non-blocked name through the injector: silence, not even an error
    CHECK(one(net, 1, ProbeRequest::dns(dead, "other.example"))[0].kind == ResponseKind::timeout);

    // coverage shadows the genuine resolver behind it
    Addr128 covered_host = parse_addr("2001:db8:dead::5");
    auto shadowed = one(net, 1, ProbeRequest::dns(covered_host, "www.example.com"));
    CHECK(shadowed.size() == 3);
    CHECK(one(net, 1, ProbeRequest::dns(covered_host, "clean.example"))[0].kind ==
          ResponseKind::timeout);
    // ...but only for DNS: TCP still reaches the host
    CHECK(one(net, 1, ProbeRequest::syn(covered_host, 80))[0].kind == ResponseKind::tcp_synack);

    // uncovered host answers genuinely
    auto genuine = one(net, 1, ProbeRequest::dns(parse_addr("2001:db8::1"), "www.example.com"));
    REQUIRE(genuine.size() == 1);
    CHECK(genuine[0].answers[0].type == RrType::aaaa);
    CHECK(genuine[0].answers[0].aaaa_data == parse_addr("2001:db8::1"));
}

TEST_CASE("injected replies are deterministic") {
    Scenario sc = Scenario::parse(
        "injector replies=2\n"
        "covered 2001:db8::/64\n"
        "blocked b.example\n"
        "answer a 1.1.1.1\n"
        "answer a 2.2.2.2\n"
        "answer a 3.3.3.3\n");
    SimNet net1(sc), net2(sc);
    for (int i = 0; i < 20; ++i) {
        Addr128 t(parse_addr("2001:db8::").value() | static_cast<uint128>(i));
        auto r1 = one(net1, 4, ProbeRequest::dns(t, "b.example"));
        auto r2 = one(net2, 4, ProbeRequest::dns(t, "b.example"));
        REQUIRE(r1.size() == r2.size());
        for (std::size_t k = 0; k < r1.size(); ++k)
            CHECK(r1[k].answers[0] == r2[k].answers[0]);
    }
}

TEST_CASE("loss drops replies deterministically and only replies") {
    Scenario sc = Scenario::parse(
        "seed 11\n"
        "loss 0.5\n"
        "aliased 2001:db8:a::/64 single_host icmp\n");
    SimNet net1(sc), net2(sc);

    int lost = 0, answered = 0;
    for (int i = 0; i < 2000; ++i) {
        Addr128 t(parse_addr("2001:db8:a::").value() | static_cast<uint128>(i));
        auto r1 = one(net1, 1, ProbeRequest::echo(t));
        auto r2 = one(net2, 1, ProbeRequest::echo(t));
        REQUIRE(r1.size() == r2.size());
        CHECK(r1[0].kind == r2[0].kind);
        (r1[0].kind == ResponseKind::timeout ? lost : answered)++;
    }
    CHECK(lost > 800);   // ~1000 expected
    CHECK(lost < 1200);
    CHECK(answered > 800);

    // loss never suppresses the PTB side effect (it rides the request path)
    Addr128 a = parse_addr("2001:db8:a::1");
    one(net1, 2, ProbeRequest::ptb(a, 1280));
    bool saw_fragmented = false;
    for (int i = 0; i < 64 && !saw_fragmented; ++i) {
        Addr128 t(parse_addr("2001:db8:a::100").value() | static_cast<uint128>(i));
        auto r = one(net1, 2, ProbeRequest::echo(t, 1300));
        if (r[0].kind == ResponseKind::echo_reply) {
            CHECK(r[0].fragmented);
            saw_fragmented = true;
        }
    }
    CHECK(saw_fragmented);
}

TEST_CASE("zero loss means every in-scenario target answers") {
    SimNet net(basic());
    for (const auto& h : net.scenario().hosts) {
        for (Protocol p : kAllProtocols) {
            if (!h.protocols.contains(p)) continue;
            ProbeRequest req = p == Protocol::icmp    ? ProbeRequest::echo(h.addr)
                               : p == Protocol::tcp80 ? ProbeRequest::syn(h.addr, 80)
                               : p == Protocol::tcp443 ? ProbeRequest::syn(h.addr, 443)
                               : p == Protocol::udp53 ? ProbeRequest::dns(h.addr, "q.example")
                                                      : ProbeRequest::quic(h.addr);
            CHECK(one(net, 9, req)[0].responsive());
        }
    }
}

TEST_CASE("cpe fleets rotate deterministically") {
    Scenario sc = Scenario::parse(
        "seed 3\n"
        "fleet rotation=2\n"
        "mac 00:11:22:33:44:55\n"
        "mac 66:77:88:99:aa:bb\n"
        "pool 2001:db8:1::/64\n"
        "pool 2001:db8:2::/64\n"
        "pool 2001:db8:3::/64\n");
    SimNet net(sc);

    auto a0 = net.cpe_assignments(0);
    auto a1 = net.cpe_assignments(1);
    REQUIRE(a0.size() == 2);
    // stable within a rotation period
    for (std::size_t i = 0; i < a0.size(); ++i) {
        CHECK(a0[i].second == a1[i].second);
        // assigned address embeds the MAC
        auto mac = eui64_extract(a0[i].second);
        REQUIRE(mac.has_value());
        CHECK(*mac == a0[i].first);
    }
    // identical engine instance recomputes identically
    SimNet net2(sc);
    auto b0 = net2.cpe_assignments(0);
    for (std::size_t i = 0; i < a0.size(); ++i) CHECK(b0[i].second == a0[i].second);

    // across epochs the pool draw changes eventually
    bool moved = false;
    for (std::uint32_t scan = 2; scan < 40 && !moved; scan += 2)
        if (net.cpe_assignments(scan)[0].second != a0[0].second) moved = true;
    CHECK(moved);

    // CPEs answer ICMP echoes only
    Addr128 cpe = a0[0].second;
    CHECK(one(net, 0, ProbeRequest::echo(cpe))[0].kind == ResponseKind::echo_reply);
    CHECK(one(net, 0, ProbeRequest::syn(cpe, 80))[0].kind == ResponseKind::timeout);
    CHECK(one(net, 0, ProbeRequest::dns(cpe, "q.example"))[0].kind == ResponseKind::timeout);
    // after rotation the old address goes dark (if it moved)
    std::uint32_t moved_scan = 0;
    for (std::uint32_t scan = 2; scan < 40; scan += 2) {
        if (net.cpe_assignments(scan)[0].second != a0[0].second) {
            moved_scan = scan;
            break;
        }
    }
    if (moved_scan != 0)
        CHECK(one(net, moved_scan, ProbeRequest::echo(cpe))[0].kind == ResponseKind::timeout);
}

TEST_CASE("multi_host persona variation") {
    Scenario sc = Scenario::parse(
        "aliased 2001:db8:1::/64 multi_host tcp443 vary=window window=1000\n"
        "aliased 2001:db8:2::/64 multi_host tcp443 vary=options options=mss-ws\n"
        "aliased 2001:db8:3::/64 single_host tcp443 window=1000 options=mss-ws\n");
    SimNet net(sc);

    auto w1 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:1::a"), 443))[0].tcp;
    auto w2 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:1::b"), 443))[0].tcp;
    CHECK(w1.window != w2.window);
    CHECK(w1.options_order == w2.options_order);
    CHECK(w1.ttl == w2.ttl);

    auto o1 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:2::a"), 443))[0].tcp;
    auto o2 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:2::c"), 443))[0].tcp;
    CHECK(o1.options_order != o2.options_order);

    auto s1 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:3::a"), 443))[0].tcp;
    auto s2 = one(net, 1, ProbeRequest::syn(parse_addr("2001:db8:3::b"), 443))[0].tcp;
    CHECK(s1 == s2);
}

TEST_CASE("request log records probes in order when enabled") {
    SimNet net(basic());
    Addr128 a = parse_addr("2001:db8::1");

    one(net, 1, ProbeRequest::echo(a));
    CHECK(net.request_log().empty());  // off by default

    net.set_request_logging(true);
    one(net, 1, ProbeRequest::echo(a, 1300));
    one(net, 1, ProbeRequest::ptb(a, 1280));
    one(net, 2, ProbeRequest::syn(a, 80));
    auto log = net.request_log();
    REQUIRE(log.size() == 3);
    CHECK(log[0].request.kind == ProbeKind::echo);
    CHECK(log[0].scan_id == 1);
    CHECK(log[1].request.kind == ProbeKind::ptb);
    CHECK(log[2].request.kind == ProbeKind::syn);
    CHECK(log[2].scan_id == 2);

    net.clear_request_log();
    CHECK(net.request_log().empty());
}

TEST_CASE("replay determinism over a mixed probe sequence") {
    Scenario sc = Scenario::parse(
        "seed 21\n"
        "loss 0.3\n"
        "host 2001:db8::1 icmp,tcp80,udp53\n"
        "aliased 2001:db8:a::/64 single_host icmp,udp53\n"
        "injector replies=2\n"
        "covered 2001:db8:bad::/48\n"
        "blocked x.example\n"
        "answer a 9.9.9.9\n");
    SimNet n1(sc), n2(sc);

    CounterRng rng;
    rng.mix(std::string_view("replay"));
    for (int i = 0; i < 500; ++i) {
        std::uint32_t scan = static_cast<std::uint32_t>(rng.next_below(3));
        Addr128 t;
        switch (rng.next_below(3)) {
            case 0: t = parse_addr("2001:db8::1"); break;
            case 1: t = Addr128(parse_addr("2001:db8:a::").value() | rng.next_bits(16)); break;
            default: t = Addr128(parse_addr("2001:db8:bad::").value() | rng.next_bits(16)); break;
        }
        ProbeRequest req = [&] {
            switch (rng.next_below(4)) {
                case 0: return ProbeRequest::echo(t, 1300);
                case 1: return ProbeRequest::syn(t, 80);
                case 2: return ProbeRequest::dns(t, "x.example");
                default: return ProbeRequest::ptb(t, 1280);
            }
        }();
        auto r1 = n1.probe(scan, req);
        auto r2 = n2.probe(scan, req);
        REQUIRE(r1.size() == r2.size());
        for (std::size_t k = 0; k < r1.size(); ++k) {
            CHECK(r1[k].kind == r2[k].kind);
            CHECK(r1[k].fragmented == r2[k].fragmented);
            CHECK(r1[k].answers.size() == r2[k].answers.size());
        }
    }
}
