#include <doctest.h>

#include <sstream>

#include "hitlist/gfw.hpp"
#include "hitlist/simnet.hpp"
#include "hitlist/util.hpp"
#include "test_helpers.hpp"

using namespace hitlist;

namespace {

ProbeResponse reply_aaaa(Addr128 a, int rcode = 0) {
    return ProbeResponse::dns(rcode, {ResourceRecord::aaaa(a)});
}

DnsClass classify(const std::vector<ProbeResponse>& rs) {
    return classify_dns_response("www.example.com", rs).cls;
}

}  // namespace

TEST_CASE("single genuine AAAA reply is valid") {
    auto v = classify_dns_response("q.example", {reply_aaaa(parse_addr("2001:db8::1"))});
    CHECK(v.cls == DnsClass::valid_aaaa);
    REQUIRE(v.evidence.size() == 1);
    CHECK(v.evidence[0].aaaa_data == parse_addr("2001:db8::1"));
}

TEST_CASE("A answers to an AAAA query mean injection") {
    auto v = classify_dns_response(
        "q.example", {ProbeResponse::dns(0, {ResourceRecord::a(0x1f0d4001)})});  // 31.13.64.1
    CHECK(v.cls == DnsClass::injected_a_record);
    REQUIRE(v.evidence.size() == 1);
    CHECK(v.evidence[0].type == RrType::a);
}

TEST_CASE("Teredo AAAA answers mean injection") {
    auto v = classify_dns_response("q.example", {reply_aaaa(parse_addr("2001:0:4136:e378::"))});
    CHECK(v.cls == DnsClass::injected_teredo);
    // boundary: first address outside the /32 is genuine again
    CHECK(classify({reply_aaaa(parse_addr("2001:1::"))}) == DnsClass::valid_aaaa);
    CHECK(classify({reply_aaaa(parse_addr("2001:0:ffff:ffff:ffff:ffff:ffff:ffff"))}) ==
          DnsClass::injected_teredo);
}

TEST_CASE("several replies for one query mean injection") {
    auto one = reply_aaaa(parse_addr("2001:db8::1"));
    auto two = reply_aaaa(parse_addr("2001:db8::2"));
    CHECK(classify({one, two}) == DnsClass::injected_multi);
    // a timeout alongside one reply is not multiplicity
    CHECK(classify({one, ProbeResponse::timeout()}) == DnsClass::valid_aaaa);
}

TEST_CASE("specific injection evidence outranks multiplicity") {
    auto teredo = reply_aaaa(parse_addr("2001:0:1::1"));
    auto a_rec = ProbeResponse::dns(0, {ResourceRecord::a(1)});
    auto clean = reply_aaaa(parse_addr("2001:db8::1"));

    CHECK(classify({clean, teredo}) == DnsClass::injected_teredo);
    CHECK(classify({clean, a_rec}) == DnsClass::injected_a_record);
    CHECK(classify({teredo, a_rec}) == DnsClass::injected_teredo);

    // multi evidence keeps every answer seen
    auto v = classify_dns_response("q", {clean, reply_aaaa(parse_addr("2001:db8::2"))});
    CHECK(v.cls == DnsClass::injected_multi);
    CHECK(v.evidence.size() == 2);
}

TEST_CASE("reply shapes without injection evidence") {
    CHECK(classify({ProbeResponse::dns(3, {})}) == DnsClass::error_status);
    CHECK(classify({ProbeResponse::dns(0, {}, /*referral=*/true)}) == DnsClass::referral);
    // an error status outranks a referral flag on the same reply
    CHECK(classify({ProbeResponse::dns(5, {}, true)}) == DnsClass::error_status);
    // rcode 0, nothing useful in it
    CHECK(classify({ProbeResponse::dns(0, {})}) == DnsClass::incorrect_other);
    CHECK(classify({ProbeResponse::dns(0, {ResourceRecord::ns("ns1.example")})}) ==
          DnsClass::incorrect_other);
    CHECK(classify({ProbeResponse::timeout()}) == DnsClass::incorrect_other);
    CHECK(classify({ProbeResponse::timeout(), ProbeResponse::timeout()}) ==
          DnsClass::incorrect_other);
}

TEST_CASE("control-domain expectation demotes wrong answers") {
    Addr128 expected = parse_addr("2001:db8::53");
    auto right = classify_dns_response("ctrl.example", {reply_aaaa(expected)}, expected);
    CHECK(right.cls == DnsClass::valid_aaaa);
    auto wrong =
        classify_dns_response("ctrl.example", {reply_aaaa(parse_addr("2001:db8::54"))}, expected);
    CHECK(wrong.cls == DnsClass::incorrect_other);
}

TEST_CASE("classify rejects bad input") {
    CHECK_THROWS_AS(classify_dns_response("q", {}), std::invalid_argument);
    CHECK_THROWS_AS(classify_dns_response("q", {ProbeResponse::echo()}), std::invalid_argument);
}

TEST_CASE("class names round-trip") {
    for (auto c : {DnsClass::valid_aaaa, DnsClass::error_status, DnsClass::referral,
                   DnsClass::injected_a_record, DnsClass::injected_teredo,
                   DnsClass::injected_multi, DnsClass::incorrect_other}) {
        auto back = dns_class_from_name(dns_class_name(c));
        REQUIRE(back.has_value());
        CHECK(*back == c);
        bool one_side = is_injected(c) != is_retained(c) || c == DnsClass::incorrect_other;
        CHECK(one_side);
    }
    CHECK(!dns_class_from_name("bogus"));
}

namespace {

ScanRecord make_record(std::vector<Addr128> probed,
                       std::vector<Addr128> udp53,
                       std::vector<Addr128> icmp = {}) {
    ScanRecord rec;
    rec.scan_id = 1;
    rec.date = 20300;
    sort_unique(probed);
    sort_unique(udp53);
    sort_unique(icmp);
    rec.probed = std::move(probed);
    rec.responsive(Protocol::udp53) = std::move(udp53);
    rec.responsive(Protocol::icmp) = std::move(icmp);
    rec.validate();
    return rec;
}

}  // namespace

TEST_CASE("clean_scan drops injected UDP53 entries and nothing else") {
    Addr128 a = parse_addr("2001:db8::a");
    Addr128 b = parse_addr("2001:db8::b");
    ScanRecord rec = make_record({a, b}, {a, b}, {a});

    VerdictMap verdicts;
    verdicts[a] = {DnsClass::injected_teredo, {}};
    verdicts[b] = {DnsClass::valid_aaaa, {}};

    ScanRecord cleaned = clean_scan(rec, verdicts);
    CHECK(cleaned.responsive(Protocol::udp53) == std::vector<Addr128>{b});
    // the injected address keeps its ICMP responsiveness
    CHECK(cleaned.responsive(Protocol::icmp) == std::vector<Addr128>{a});
    CHECK(cleaned.probed == rec.probed);
    cleaned.validate();

    SUBCASE("error and referral verdicts are retained") {
        verdicts[a] = {DnsClass::error_status, {}};
        verdicts[b] = {DnsClass::referral, {}};
        CHECK(clean_scan(rec, verdicts).responsive(Protocol::udp53) == rec.responsive(Protocol::udp53));
    }
    SUBCASE("all-valid input passes through unchanged") {
        verdicts[a] = {DnsClass::valid_aaaa, {}};
        ScanRecord same = clean_scan(rec, verdicts);
        CHECK(same.responsive(Protocol::udp53) == rec.responsive(Protocol::udp53));
    }
    SUBCASE("missing verdict is an error") {
        verdicts.erase(b);
        CHECK_THROWS_AS(clean_scan(rec, verdicts), std::runtime_error);
    }
    SUBCASE("verdicts for non-responsive addresses are ignored") {
        verdicts[parse_addr("2001:db8::c")] = {DnsClass::injected_multi, {}};
        CHECK_NOTHROW(clean_scan(rec, verdicts));
    }
}

TEST_CASE("taint only ever switches on") {
    Addr128 a = parse_addr("2001:db8::a");
    TaintState taint;
    CHECK(!taint.filtered(a));

    VerdictMap verdicts;
    verdicts[a] = {DnsClass::injected_a_record, {}};
    update_taint(taint, make_record({a}, {a}), verdicts);
    CHECK(taint.filtered(a));
    CHECK(taint.filter_list() == std::vector<Addr128>{a});

    // a later ICMP answer clears the address for good
    verdicts[a] = {DnsClass::injected_a_record, {}};
    update_taint(taint, make_record({a}, {a}, {a}), verdicts);
    CHECK(!taint.filtered(a));
    CHECK(taint.ever_injected(a));
    CHECK(taint.ever_other_responsive(a));
    CHECK(taint.filter_list().empty());

    // more injections afterwards cannot re-filter it
    update_taint(taint, make_record({a}, {a}), verdicts);
    CHECK(!taint.filtered(a));

    // a never-injected address stays unfiltered no matter what
    Addr128 b = parse_addr("2001:db8::b");
    VerdictMap clean;
    clean[b] = {DnsClass::valid_aaaa, {}};
    update_taint(taint, make_record({b}, {b}), clean);
    CHECK(!taint.filtered(b));
    CHECK(!taint.ever_injected(b));
}

TEST_CASE("filter_list is sorted") {
    TaintState taint;
    taint.note_injected(parse_addr("2001:db8::9"));
    taint.note_injected(parse_addr("2001:db8::1"));
    taint.note_injected(parse_addr("2001:db8::5"));
    auto list = taint.filter_list();
    REQUIRE(list.size() == 3);
    CHECK(std::is_sorted(list.begin(), list.end()));
}

TEST_CASE("historical_clean maps clean_scan across a series") {
    Addr128 a = parse_addr("2001:db8::a");
    Addr128 b = parse_addr("2001:db8::b");
    std::vector<ScanRecord> recs;
    for (std::uint32_t id = 1; id <= 3; ++id) {
        ScanRecord r = make_record({a, b}, {a, b});
        r.scan_id = id;
        recs.push_back(r);
    }

    std::map<std::uint32_t, VerdictMap> verdicts;
    for (std::uint32_t id = 1; id <= 3; ++id) {
        verdicts[id][a] = {DnsClass::injected_multi, {}};
        verdicts[id][b] = {DnsClass::valid_aaaa, {}};
    }

    auto cleaned = historical_clean(recs, verdicts);
    REQUIRE(cleaned.size() == 3);
    for (const auto& r : cleaned) CHECK(r.responsive(Protocol::udp53) == std::vector<Addr128>{b});

    SUBCASE("no injections leaves the series untouched") {
        for (std::uint32_t id = 1; id <= 3; ++id) verdicts[id][a] = {DnsClass::valid_aaaa, {}};
        auto same = historical_clean(recs, verdicts);
        for (std::size_t i = 0; i < recs.size(); ++i)
            CHECK(same[i].responsive(Protocol::udp53) == recs[i].responsive(Protocol::udp53));
    }
    SUBCASE("a scan without UDP53 responders needs no verdicts") {
        ScanRecord quiet = make_record({a}, {});
        quiet.scan_id = 9;
        recs.push_back(quiet);
        CHECK_NOTHROW(historical_clean(recs, verdicts));
    }
    SUBCASE("a scan with responders and no verdicts is rejected") {
        verdicts.erase(2);
        CHECK_THROWS_AS(historical_clean(recs, verdicts), std::runtime_error);
    }
}

TEST_CASE("verdict csv round-trips") {
    VerdictMap verdicts;
    verdicts[parse_addr("2001:db8::2")] = {DnsClass::injected_teredo,
                                           {ResourceRecord::aaaa(parse_addr("2001:0::1"))}};
    verdicts[parse_addr("2001:db8::1")] = {DnsClass::valid_aaaa, {}};

    std::ostringstream s;
    write_verdict_csv(s, verdicts);
    CHECK(s.str() ==
          "addr,class\n"
          "2001:db8::1,valid_aaaa\n"
          "2001:db8::2,injected_teredo\n");

    testing::TempDir dir;
    auto file = dir.file("verdicts.csv");
    write_verdict_csv(file, verdicts);
    VerdictMap back = load_verdict_csv(file);
    REQUIRE(back.size() == 2);
    CHECK(back.at(parse_addr("2001:db8::1")).cls == DnsClass::valid_aaaa);
    CHECK(back.at(parse_addr("2001:db8::2")).cls == DnsClass::injected_teredo);
    CHECK(back.at(parse_addr("2001:db8::2")).evidence.empty());  // not persisted

    CHECK_THROWS(load_verdict_csv(dir.write("bad1.csv", "addr,class\nnot-an-addr,valid_aaaa\n")));
    CHECK_THROWS(load_verdict_csv(dir.write("bad2.csv", "addr,class\n2001:db8::1,wat\n")));
    CHECK_THROWS(load_verdict_csv(dir.write("bad3.csv", "2001:db8::1,valid_aaaa\n")));
}

// End to end against the simulator: probe everything, classify the DNS
// replies, and check the resulting filter equals the ground truth the
// scenario dictates — covered, blocked-name-probed addresses that never
// answered anything else.
TEST_CASE("simulated run produces the expected filter set") {
    Scenario sc = Scenario::parse(
        "seed 17\n"
        "host 2001:db8:bad::53 udp53 dns=valid\n"        // genuine resolver, but covered
        "host 2001:db8:bad::80 tcp80\n"                  // web server inside covered space
        "host 2001:db8::53 udp53 dns=valid\n"            // genuine resolver outside
        "host 2001:db8::1 icmp\n"
        "injector replies=2\n"
        "covered 2001:db8:bad::/48\n"
        "blocked www.google.com\n"
        "answer a 31.13.64.1\n"
        "answer aaaa 2001:0:4136:e378::1\n");
    SimNet net(sc);

    std::vector<Addr128> targets = {
        parse_addr("2001:db8:bad::53"), parse_addr("2001:db8:bad::80"),
        parse_addr("2001:db8:bad::dead"),  // covered, otherwise silent
        parse_addr("2001:db8::53"),        parse_addr("2001:db8::1"),
        parse_addr("2001:db8::ffff"),      // uncovered, silent
    };
    sort_unique(targets);

    TaintState taint;
    std::vector<ScanRecord> raw_series;
    std::map<std::uint32_t, VerdictMap> verdicts_by_scan;
    for (std::uint32_t scan = 1; scan <= 5; ++scan) {
        ScanRecord rec;
        rec.scan_id = scan;
        rec.date = 20000 + scan;
        rec.probed = targets;
        VerdictMap verdicts;
        for (Addr128 t : targets) {
            auto add = [&](Protocol p, const std::vector<ProbeResponse>& rs) {
                for (const auto& r : rs)
                    if (r.responsive()) {
                        rec.responsive(p).push_back(t);
                        return;
                    }
            };
            add(Protocol::icmp, net.probe(scan, ProbeRequest::echo(t)));
            add(Protocol::tcp80, net.probe(scan, ProbeRequest::syn(t, 80)));
            add(Protocol::tcp443, net.probe(scan, ProbeRequest::syn(t, 443)));
            auto dns = net.probe(scan, ProbeRequest::dns(t, std::string(kDefaultGfwQname)));
            add(Protocol::udp53, dns);
            bool responded = false;
            for (const auto& r : dns) responded |= r.responsive();
            if (responded) verdicts[t] = classify_dns_response(kDefaultGfwQname, dns);
            add(Protocol::udp443, net.probe(scan, ProbeRequest::quic(t)));
        }
        rec.validate();
        update_taint(taint, rec, verdicts);
        raw_series.push_back(rec);
        verdicts_by_scan[scan] = std::move(verdicts);
    }

    // covered and otherwise silent: the truly-dead address and the genuine
    // resolver both read as injected; the web server answered TCP80
    std::vector<Addr128> expected = {parse_addr("2001:db8:bad::53"),
                                     parse_addr("2001:db8:bad::dead")};
    sort_unique(expected);
    CHECK(taint.filter_list() == expected);

    // cleaning the raw series leaves exactly the uncovered resolver
    auto cleaned = historical_clean(raw_series, verdicts_by_scan);
    for (const auto& rec : cleaned) {
        CHECK(rec.responsive(Protocol::udp53) == std::vector<Addr128>{parse_addr("2001:db8::53")});
        rec.validate();
    }
}
