#include <doctest.h>

#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hitlist/io.hpp"
#include "hitlist/pipeline.hpp"
#include "hitlist/rng.hpp"
#include "hitlist/simnet.hpp"
#include "hitlist/util.hpp"
#include "test_helpers.hpp"

using namespace hitlist;
using hitlist::testing::TempDir;

// ---------------------------------------------------------------------------
// stage ledger

TEST_CASE("ledger conservation holds exactly when the books balance and chain") {
    StageLedger good;
    good.blocklist = {9, 1, 8};
    good.gfw = {8, 1, 7};
    good.aliased = {7, 2, 5};
    good.thirty_day = {5, 0, 5};
    CHECK(good.conserved());
    CHECK(StageLedger{}.conserved());  // all zeros

    StageLedger leak = good;
    leak.aliased.output = 6;  // 7 − 2 ≠ 6
    CHECK(!leak.conserved());

    StageLedger gap = good;
    gap.thirty_day.input = 6;  // doesn't chain from aliased.output
    CHECK(!gap.conserved());

    StageLedger negative = good;
    negative.gfw = {3, 5, 0};  // removed more than came in
    CHECK(!negative.conserved());
}

TEST_CASE("ledger CSV is written in pipeline order and round-trips") {
    StageLedger ledger;
    ledger.blocklist = {9, 1, 8};
    ledger.gfw = {8, 1, 7};
    ledger.aliased = {7, 2, 5};
    ledger.thirty_day = {5, 1, 4};

    std::ostringstream out;
    ledger.write_csv(out);
    CHECK(out.str() ==
          "stage,input,removed,output\n"
          "blocklist,9,1,8\n"
          "gfw,8,1,7\n"
          "aliased,7,2,5\n"
          "thirty_day,5,1,4\n");

    TempDir tmp;
    ledger.write_csv(tmp.file("ledger.csv"));
    StageLedger back = StageLedger::load_csv(tmp.file("ledger.csv"));
    CHECK(back.conserved());
    CHECK(back.blocklist.input == 9);
    CHECK(back.gfw.removed == 1);
    CHECK(back.aliased.output == 5);
    CHECK(back.thirty_day.removed == 1);
}

TEST_CASE("ledger CSV load rejects malformed input") {
    TempDir tmp;
    CHECK_THROWS_AS(StageLedger::load_csv(tmp.write("h.csv", "a,b,c,d\nblocklist,1,0,1\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(StageLedger::load_csv(tmp.write(
                        "stage.csv", "stage,input,removed,output\nteleport,1,0,1\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(StageLedger::load_csv(tmp.write(
                        "fields.csv", "stage,input,removed,output\nblocklist,1,0\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(StageLedger::load_csv(tmp.write("empty.csv", "# nothing\n")),
                    std::runtime_error);
}

// ---------------------------------------------------------------------------
// churn

namespace {

ScanRecord record_with(std::uint32_t scan_id, const std::vector<Addr128>& probed,
                       const std::vector<Addr128>& responsive) {
    ScanRecord r;
    r.scan_id = scan_id;
    r.date = scan_id;
    r.probed = probed;
    r.responsive(Protocol::icmp) = responsive;
    return r;
}

}  // namespace

TEST_CASE("churn splits gained addresses into first-timers and returners") {
    const Addr128 a = parse_addr("2001:db8::a");
    const Addr128 b = parse_addr("2001:db8::b");
    const Addr128 c = parse_addr("2001:db8::c");
    const Addr128 d = parse_addr("2001:db8::d");
    const std::vector<Addr128> all = {a, b, c, d};

    // prev: {a, b}; cur: {a, c, d}; c answered once long ago, d is brand new
    ScanRecord prev = record_with(4, all, {a, b});
    ScanRecord cur = record_with(5, all, {a, c, d});
    ChurnReport r = churn(prev, cur, {a, b, c});

    CHECK(r.new_ever == 1);   // d
    CHECK(r.recurring == 1);  // c
    CHECK(r.lost == 1);       // b

    CHECK_THROWS_AS(churn(cur, prev, {}), std::invalid_argument);
    CHECK_THROWS_AS(churn(prev, prev, {}), std::invalid_argument);
}

TEST_CASE("incremental churn agrees with from-scratch recomputation") {
    std::vector<Addr128> pool;
    const Addr128 base = parse_addr("2001:db8:feed::");
    for (int i = 0; i < 40; ++i) pool.push_back(Addr128(base.value() + i));

    for (int history = 0; history < 100; ++history) {
        CounterRng rng;
        rng.mix(std::string_view("churn-history")).mix(static_cast<std::uint64_t>(history));

        std::vector<ScanRecord> recs;
        std::vector<std::vector<Addr128>> resp;  // responsive_any per scan
        for (std::uint32_t s = 1; s <= 10; ++s) {
            ScanRecord r;
            r.scan_id = s;
            r.date = s;
            r.probed = pool;
            for (Addr128 a : pool) {
                if (rng.next() % 2) r.responsive(Protocol::icmp).push_back(a);
                if (rng.next() % 4 == 0) r.responsive(Protocol::tcp80).push_back(a);
            }
            r.validate();
            recs.push_back(r);
            resp.push_back(r.responsive_any());
        }

        std::vector<Addr128> ever;  // maintained the way the pipeline does
        for (std::size_t i = 1; i < recs.size(); ++i) {
            ever = sorted_union(ever, resp[i - 1]);
            ChurnReport got = churn(recs[i - 1], recs[i], ever);

            std::set<Addr128> before(resp[0].begin(), resp[0].end());
            for (std::size_t j = 1; j < i; ++j) before.insert(resp[j].begin(), resp[j].end());
            std::set<Addr128> prev_set(resp[i - 1].begin(), resp[i - 1].end());
            std::set<Addr128> cur_set(resp[i].begin(), resp[i].end());

            std::uint64_t new_ever = 0, recurring = 0, lost = 0;
            for (Addr128 a : resp[i])
                if (!prev_set.count(a)) (before.count(a) ? recurring : new_ever) += 1;
            for (Addr128 a : resp[i - 1])
                if (!cur_set.count(a)) lost += 1;

            CHECK(got.new_ever == new_ever);
            CHECK(got.recurring == recurring);
            CHECK(got.lost == lost);
        }
    }
}

// ---------------------------------------------------------------------------
// scan calendar

TEST_CASE("calendar enforces monotone ids and dates") {
    ScanCalendar cal;
    CHECK(!cal.last_scan().has_value());

    cal.add(3, parse_iso_date("2024-01-05"));
    cal.add(4, parse_iso_date("2024-01-05"));  // same-day re-scan is fine
    cal.add(7, parse_iso_date("2024-02-01"));
    CHECK(*cal.last_scan() == 7);
    CHECK(*cal.date_of(3) == parse_iso_date("2024-01-05"));
    CHECK(!cal.date_of(5).has_value());

    CHECK_THROWS_AS(cal.add(7, parse_iso_date("2024-03-01")), std::invalid_argument);
    CHECK_THROWS_AS(cal.add(2, parse_iso_date("2024-03-01")), std::invalid_argument);
    CHECK_THROWS_AS(cal.add(9, parse_iso_date("2024-01-31")), std::invalid_argument);
}

TEST_CASE("calendar persists as scan_id<TAB>ISO-date rows") {
    TempDir tmp;
    ScanCalendar cal;
    cal.add(1, parse_iso_date("2024-01-05"));
    cal.add(2, parse_iso_date("2024-01-12"));
    cal.save(tmp.file("calendar.tsv"));
    CHECK(read_whole_file(tmp.file("calendar.tsv")) == "1\t2024-01-05\n2\t2024-01-12\n");

    ScanCalendar back = ScanCalendar::load(tmp.file("calendar.tsv"));
    CHECK(back.entries() == cal.entries());

    CHECK_THROWS_AS(ScanCalendar::load(tmp.write("bad.tsv", "1\t2024-01-05\textra\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(ScanCalendar::load(tmp.write("order.tsv", "2\t2024-01-05\n1\t2024-01-06\n")),
                    std::invalid_argument);
}

// ---------------------------------------------------------------------------
// blocklist and staleness stages

TEST_CASE("apply_blocklist partitions around the excluded prefixes") {
    const Addr128 in1 = parse_addr("2001:db8::1");
    const Addr128 out1 = parse_addr("2001:db8:bad::1");
    const Addr128 in2 = parse_addr("2001:db9::1");
    auto [kept, removed] =
        apply_blocklist({in1, out1, in2}, {Prefix::parse("2001:db8:bad::/48")});
    CHECK(kept == std::vector<Addr128>{in1, in2});
    CHECK(removed == std::vector<Addr128>{out1});
}

namespace {

/// store with one address per scenario row: (first_seen, probed?, responsive-at)
struct StaleFixture {
    CandidateStore store;
    ScanCalendar calendar;

    StaleFixture() {
        calendar.add(1, parse_iso_date("2024-01-01"));
        calendar.add(2, parse_iso_date("2024-01-10"));
        calendar.add(3, parse_iso_date("2024-02-15"));
    }

    Addr128 address(int i) const { return Addr128(parse_addr("2001:db8::").value() + i); }

    Addr128 add(int i, std::uint32_t first_seen, std::optional<std::uint32_t> probed,
                std::optional<std::uint32_t> responsive) {
        Addr128 a = address(i);
        store.ingest({a}, "x", first_seen);
        if (probed) store.note_probed(a, *probed);
        if (responsive) store.note_responsive(a, Protocol::icmp, *responsive);
        return a;
    }
};

}  // namespace

TEST_CASE("staleness filter drops only confirmed-silent, anchored-long-ago addresses") {
    StaleFixture fx;
    // now = scan 4 on 2024-02-20; stale horizon 30 days, re-admission off
    const std::int64_t now = parse_iso_date("2024-02-20");

    Addr128 fresh_resp = fx.add(0, 1, 3, 3);     // answered in the latest probe
    Addr128 old_resp = fx.add(1, 1, 3, 1);       // silent for 50 days, probed since
    Addr128 never_resp = fx.add(2, 1, 3, {});    // arrived 50 days ago, never answered
    Addr128 never_probed = fx.add(3, 1, {}, {});
    Addr128 unconfirmed = fx.add(4, 1, 2, 2);    // stale date but not probed since
    Addr128 recent_anchor = fx.add(5, 1, 3, 2);  // anchored 41 days back, probed since
    Addr128 pre_calendar = fx.add(6, 0, 3, {});  // anchor scan unknown to the calendar

    ThirtyDaySplit split = thirty_day_filter(fx.store, fx.store.addresses(), 4, now,
                                             fx.calendar, 30, 0);
    CHECK(split.targets ==
          std::vector<Addr128>{fresh_resp, never_probed, unconfirmed, pre_calendar});
    CHECK(split.excluded == std::vector<Addr128>{old_resp, never_resp, recent_anchor});

    CHECK_THROWS_AS(
        thirty_day_filter(fx.store, {parse_addr("::9")}, 4, now, fx.calendar, 30, 0),
        std::logic_error);
}

TEST_CASE("staleness boundary is strictly more than the horizon") {
    StaleFixture fx;
    Addr128 a = fx.add(0, 1, 3, 1);  // anchored at scan 1 = 2024-01-01

    auto excluded_on = [&](const char* date) {
        ThirtyDaySplit s =
            thirty_day_filter(fx.store, {a}, 4, parse_iso_date(date), fx.calendar, 30, 0);
        return s.targets.empty();
    };
    CHECK(!excluded_on("2024-01-31"));  // exactly 30 days: still targeted
    CHECK(excluded_on("2024-02-01"));   // 31 days: out
}

TEST_CASE("re-admission rotates every stale address back in once per cycle") {
    StaleFixture fx;
    std::vector<Addr128> stale;
    for (int i = 0; i < 8; ++i) stale.push_back(fx.add(i, 1, 3, 1));
    const std::int64_t now = parse_iso_date("2024-03-01");

    std::map<Addr128, int> times_targeted;
    for (std::uint32_t scan = 10; scan < 14; ++scan) {  // one full denominator-4 cycle
        ThirtyDaySplit s = thirty_day_filter(fx.store, stale, scan, now, fx.calendar, 30, 4);
        CHECK(s.targets.size() + s.excluded.size() == stale.size());
        for (Addr128 a : s.targets) times_targeted[a] += 1;
    }
    REQUIRE(times_targeted.size() == stale.size());
    for (const auto& [addr, n] : times_targeted) CHECK(n == 1);
}

// ---------------------------------------------------------------------------
// the full loop against the simulated network

namespace {

const char* kPipelineScenario =
    "seed 11\n"
    "host 2001:db8::1 icmp,tcp80\n"
    "host 2001:db8::2 udp53 dns=valid\n"
    "host 2001:db8::3 udp443\n"
    "host 2001:db8:b10c::1 icmp\n"
    "host 2001:db8:bad::53 udp53 dns=valid\n"
    "host 2001:db8:bad::80 tcp80,udp53 dns=valid\n"
    "aliased 2001:db8:aa::/64 single_host icmp,tcp80,tcp443,udp53,udp443\n"
    "injector replies=1\n"
    "covered 2001:db8:bad::/48\n"
    "blocked www.google.com\n"
    "answer a 31.13.64.1\n";

const std::vector<Addr128> kIngest = {
    parse_addr("2001:db8::1"),       parse_addr("2001:db8::2"),
    parse_addr("2001:db8::3"),       parse_addr("2001:db8::dead"),
    parse_addr("2001:db8:aa::1"),    parse_addr("2001:db8:aa::2"),
    parse_addr("2001:db8:bad::53"),  parse_addr("2001:db8:bad::80"),
    parse_addr("2001:db8:b10c::1"),
};

PipelineConfig pipeline_config(const std::filesystem::path& dir) {
    PipelineConfig cfg;
    cfg.state_dir = dir;
    cfg.seed = 11;
    cfg.readmit_denominator = 0;  // keep the staleness stage deterministic here
    cfg.rib.insert(Prefix::parse("2001:db8::/32"), 64500);
    return cfg;
}

const std::vector<Prefix> kBlocklist = {Prefix::parse("2001:db8:b10c::/48")};

/// delegates to a SimNet but gives out after a fixed number of probes
class FlakyEngine : public ProbeEngine {
public:
    FlakyEngine(Scenario sc, int budget) : inner_(std::move(sc)), remaining_(budget) {}

    std::vector<ProbeResponse> probe(std::uint32_t scan_id, const ProbeRequest& req) override {
        if (remaining_-- <= 0) throw std::runtime_error("probe engine fell over");
        return inner_.probe(scan_id, req);
    }
    bool paced() const override { return false; }

private:
    SimNet inner_;
    int remaining_;
};

}  // namespace

TEST_CASE("one scan flows through every stage with balanced books") {
    TempDir tmp;
    Pipeline pipe(pipeline_config(tmp.file("state")));
    pipe.ingest(kIngest, "seed", 1);

    SimNet net(Scenario::parse(kPipelineScenario));
    ScanOutcome out = pipe.run_scan(net, 1, parse_iso_date("2024-01-05"), kBlocklist);

    CHECK(out.ledger.conserved());
    CHECK(out.ledger.blocklist.input == 9);
    CHECK(out.ledger.blocklist.removed == 1);  // the b10c host
    CHECK(out.ledger.gfw.removed == 0);        // no taint on the first pass
    CHECK(out.ledger.aliased.removed == 2);    // both addresses inside the aliased /64
    CHECK(out.ledger.thirty_day.removed == 0);
    CHECK(out.ledger.thirty_day.output == 6);

    CHECK(out.aliased == std::vector<Prefix>{Prefix::parse("2001:db8:aa::/64")});
    CHECK(out.aliased_collapsed == out.aliased);
    CHECK(!out.churn.has_value());  // nothing to compare against yet

    // raw record still carries the injector's forged DNS "answers"
    const Addr128 resolver = parse_addr("2001:db8::2");
    const Addr128 covered_resolver = parse_addr("2001:db8:bad::53");
    const Addr128 covered_web = parse_addr("2001:db8:bad::80");
    CHECK(out.raw.responsive(Protocol::udp53) ==
          std::vector<Addr128>{resolver, covered_resolver, covered_web});
    CHECK(out.cleaned.responsive(Protocol::udp53) == std::vector<Addr128>{resolver});
    CHECK(out.cleaned.responsive(Protocol::icmp) == std::vector<Addr128>{parse_addr("2001:db8::1")});
    CHECK(out.cleaned.responsive(Protocol::tcp80) ==
          std::vector<Addr128>{parse_addr("2001:db8::1"), covered_web});
    CHECK(out.cleaned.responsive(Protocol::udp443) ==
          std::vector<Addr128>{parse_addr("2001:db8::3")});

    REQUIRE(out.verdicts.count(covered_resolver) == 1);
    CHECK(out.verdicts.at(covered_resolver).cls == DnsClass::injected_a_record);
    CHECK(out.verdicts.at(resolver).cls == DnsClass::valid_aaaa);

    // store reflects the scan: probes, life signs, taint
    CHECK(*pipe.store().find(resolver)->last_probed == 1);
    CHECK(!pipe.store().find(parse_addr("2001:db8:b10c::1"))->last_probed.has_value());
    CHECK(!pipe.store().find(parse_addr("2001:db8:aa::1"))->last_probed.has_value());
    CHECK(pipe.store().find(covered_resolver)->ever_injected);
    CHECK(pipe.store().find(covered_web)->ever_injected);
    CHECK(pipe.store().gfw_filter_list() == std::vector<Addr128>{covered_resolver});

    // artifacts on disk
    CHECK(std::filesystem::exists(pipe.record_path(1)));
    CHECK(std::filesystem::exists(pipe.raw_record_path(1)));
    CHECK(std::filesystem::exists(pipe.verdict_path(1)));
    CHECK(read_whole_file(tmp.file("state") / "aliased.txt") == "2001:db8:aa::/64\n");
    CHECK(read_whole_file(tmp.file("state") / "representatives.tsv") ==
          "2001:db8:aa::/64\t2001:db8:aa::1\n");
    CHECK(read_whole_file(tmp.file("state") / "gfw_filter.txt") == "2001:db8:bad::53\n");
    StageLedger reread = StageLedger::load_csv(pipe.ledger_path(1));
    CHECK(reread.blocklist.input == 9);
}

TEST_CASE("later scans apply the taint filter and the staleness horizon") {
    TempDir tmp;
    Pipeline pipe(pipeline_config(tmp.file("state")));
    pipe.ingest(kIngest, "seed", 1);

    SimNet net(Scenario::parse(kPipelineScenario));
    pipe.run_scan(net, 1, parse_iso_date("2024-01-05"), kBlocklist);
    ScanOutcome second = pipe.run_scan(net, 2, parse_iso_date("2024-01-12"), kBlocklist);

    // the covered resolver was injected-and-silent in scan 1, so it is gone now
    CHECK(second.ledger.gfw.removed == 1);
    CHECK(second.ledger.thirty_day.removed == 0);  // only a week has passed
    CHECK(second.ledger.conserved());
    REQUIRE(second.churn.has_value());
    CHECK(second.churn->new_ever == 0);  // lossless network, stable population
    CHECK(second.churn->lost == 0);

    // scan 3 happens 40 days after the ghost's only anchor (its arrival)
    ScanOutcome third = pipe.run_scan(net, 3, parse_iso_date("2024-02-14"), kBlocklist);
    CHECK(third.ledger.gfw.removed == 1);
    CHECK(third.ledger.aliased.removed == 2);
    CHECK(third.ledger.thirty_day.removed == 1);  // the never-responsive ghost
    CHECK(third.ledger.conserved());

    const Addr128 ghost = parse_addr("2001:db8::dead");
    CHECK(*pipe.store().find(ghost)->last_probed == 2);  // skipped in scan 3
    bool ghost_probed_in_3 = false;
    for (Addr128 a : third.cleaned.probed) ghost_probed_in_3 |= (a == ghost);
    CHECK(!ghost_probed_in_3);

    // live hosts keep their seats
    CHECK(*pipe.store().find(parse_addr("2001:db8::1"))->last_responsive[0] == 3);
    CHECK(pipe.records().size() == 3);
    CHECK(pipe.churn_history().size() == 2);
}

TEST_CASE("a reloaded pipeline continues exactly where the original would") {
    TempDir tmp;
    const auto continuous_dir = tmp.file("continuous");
    const auto staged_dir = tmp.file("staged");
    const std::int64_t d1 = parse_iso_date("2024-01-05");
    const std::int64_t d2 = parse_iso_date("2024-01-12");
    const std::int64_t d3 = parse_iso_date("2024-02-14");

    {
        Pipeline pipe(pipeline_config(continuous_dir));
        pipe.ingest(kIngest, "seed", 1);
        SimNet net(Scenario::parse(kPipelineScenario));
        pipe.run_scan(net, 1, d1, kBlocklist);
        pipe.run_scan(net, 2, d2, kBlocklist);
        pipe.run_scan(net, 3, d3, kBlocklist);
    }
    {
        Pipeline pipe(pipeline_config(staged_dir));
        pipe.ingest(kIngest, "seed", 1);
        SimNet net(Scenario::parse(kPipelineScenario));
        pipe.run_scan(net, 1, d1, kBlocklist);
        pipe.run_scan(net, 2, d2, kBlocklist);
    }
    {
        // fresh process: reload from disk, then run the third scan
        Pipeline pipe(pipeline_config(staged_dir));
        CHECK(pipe.records().size() == 2);
        CHECK(*pipe.calendar().last_scan() == 2);
        CHECK(pipe.aliased() == std::vector<Prefix>{Prefix::parse("2001:db8:aa::/64")});
        CHECK(pipe.churn_history().size() == 1);
        CHECK(pipe.ever_responsive().size() == 4);

        SimNet net(Scenario::parse(kPipelineScenario));
        pipe.run_scan(net, 3, d3, kBlocklist);
    }

    for (const char* rel : {"store.tsv", "calendar.tsv", "churn.csv", "aliased.txt",
                            "records/scan_000003.tsv", "records_raw/scan_000003.tsv",
                            "verdicts/scan_000003.csv", "ledger/scan_000003.csv",
                            "apd/history.tsv"}) {
        INFO("artifact " << rel);
        CHECK(read_whole_file(continuous_dir / rel) == read_whole_file(staged_dir / rel));
    }
}

TEST_CASE("an engine failure mid-scan leaves no trace in the state") {
    TempDir tmp;
    Pipeline pipe(pipeline_config(tmp.file("state")));
    pipe.ingest(kIngest, "seed", 1);
    SimNet net(Scenario::parse(kPipelineScenario));
    pipe.run_scan(net, 1, parse_iso_date("2024-01-05"), kBlocklist);

    const std::string store_before = read_whole_file(tmp.file("state") / "store.tsv");
    FlakyEngine flaky(Scenario::parse(kPipelineScenario), 10);
    CHECK_THROWS_AS(pipe.run_scan(flaky, 2, parse_iso_date("2024-01-12"), kBlocklist),
                    std::runtime_error);

    CHECK(read_whole_file(tmp.file("state") / "store.tsv") == store_before);
    CHECK(*pipe.calendar().last_scan() == 1);
    CHECK(pipe.records().size() == 1);
    CHECK(!std::filesystem::exists(pipe.record_path(2)));

    // the scan id was not burned: the retry goes through
    ScanOutcome retry = pipe.run_scan(net, 2, parse_iso_date("2024-01-12"), kBlocklist);
    CHECK(retry.ledger.conserved());
    CHECK(*pipe.calendar().last_scan() == 2);
}

TEST_CASE("scan ids must move forward and dates must not regress") {
    TempDir tmp;
    Pipeline pipe(pipeline_config(tmp.file("state")));
    pipe.ingest(kIngest, "seed", 1);
    SimNet net(Scenario::parse(kPipelineScenario));
    pipe.run_scan(net, 5, parse_iso_date("2024-01-05"), kBlocklist);

    CHECK_THROWS_AS(pipe.run_scan(net, 5, parse_iso_date("2024-01-12"), kBlocklist),
                    std::invalid_argument);
    CHECK_THROWS_AS(pipe.run_scan(net, 4, parse_iso_date("2024-01-12"), kBlocklist),
                    std::invalid_argument);
    CHECK_THROWS_AS(pipe.run_scan(net, 6, parse_iso_date("2024-01-04"), kBlocklist),
                    std::invalid_argument);
    CHECK(pipe.records().size() == 1);  // none of those attempts probed anything
}

TEST_CASE("an empty store produces an empty but well-formed scan") {
    TempDir tmp;
    Pipeline pipe(pipeline_config(tmp.file("state")));
    SimNet net(Scenario::parse(kPipelineScenario));
    ScanOutcome out = pipe.run_scan(net, 1, parse_iso_date("2024-01-05"), kBlocklist);
    CHECK(out.ledger.conserved());
    CHECK(out.ledger.blocklist.input == 0);
    CHECK(out.cleaned.probed.empty());
    CHECK(out.aliased.empty());
    CHECK(std::filesystem::exists(pipe.record_path(1)));
}

TEST_CASE("ledger books stay balanced across varied populations") {
    // randomized candidate mixes over the same network; every stage must
    // account for exactly what it removed, whatever the composition
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TempDir tmp;
        PipelineConfig cfg = pipeline_config(tmp.file("state"));
        cfg.seed = seed;
        Pipeline pipe(std::move(cfg));

        CounterRng rng;
        rng.mix(std::string_view("ledger-mix")).mix(seed);
        std::vector<Addr128> extra = kIngest;
        const Addr128 scatter = parse_addr("2001:db8:77::");
        for (int i = 0; i < 20; ++i)
            extra.push_back(Addr128(scatter.value() + rng.next_below(1 << 20)));
        sort_unique(extra);
        pipe.ingest(extra, "seed", 1);

        SimNet net(Scenario::parse(kPipelineScenario));
        ScanOutcome first = pipe.run_scan(net, 1, parse_iso_date("2024-01-05"), kBlocklist);
        ScanOutcome second = pipe.run_scan(net, 2, parse_iso_date("2024-01-12"), kBlocklist);
        CHECK(first.ledger.conserved());
        CHECK(second.ledger.conserved());
        CHECK(first.ledger.blocklist.input == extra.size());
        CHECK(second.ledger.blocklist.input == extra.size());
    }
}
