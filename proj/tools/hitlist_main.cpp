// Command-line front end for the hitlist pipeline. Every probing subcommand
// runs against a scenario-driven simulated network; a live raw-socket engine
// is deliberately not part of this build, and even asking for one is gated
// behind an explicit ethics opt-in plus a blocklist file.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hitlist/apd.hpp"
#include "hitlist/asn.hpp"
#include "hitlist/fingerprint.hpp"
#include "hitlist/gfw.hpp"
#include "hitlist/io.hpp"
#include "hitlist/pipeline.hpp"
#include "hitlist/reports.hpp"
#include "hitlist/scan_record.hpp"
#include "hitlist/simnet.hpp"
#include "hitlist/target_gen.hpp"
#include "hitlist/util.hpp"

namespace {

using namespace hitlist;

constexpr int kExitError = 1;
constexpr int kExitRefused = 2;

/// Flags shared by several subcommands; spec'd env override prefix HITLIST_.
struct CommonOpts {
    std::uint64_t seed = 0;
    std::uint32_t scan_id = 0;
    double rate = 10000.0;   // probes per second, paced engines only
    int in_flight = 1024;    // concurrent probes, paced engines only
    std::string store_dir;
    std::string rib_path;
    std::string blocklist_path;
    std::string scenario_path;
    std::string out_path;
};

void add_seed(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "PRNG seed (explicit, never wall clock)")
        ->envname("HITLIST_SEED")
        ->required();
}

void add_scan_id(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--scan", o.scan_id, "scan id (explicit, never wall clock)")->required();
}

void add_scenario(CLI::App* cmd, CommonOpts& o, bool required = true) {
    auto* opt = cmd->add_option("--scenario", o.scenario_path, "simulated-network ground truth")
                    ->envname("HITLIST_SCENARIO")
                    ->check(CLI::ExistingFile);
    if (required) opt->required();
}

void add_store(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--store", o.store_dir, "pipeline state directory")
        ->envname("HITLIST_STORE")
        ->required();
}

void add_rib(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--rib", o.rib_path, "prefix<TAB>asn table for origin lookups")
        ->envname("HITLIST_RIB")
        ->check(CLI::ExistingFile);
}

void add_pacing(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--rate", o.rate, "probe rate limit per second (paced engines)")
        ->envname("HITLIST_RATE")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--in-flight", o.in_flight, "max concurrent probes (paced engines)")
        ->envname("HITLIST_IN_FLIGHT")
        ->check(CLI::PositiveNumber);
}

void add_out(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--out", o.out_path, "output file (default: stdout)");
}

RibTable load_rib_or_empty(const std::string& path) {
    return path.empty() ? RibTable{} : RibTable::load(path);
}

std::vector<Prefix> load_prefixes_or_empty(const std::filesystem::path& path) {
    return std::filesystem::exists(path) ? read_prefix_file(path) : std::vector<Prefix>{};
}

int write_to(const std::string& out_path, const std::function<void(std::ostream&)>& emit) {
    if (out_path.empty()) {
        emit(std::cout);
    } else {
        auto out = open_output(out_path);
        emit(out);
    }
    return 0;
}

// --- subcommand bodies ------------------------------------------------------

int run_ingest(const CommonOpts& o, const std::string& in_path, const std::string& label) {
    PipelineConfig cfg;
    cfg.state_dir = o.store_dir;
    Pipeline pipe(std::move(cfg));
    const std::size_t before = pipe.store().size();
    pipe.ingest_file(in_path, label, o.scan_id);
    std::cerr << "ingested " << in_path << ": " << (pipe.store().size() - before)
              << " new addresses, store now " << pipe.store().size() << "\n";
    return 0;
}

int run_apd(const CommonOpts& o, const std::string& in_path) {
    SimNet net(Scenario::load(o.scenario_path));
    const RibTable rib = load_rib_or_empty(o.rib_path);
    const std::vector<Addr128> input = read_address_file(in_path);

    std::vector<Prefix> aliased;
    for (const ApdCandidate& cand : enumerate_candidates(input, rib)) {
        SubprefixGrid grid = probe_prefix(net, o.scan_id, cand.prefix, o.seed);
        if (evaluate(cand.prefix, o.scan_id, {grid}).aliased) aliased.push_back(cand.prefix);
    }
    return write_to(o.out_path, [&](std::ostream& out) {
        for (const Prefix& p : aliased) out << p.to_string() << '\n';
    });
}

int run_scan(const CommonOpts& o, const std::string& date_text, const std::string& qname,
             int stale_days, int readmit, bool live, bool ethics_ok) {
    if (live) {
        if (!ethics_ok || o.blocklist_path.empty()) {
            std::cerr
                << "refusing to scan live networks: probing hosts you do not own can disrupt\n"
                   "them and burden their operators. A live run requires both an explicit\n"
                   "--i-understand-ethics opt-in and a --blocklist file of networks that must\n"
                   "never be probed. Re-run with --scenario <file> to use the simulated network.\n";
            return kExitRefused;
        }
        std::cerr << "this build ships no live probing engine; only scenario-backed simulated\n"
                     "scans are available. Drop --live and pass --scenario <file>.\n";
        return kExitError;
    }
    if (o.scenario_path.empty()) {
        std::cerr << "scan needs --scenario <file> (or --live, which this build refuses)\n";
        return kExitError;
    }

    PipelineConfig cfg;
    cfg.state_dir = o.store_dir;
    cfg.seed = o.seed;
    cfg.gfw_qname = qname;
    cfg.stale_days = stale_days;
    cfg.readmit_denominator = readmit;
    cfg.rib = load_rib_or_empty(o.rib_path);
    Pipeline pipe(std::move(cfg));

    SimNet net(Scenario::load(o.scenario_path));
    const std::vector<Prefix> blocklist = o.blocklist_path.empty()
                                              ? std::vector<Prefix>{}
                                              : read_prefix_file(o.blocklist_path);
    ScanOutcome outcome = pipe.run_scan(net, o.scan_id, parse_iso_date(date_text), blocklist);

    std::cerr << "scan " << o.scan_id << ": probed " << outcome.cleaned.probed.size()
              << ", responsive " << outcome.cleaned.responsive_any().size() << ", aliased prefixes "
              << outcome.aliased_collapsed.size() << ", record " << pipe.record_path(o.scan_id).string()
              << "\n";
    return 0;
}

int run_gfw_clean(const std::string& record_path, const std::string& verdict_path,
                  const std::string& out_path) {
    const ScanRecord raw = ScanRecord::load(record_path);
    const VerdictMap verdicts = load_verdict_csv(verdict_path);
    const ScanRecord cleaned = clean_scan(raw, verdicts);
    if (out_path.empty()) {
        std::cerr << "gfw-clean needs --out <file> for the cleaned record\n";
        return kExitError;
    }
    cleaned.save(out_path);
    std::cerr << "cleaned UDP53: " << raw.responsive(Protocol::udp53).size() << " -> "
              << cleaned.responsive(Protocol::udp53).size() << " addresses\n";
    return 0;
}

int run_tbt(const CommonOpts& o, const std::string& prefixes_path) {
    SimNet net(Scenario::load(o.scenario_path));
    std::vector<TbtOutcome> outcomes;
    for (const Prefix& p : read_prefix_file(prefixes_path))
        outcomes.push_back(tbt_run(net, o.scan_id, p, o.seed));
    return write_to(o.out_path, [&](std::ostream& out) { write_tbt_csv(out, outcomes); });
}

int run_fingerprint(const CommonOpts& o, const std::string& in_path, std::uint16_t port,
                    bool consistency) {
    SimNet net(Scenario::load(o.scenario_path));
    const std::vector<Addr128> addrs = read_address_file(in_path);

    if (consistency) {
        const std::vector<TcpFingerprint> fps = collect_fingerprints(net, o.scan_id, addrs, port);
        if (fps.size() < 2) {
            std::cerr << "consistency needs at least two responsive addresses; got " << fps.size()
                      << "\n";
            return kExitError;
        }
        const ConsistencyReport report = prefix_consistency(fps);
        return write_to(o.out_path, [&](std::ostream& out) {
            auto flag = [](FieldConsistency c) { return c == FieldConsistency::uniform ? "uniform" : "differs"; };
            out << "field,state\n"
                << "ittl," << flag(report.ittl) << '\n'
                << "options," << flag(report.options_order) << '\n'
                << "window," << flag(report.window) << '\n'
                << "wscale," << flag(report.wscale) << '\n'
                << "mss," << flag(report.mss) << '\n'
                << "overall," << overall_consistency_name(report.overall) << '\n';
        });
    }

    return write_to(o.out_path, [&](std::ostream& out) {
        out << "addr,ittl,window,wscale,mss,options\n";
        for (Addr128 a : addrs) {
            for (const ProbeResponse& r : net.probe(o.scan_id, ProbeRequest::syn(a, port))) {
                if (r.kind != ResponseKind::tcp_synack) continue;
                const TcpFingerprint fp = fingerprint_from_synack(r);
                out << format_addr(a) << ',' << fp.ittl << ',' << fp.window << ',';
                if (fp.wscale) out << *fp.wscale;
                out << ',';
                if (fp.mss) out << *fp.mss;
                out << ',' << fp.options_order << '\n';
                break;
            }
        }
    });
}

int run_gen_targets(const CommonOpts& o, const std::string& in_path,
                    const std::string& aliased_path, std::size_t min_size, std::uint64_t max_gap,
                    std::uint64_t span_cap) {
    const std::vector<Addr128> input = read_address_file(in_path);
    const std::vector<Prefix> aliased =
        aliased_path.empty() ? std::vector<Prefix>{} : read_prefix_file(aliased_path);
    const std::vector<Addr128> targets = generate(input, aliased, min_size, max_gap, span_cap);
    return write_to(o.out_path, [&](std::ostream& out) {
        for (Addr128 a : targets) out << format_addr(a) << '\n';
    });
}

int run_report(const CommonOpts& o, const std::string& kind, const std::string& oui_path,
               const std::string& resolutions_path, const std::string& aliased_path) {
    PipelineConfig cfg;
    cfg.state_dir = o.store_dir;
    Pipeline pipe(std::move(cfg));
    const RibTable rib = load_rib_or_empty(o.rib_path);

    // absent history degrades to an empty record, never to an error
    ScanRecord record;
    for (const ScanRecord& r : pipe.records())
        if (r.scan_id == o.scan_id) record = r;

    if (kind == "responsiveness") {
        return write_to(o.out_path,
                        [&](std::ostream& out) { responsiveness_table(record, rib).write_csv(out); });
    }
    if (kind == "as-cdf") {
        return write_to(o.out_path,
                        [&](std::ostream& out) { as_cdf(rib, record.responsive_any()).write_csv(out); });
    }
    if (kind == "overlap") {
        std::vector<std::pair<std::string, std::vector<Addr128>>> sets;
        for (Protocol p : kAllProtocols)
            sets.emplace_back(std::string(protocol_name(p)), record.responsive(p));
        return write_to(o.out_path,
                        [&](std::ostream& out) { overlap_matrix(sets).write_csv(out); });
    }
    if (kind == "churn") {
        return write_to(o.out_path, [&](std::ostream& out) {
            out << "scan_id,new_ever,recurring,lost\n";
            for (const auto& [id, r] : pipe.churn_history())
                out << id << ',' << r.new_ever << ',' << r.recurring << ',' << r.lost << '\n';
        });
    }

    // aliased-set reports read the collapsed artifact unless overridden
    std::vector<Prefix> aliased = aliased_path.empty()
                                      ? load_prefixes_or_empty(std::filesystem::path(o.store_dir) /
                                                               "aliased_collapsed.txt")
                                      : read_prefix_file(aliased_path);
    if (kind == "aliased-fraction") {
        AliasedFractionReport report = aliased_fraction_report(std::move(aliased), rib);
        return write_to(o.out_path, [&](std::ostream& out) {
            report.write_csv(out);
            for (const Prefix& p : report.unattributed)
                std::cerr << "no origin AS for aliased prefix " << p.to_string() << "\n";
        });
    }
    if (kind == "domains") {
        if (resolutions_path.empty()) {
            std::cerr << "report domains needs --resolutions <domain<TAB>addr file>\n";
            return kExitError;
        }
        DomainsReport report = domains_in_aliased(resolutions_path, std::move(aliased), rib);
        return write_to(o.out_path, [&](std::ostream& out) {
            report.write_prefix_csv(out);
            out << '\n';
            report.write_as_csv(out);
        });
    }
    if (kind == "eui64") {
        const OuiTable oui = oui_path.empty() ? OuiTable{} : OuiTable::load(oui_path);
        return write_to(o.out_path, [&](std::ostream& out) {
            write_eui64_csv(out, eui64_report(pipe.store(), oui));
        });
    }
    std::cerr << "unknown report kind \"" << kind
              << "\" (responsiveness, as-cdf, overlap, churn, aliased-fraction, domains, eui64)\n";
    return kExitError;
}

int run_simnet(const CommonOpts& o, const std::string& scenario_pos, std::uint32_t first_scan,
               std::uint32_t scan_count, const std::string& start_date, int interval_days,
               const std::string& ingest_path, const std::string& label, const std::string& qname,
               int stale_days, int readmit) {
    PipelineConfig cfg;
    cfg.state_dir = o.store_dir;
    cfg.seed = o.seed;
    cfg.gfw_qname = qname;
    cfg.stale_days = stale_days;
    cfg.readmit_denominator = readmit;
    cfg.rib = load_rib_or_empty(o.rib_path);
    Pipeline pipe(std::move(cfg));

    SimNet net(Scenario::load(scenario_pos));
    const std::vector<Prefix> blocklist = o.blocklist_path.empty()
                                              ? std::vector<Prefix>{}
                                              : read_prefix_file(o.blocklist_path);
    if (!ingest_path.empty()) pipe.ingest_file(ingest_path, label, first_scan);

    const std::int64_t day0 = parse_iso_date(start_date);
    for (std::uint32_t i = 0; i < scan_count; ++i) {
        const std::uint32_t scan_id = first_scan + i;
        // CPE fleets renumber over time; pick up their current addresses
        std::vector<Addr128> cpe_addrs;
        for (const auto& [mac, addr] : net.cpe_assignments(scan_id)) cpe_addrs.push_back(addr);
        sort_unique(cpe_addrs);
        if (!cpe_addrs.empty()) pipe.ingest(cpe_addrs, "cpe", scan_id);

        ScanOutcome outcome =
            pipe.run_scan(net, scan_id, day0 + std::int64_t(i) * interval_days, blocklist);
        std::cerr << "scan " << scan_id << ": probed " << outcome.cleaned.probed.size()
                  << ", responsive " << outcome.cleaned.responsive_any().size()
                  << ", aliased prefixes " << outcome.aliased_collapsed.size() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IPv6 hitlist pipeline: candidate filtering, aliased-prefix detection,\n"
                 "responsiveness scanning and reporting over a deterministic simulated network"};
    app.require_subcommand(1);

    CommonOpts o;
    std::function<int()> action;

    // ingest ----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ingest", "add candidate addresses to the store");
        add_store(cmd, o);
        add_scan_id(cmd, o);
        static std::string in_path, label = "manual";
        cmd->add_option("--in", in_path, "file with one address per line")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->add_option("--label", label, "source label recorded per address");
        cmd->callback([&] { action = [&] { return run_ingest(o, in_path, label); }; });
    }

    // apd -------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("apd", "single-scan aliased-prefix detection");
        add_scenario(cmd, o);
        add_seed(cmd, o);
        add_scan_id(cmd, o);
        add_rib(cmd, o);
        add_pacing(cmd, o);
        add_out(cmd, o);
        static std::string in_path;
        cmd->add_option("--in", in_path, "candidate addresses, one per line")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->callback([&] { action = [&] { return run_apd(o, in_path); }; });
    }

    // scan ------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("scan", "run one full pipeline scan");
        add_store(cmd, o);
        add_seed(cmd, o);
        add_scan_id(cmd, o);
        add_scenario(cmd, o, /*required=*/false);
        add_rib(cmd, o);
        add_pacing(cmd, o);
        static std::string date_text, qname{kDefaultGfwQname};
        static int stale_days = 30, readmit = 30;
        static bool live = false, ethics_ok = false;
        cmd->add_option("--date", date_text, "scan date, YYYY-MM-DD (explicit, never wall clock)")
            ->required();
        cmd->add_option("--blocklist", o.blocklist_path, "prefixes that must never be probed")
            ->envname("HITLIST_BLOCKLIST")
            ->check(CLI::ExistingFile);
        cmd->add_option("--qname", qname, "query name for the DNS-injection check");
        cmd->add_option("--stale-days", stale_days, "staleness horizon in calendar days");
        cmd->add_option("--readmit", readmit,
                        "re-admit 1/N of excluded addresses per scan (0 disables)");
        cmd->add_flag("--live", live, "ask for a live network scan (refused without opt-in)");
        cmd->add_flag("--i-understand-ethics", ethics_ok,
                      "acknowledge the responsibilities of probing other people's networks");
        cmd->callback([&] {
            action = [&] {
                return run_scan(o, date_text, qname, stale_days, readmit, live, ethics_ok);
            };
        });
    }

    // gfw-clean -------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("gfw-clean",
                                       "strip injected DNS responders from a raw scan record");
        static std::string record_path, verdict_path;
        cmd->add_option("--record", record_path, "raw scan record")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->add_option("--verdicts", verdict_path, "verdict CSV for the same scan")
            ->check(CLI::ExistingFile)
            ->required();
        add_out(cmd, o);
        cmd->callback([&] { action = [&] { return run_gfw_clean(record_path, verdict_path, o.out_path); }; });
    }

    // tbt -------------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("tbt", "Too-Big-Trick shared-cache test per prefix");
        add_scenario(cmd, o);
        add_seed(cmd, o);
        add_scan_id(cmd, o);
        add_pacing(cmd, o);
        add_out(cmd, o);
        static std::string prefixes_path;
        cmd->add_option("--prefixes", prefixes_path, "prefixes to test, one per line")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->callback([&] { action = [&] { return run_tbt(o, prefixes_path); }; });
    }

    // fingerprint -----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("fingerprint", "TCP handshake fingerprints of addresses");
        add_scenario(cmd, o);
        add_seed(cmd, o);
        add_scan_id(cmd, o);
        add_pacing(cmd, o);
        add_out(cmd, o);
        static std::string in_path;
        static std::uint16_t port = 443;
        static bool consistency = false;
        cmd->add_option("--in", in_path, "addresses, one per line")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->add_option("--port", port, "TCP port to SYN");
        cmd->add_flag("--consistency", consistency,
                      "report per-field agreement across the addresses instead of a table");
        cmd->callback([&] { action = [&] { return run_fingerprint(o, in_path, port, consistency); }; });
    }

    // gen-targets -----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("gen-targets",
                                       "distance-clustering candidates from responsive addresses");
        add_out(cmd, o);
        static std::string in_path, aliased_path;
        static std::size_t min_size = kClusterMinSize;
        static std::uint64_t max_gap = kClusterMaxGap, span_cap = kClusterSpanCap;
        cmd->add_option("--in", in_path, "responsive addresses, one per line")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->add_option("--aliased", aliased_path, "collapsed aliased prefixes to exclude")
            ->check(CLI::ExistingFile);
        cmd->add_option("--min-size", min_size, "minimum cluster members");
        cmd->add_option("--max-gap", max_gap, "maximum numeric gap inside a cluster");
        cmd->add_option("--span-cap", span_cap, "abort when one cluster would expand further");
        cmd->callback([&] {
            action = [&] {
                return run_gen_targets(o, in_path, aliased_path, min_size, max_gap, span_cap);
            };
        });
    }

    // report ----------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("report", "CSV reports over recorded scans");
        add_store(cmd, o);
        add_rib(cmd, o);
        add_out(cmd, o);
        static std::string kind, oui_path, resolutions_path, aliased_path;
        cmd->add_option("kind", kind,
                        "responsiveness | as-cdf | overlap | churn | aliased-fraction | domains | eui64")
            ->required();
        cmd->add_option("--scan", o.scan_id, "scan id the report is about");
        cmd->add_option("--oui", oui_path, "MAC vendor registry (eui64)")->check(CLI::ExistingFile);
        cmd->add_option("--resolutions", resolutions_path, "domain<TAB>addr file (domains)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--aliased", aliased_path, "aliased prefix list override")
            ->check(CLI::ExistingFile);
        cmd->callback([&] {
            action = [&] { return run_report(o, kind, oui_path, resolutions_path, aliased_path); };
        });
    }

    // simnet-run ------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("simnet-run",
                                       "drive several pipeline scans against one scenario");
        add_store(cmd, o);
        add_seed(cmd, o);
        add_rib(cmd, o);
        add_pacing(cmd, o);
        static std::string scenario_pos, start_date, ingest_path, label = "seed-file";
        static std::string qname{kDefaultGfwQname};
        static std::uint32_t first_scan = 1, scan_count = 1;
        static int interval_days = 7, stale_days = 30, readmit = 30;
        cmd->add_option("scenario", scenario_pos, "scenario file")
            ->check(CLI::ExistingFile)
            ->required();
        cmd->add_option("--start-date", start_date, "date of the first scan, YYYY-MM-DD")
            ->required();
        cmd->add_option("--first-scan", first_scan, "id of the first scan");
        cmd->add_option("--scans", scan_count, "how many scans to run");
        cmd->add_option("--interval-days", interval_days, "days between scans")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--ingest", ingest_path, "address file to ingest before the first scan")
            ->check(CLI::ExistingFile);
        cmd->add_option("--label", label, "source label for --ingest addresses");
        cmd->add_option("--blocklist", o.blocklist_path, "prefixes that must never be probed")
            ->envname("HITLIST_BLOCKLIST")
            ->check(CLI::ExistingFile);
        cmd->add_option("--qname", qname, "query name for the DNS-injection check");
        cmd->add_option("--stale-days", stale_days, "staleness horizon in calendar days");
        cmd->add_option("--readmit", readmit,
                        "re-admit 1/N of excluded addresses per scan (0 disables)");
        cmd->callback([&] {
            action = [&] {
                return run_simnet(o, scenario_pos, first_scan, scan_count, start_date,
                                  interval_days, ingest_path, label, qname, stale_days, readmit);
            };
        });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return action ? action() : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "hitlist: " << e.what() << "\n";
        return kExitError;
    }
}
