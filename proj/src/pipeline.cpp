#include "hitlist/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "hitlist/io.hpp"
#include "hitlist/rng.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

namespace fs = std::filesystem;

bool StageLedger::conserved() const {
    auto balanced = [](const StageCount& s) {
        return s.removed <= s.input && s.output == s.input - s.removed;
    };
    return balanced(blocklist) && balanced(gfw) && balanced(aliased) && balanced(thirty_day) &&
           gfw.input == blocklist.output && aliased.input == gfw.output &&
           thirty_day.input == aliased.output;
}

namespace {

constexpr std::string_view kStageNames[] = {"blocklist", "gfw", "aliased", "thirty_day"};

}  // namespace

void StageLedger::write_csv(std::ostream& out) const {
    out << "stage,input,removed,output\n";
    const StageCount* stages[] = {&blocklist, &gfw, &aliased, &thirty_day};
    for (std::size_t i = 0; i < 4; ++i)
        out << kStageNames[i] << ',' << stages[i]->input << ',' << stages[i]->removed << ','
            << stages[i]->output << '\n';
}

void StageLedger::write_csv(const fs::path& file) const {
    auto out = open_output(file);
    write_csv(out);
}

StageLedger StageLedger::load_csv(const fs::path& file) {
    StageLedger ledger;
    bool saw_header = false;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        if (!saw_header) {
            if (line != "stage,input,removed,output")
                throw std::runtime_error(file.string() + ": unrecognized ledger header");
            saw_header = true;
            return;
        }
        auto fields = split_char(line, ',');
        if (fields.size() != 4)
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": expected 4 fields");
        StageCount count{std::stoull(std::string(fields[1])), std::stoull(std::string(fields[2])),
                         std::stoull(std::string(fields[3]))};
        if (fields[0] == "blocklist")
            ledger.blocklist = count;
        else if (fields[0] == "gfw")
            ledger.gfw = count;
        else if (fields[0] == "aliased")
            ledger.aliased = count;
        else if (fields[0] == "thirty_day")
            ledger.thirty_day = count;
        else
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": unknown stage \"" + std::string(fields[0]) + "\"");
    });
    if (!saw_header) throw std::runtime_error(file.string() + ": missing ledger header");
    return ledger;
}

ChurnReport churn(const ScanRecord& prev, const ScanRecord& cur,
                  const std::vector<Addr128>& ever_before) {
    if (prev.scan_id >= cur.scan_id)
        throw std::invalid_argument("churn: prev scan must precede cur");
    const auto prev_resp = prev.responsive_any();
    const auto cur_resp = cur.responsive_any();
    const auto gained = sorted_difference(cur_resp, prev_resp);

    ChurnReport r;
    r.lost = sorted_difference(prev_resp, cur_resp).size();
    r.recurring = sorted_intersection(gained, ever_before).size();
    r.new_ever = gained.size() - r.recurring;
    return r;
}

void ScanCalendar::add(std::uint32_t scan_id, std::int64_t date) {
    if (!entries_.empty()) {
        auto last = *entries_.rbegin();
        if (scan_id <= last.first)
            throw std::invalid_argument("calendar: scan ids must increase (got " +
                                        std::to_string(scan_id) + " after " +
                                        std::to_string(last.first) + ")");
        if (date < last.second)
            throw std::invalid_argument("calendar: dates must not go backwards");
    }
    entries_.emplace(scan_id, date);
}

std::optional<std::int64_t> ScanCalendar::date_of(std::uint32_t scan_id) const {
    auto it = entries_.find(scan_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> ScanCalendar::last_scan() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.rbegin()->first;
}

void ScanCalendar::save(const fs::path& file) const {
    auto out = open_output(file);
    for (const auto& [id, date] : entries_) out << id << '\t' << format_iso_date(date) << '\n';
    if (!out) throw std::runtime_error("failed writing " + file.string());
}

ScanCalendar ScanCalendar::load(const fs::path& file) {
    ScanCalendar cal;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        auto fields = split_char(line, '\t');
        if (fields.size() != 2)
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": expected `scan_id<TAB>date`");
        cal.add(static_cast<std::uint32_t>(std::stoul(std::string(fields[0]))),
                parse_iso_date(fields[1]));
    });
    return cal;
}

std::pair<std::vector<Addr128>, std::vector<Addr128>> apply_blocklist(
    const std::vector<Addr128>& addrs, const std::vector<Prefix>& blocklist) {
    return filter_addresses(addrs, blocklist);
}

ThirtyDaySplit thirty_day_filter(const CandidateStore& store,
                                 const std::vector<Addr128>& candidates,
                                 std::uint32_t now_scan, std::int64_t now_date,
                                 const ScanCalendar& calendar, int stale_days,
                                 int readmit_denominator) {
    ThirtyDaySplit out;
    for (Addr128 a : candidates) {
        const AddressInfo* info = store.find(a);
        if (!info)
            throw std::logic_error("thirty_day_filter: " + format_addr(a) +
                                   " is not in the store");

        // anchor: last sign of life, or arrival for the never-responsive
        bool exclude = false;
        if (info->last_probed) {
            auto last_resp = info->last_responsive_any();
            std::uint32_t anchor_scan = last_resp ? *last_resp : info->first_seen;
            if (*info->last_probed > anchor_scan) {  // probed since the anchor, silence since
                auto anchor_date = calendar.date_of(anchor_scan);
                if (anchor_date && now_date - *anchor_date > stale_days) exclude = true;
            }
        }

        if (exclude && readmit_denominator > 0) {
            CounterRng rng;
            rng.mix(std::string_view("readmit")).mix(a);
            if (rng.next() % readmit_denominator ==
                now_scan % static_cast<std::uint32_t>(readmit_denominator))
                exclude = false;  // this scan's rotating re-check slice
        }
        (exclude ? out.excluded : out.targets).push_back(a);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string scan_file(std::uint32_t scan_id, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scan_%06u.%s", scan_id, ext);
    return buf;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : cfg_(std::move(config)) {
    fs::create_directories(cfg_.state_dir);
    load_state();
}

std::filesystem::path Pipeline::record_path(std::uint32_t scan_id) const {
    return cfg_.state_dir / "records" / scan_file(scan_id, "tsv");
}
std::filesystem::path Pipeline::raw_record_path(std::uint32_t scan_id) const {
    return cfg_.state_dir / "records_raw" / scan_file(scan_id, "tsv");
}
std::filesystem::path Pipeline::verdict_path(std::uint32_t scan_id) const {
    return cfg_.state_dir / "verdicts" / scan_file(scan_id, "csv");
}
std::filesystem::path Pipeline::ledger_path(std::uint32_t scan_id) const {
    return cfg_.state_dir / "ledger" / scan_file(scan_id, "csv");
}

void Pipeline::load_state() {
    const fs::path& dir = cfg_.state_dir;
    if (fs::exists(dir / "store.tsv")) store_ = CandidateStore::load(dir / "store.tsv");
    if (fs::exists(dir / "calendar.tsv")) calendar_ = ScanCalendar::load(dir / "calendar.tsv");
    if (fs::exists(dir / "aliased.txt")) aliased_ = read_prefix_file(dir / "aliased.txt");

    if (fs::exists(dir / "records")) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir / "records"))
            if (entry.path().extension() == ".tsv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            records_.push_back(ScanRecord::load(f));
            ever_responsive_ = sorted_union(ever_responsive_, records_.back().responsive_any());
        }
    }

    if (fs::exists(dir / "churn.csv")) {
        bool saw_header = false;
        for_each_data_line(dir / "churn.csv", [&](int lineno, std::string_view line) {
            if (!saw_header) {
                if (line != "scan_id,new_ever,recurring,lost")
                    throw std::runtime_error("churn.csv: unrecognized header");
                saw_header = true;
                return;
            }
            auto fields = split_char(line, ',');
            if (fields.size() != 4)
                throw std::runtime_error("churn.csv:" + std::to_string(lineno) + ": expected 4 fields");
            ChurnReport r{std::stoull(std::string(fields[1])), std::stoull(std::string(fields[2])),
                          std::stoull(std::string(fields[3]))};
            churn_history_.emplace_back(
                static_cast<std::uint32_t>(std::stoul(std::string(fields[0]))), r);
        });
    }

    if (fs::exists(dir / "apd" / "history.tsv")) {
        for_each_data_line(dir / "apd" / "history.tsv", [&](int lineno, std::string_view line) {
            auto fields = split_char(line, '\t');
            if (fields.size() != 3)
                throw std::runtime_error("apd/history.tsv:" + std::to_string(lineno) +
                                         ": expected `prefix<TAB>scan<TAB>bits`");
            apd_history_[Prefix::parse(fields[0])].emplace_back(
                static_cast<std::uint32_t>(std::stoul(std::string(fields[1]))),
                static_cast<std::uint32_t>(std::stoul(std::string(fields[2]))));
        });
    }
}

void Pipeline::ingest(const std::vector<Addr128>& addrs, std::string_view label,
                      std::uint32_t now_scan) {
    store_.ingest(addrs, label, now_scan);
    store_.save(cfg_.state_dir / "store.tsv");
}

void Pipeline::ingest_file(const fs::path& file, std::string_view label, std::uint32_t now_scan) {
    ingest(read_address_file(file), label, now_scan);
}

ScanOutcome Pipeline::run_scan(ProbeEngine& engine, std::uint32_t scan_id, std::int64_t date,
                               const std::vector<Prefix>& blocklist) {
    if (auto last = calendar_.last_scan(); last && scan_id <= *last)
        throw std::invalid_argument("run_scan: scan id " + std::to_string(scan_id) +
                                    " does not follow " + std::to_string(*last));
    if (!calendar_.entries().empty() && date < calendar_.entries().rbegin()->second)
        throw std::invalid_argument("run_scan: date precedes the previous scan");

    ScanOutcome out;

    // --- staged target selection; probing only, no state changes ---
    const std::vector<Addr128> candidates = store_.addresses();

    auto [unblocked, blocked] = apply_blocklist(candidates, blocklist);
    out.ledger.blocklist = {candidates.size(), blocked.size(), unblocked.size()};

    const std::vector<Addr128> gfw_removed = store_.gfw_filter_list();
    const std::vector<Addr128> past_gfw = sorted_difference(unblocked, gfw_removed);
    out.ledger.gfw = {unblocked.size(), unblocked.size() - past_gfw.size(), past_gfw.size()};

    std::vector<std::pair<Prefix, std::uint32_t>> fresh_grids;
    std::vector<Prefix> aliased_now;
    for (const auto& cand : enumerate_candidates(past_gfw, cfg_.rib)) {
        SubprefixGrid grid = probe_prefix(engine, scan_id, cand.prefix, cfg_.seed);
        fresh_grids.emplace_back(cand.prefix, grid.bits());
        std::vector<SubprefixGrid> window{grid};
        if (auto it = apd_history_.find(cand.prefix); it != apd_history_.end())
            for (auto [sid, bits] : it->second)
                if (sid < scan_id && sid + kApdWindowScans > scan_id)
                    window.push_back(SubprefixGrid(bits));
        if (evaluate(cand.prefix, scan_id, std::move(window)).aliased)
            aliased_now.push_back(cand.prefix);
    }
    out.aliased = aliased_now;  // candidates come sorted, so this is too
    out.aliased_collapsed = collapse(aliased_now);
    auto [unaliased, in_aliased] = filter_addresses(past_gfw, out.aliased_collapsed);
    out.ledger.aliased = {past_gfw.size(), in_aliased.size(), unaliased.size()};

    ThirtyDaySplit split = thirty_day_filter(store_, unaliased, scan_id, date, calendar_,
                                             cfg_.stale_days, cfg_.readmit_denominator);
    out.ledger.thirty_day = {unaliased.size(), split.excluded.size(), split.targets.size()};

    // --- the scan proper: five protocols per target ---
    out.raw.scan_id = scan_id;
    out.raw.date = date;
    out.raw.probed = split.targets;
    for (Addr128 t : split.targets) {
        auto note = [&](Protocol p, const std::vector<ProbeResponse>& rs) {
            for (const auto& r : rs)
                if (r.responsive()) {
                    out.raw.responsive(p).push_back(t);
                    return;
                }
        };
        note(Protocol::icmp, engine.probe(scan_id, ProbeRequest::echo(t)));
        note(Protocol::tcp80, engine.probe(scan_id, ProbeRequest::syn(t, 80)));
        note(Protocol::tcp443, engine.probe(scan_id, ProbeRequest::syn(t, 443)));
        auto dns = engine.probe(scan_id, ProbeRequest::dns(t, cfg_.gfw_qname));
        bool answered = false;
        for (const auto& r : dns) answered |= r.responsive();
        if (answered) {
            out.raw.responsive(Protocol::udp53).push_back(t);
            out.verdicts[t] = classify_dns_response(cfg_.gfw_qname, dns);
        }
        note(Protocol::udp443, engine.probe(scan_id, ProbeRequest::quic(t)));
    }
    out.raw.validate();
    out.cleaned = clean_scan(out.raw, out.verdicts);

    if (!records_.empty()) out.churn = churn(records_.back(), out.cleaned, ever_responsive_);

    // --- bookkeeping; nothing above may throw past this point ---
    calendar_.add(scan_id, date);
    for (Addr128 t : split.targets) store_.note_probed(t, scan_id);
    for (const auto& [addr, verdict] : out.verdicts)
        if (is_injected(verdict.cls)) store_.note_injected(addr);
    for (Protocol p : kAllProtocols)
        for (Addr128 a : out.cleaned.responsive(p)) store_.note_responsive(a, p, scan_id);

    ever_responsive_ = sorted_union(ever_responsive_, out.cleaned.responsive_any());
    records_.push_back(out.cleaned);
    if (out.churn) churn_history_.emplace_back(scan_id, *out.churn);
    aliased_ = aliased_now;

    for (const auto& [prefix, bits] : fresh_grids) apd_history_[prefix].emplace_back(scan_id, bits);
    for (auto it = apd_history_.begin(); it != apd_history_.end();) {
        auto& entries = it->second;
        entries.erase(std::remove_if(entries.begin(), entries.end(),
                                     [&](const auto& e) {
                                         return e.first + kApdWindowScans <= scan_id;
                                     }),
                      entries.end());
        it = entries.empty() ? apd_history_.erase(it) : std::next(it);
    }

    persist(out);
    return out;
}

void Pipeline::persist(const ScanOutcome& out) {
    const fs::path& dir = cfg_.state_dir;
    for (const char* sub : {"records", "records_raw", "verdicts", "ledger", "apd"})
        fs::create_directories(dir / sub);

    const std::uint32_t scan_id = out.cleaned.scan_id;
    store_.save(dir / "store.tsv");
    calendar_.save(dir / "calendar.tsv");
    out.raw.save(raw_record_path(scan_id));
    out.cleaned.save(record_path(scan_id));
    write_verdict_csv(verdict_path(scan_id), out.verdicts);
    out.ledger.write_csv(ledger_path(scan_id));

    {
        auto f = open_output(dir / "churn.csv");
        f << "scan_id,new_ever,recurring,lost\n";
        for (const auto& [id, r] : churn_history_)
            f << id << ',' << r.new_ever << ',' << r.recurring << ',' << r.lost << '\n';
    }
    {
        auto f = open_output(dir / "apd" / "history.tsv");
        for (const auto& [prefix, entries] : apd_history_)
            for (const auto& [sid, bits] : entries)
                f << prefix.to_string() << '\t' << sid << '\t' << bits << '\n';
    }
    write_prefix_file(dir / "aliased.txt", aliased_);
    write_prefix_file(dir / "aliased_collapsed.txt", out.aliased_collapsed);
    {
        auto reps = representatives(out.aliased_collapsed, store_.addresses(), cfg_.seed);
        auto f = open_output(dir / "representatives.tsv");
        for (const auto& [prefix, addr] : reps)
            f << prefix.to_string() << '\t' << format_addr(addr) << '\n';
    }
    write_address_file(dir / "gfw_filter.txt", store_.gfw_filter_list());
}

}  // namespace hitlist
