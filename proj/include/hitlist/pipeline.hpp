#ifndef HITLIST_PIPELINE_HPP
#define HITLIST_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hitlist/apd.hpp"
#include "hitlist/asn.hpp"
#include "hitlist/gfw.hpp"
#include "hitlist/probe.hpp"
#include "hitlist/scan_record.hpp"
#include "hitlist/store.hpp"

namespace hitlist {

// The end-to-end scan loop: candidate addresses flow through the
// blocklist, the DNS-injection filter, the aliased-prefix filter and the
// staleness filter, and whatever survives is probed on all five
// protocols. Every stage accounts for its removals so the books balance.

struct StageCount {
    std::uint64_t input = 0;
    std::uint64_t removed = 0;
    std::uint64_t output = 0;
};

struct StageLedger {
    StageCount blocklist;
    StageCount gfw;
    StageCount aliased;
    StageCount thirty_day;

    /// output = input − removed at each stage, and stages chain
    bool conserved() const;

    /// `stage,input,removed,output` rows in pipeline order
    void write_csv(std::ostream& out) const;
    void write_csv(const std::filesystem::path& file) const;
    static StageLedger load_csv(const std::filesystem::path& file);
};

struct ChurnReport {
    std::uint64_t new_ever = 0;   // responsive now, never responsive before
    std::uint64_t recurring = 0;  // responsive now, responsive in some earlier scan
    std::uint64_t lost = 0;       // responsive in prev, silent now
};

/// Compares consecutive scans; `ever_before` is the sorted union of all
/// addresses responsive in any scan before `cur` and splits the gained
/// side into first-time and returning addresses. Throws
/// std::invalid_argument unless prev precedes cur.
ChurnReport churn(const ScanRecord& prev, const ScanRecord& cur,
                  const std::vector<Addr128>& ever_before);

/// Scan-id → date log, strictly increasing in both. Rows are
/// `scan_id<TAB>YYYY-MM-DD`.
class ScanCalendar {
public:
    void add(std::uint32_t scan_id, std::int64_t date);
    std::optional<std::int64_t> date_of(std::uint32_t scan_id) const;
    std::optional<std::uint32_t> last_scan() const;
    const std::map<std::uint32_t, std::int64_t>& entries() const { return entries_; }

    void save(const std::filesystem::path& file) const;
    static ScanCalendar load(const std::filesystem::path& file);

private:
    std::map<std::uint32_t, std::int64_t> entries_;
};

/// Partition around operator-requested exclusions; (kept, removed).
std::pair<std::vector<Addr128>, std::vector<Addr128>> apply_blocklist(
    const std::vector<Addr128>& addrs, const std::vector<Prefix>& blocklist);

struct ThirtyDaySplit {
    std::vector<Addr128> targets;
    std::vector<Addr128> excluded;
};

/// Drops candidates that have gone stale: probed since their last sign of
/// life (or since arrival, if never responsive) with that anchor more than
/// `stale_days` calendar days in the past. Never-probed addresses always
/// stay targeted. A rotating 1-in-`readmit_denominator` slice of the
/// would-be-excluded re-enters each scan so dead space is eventually
/// re-checked; 0 disables re-admission. Anchor scans missing from the
/// calendar count as fresh.
ThirtyDaySplit thirty_day_filter(const CandidateStore& store,
                                 const std::vector<Addr128>& candidates,
                                 std::uint32_t now_scan, std::int64_t now_date,
                                 const ScanCalendar& calendar, int stale_days = 30,
                                 int readmit_denominator = 30);

struct PipelineConfig {
    std::filesystem::path state_dir;
    std::uint64_t seed = 0;
    std::string gfw_qname{kDefaultGfwQname};
    int stale_days = 30;
    int readmit_denominator = 30;
    RibTable rib;
};

/// Result of one scan beyond the record itself.
struct ScanOutcome {
    ScanRecord cleaned;              // what went into the books
    ScanRecord raw;                  // pre-DNS-clean, kept for re-analysis
    StageLedger ledger;
    VerdictMap verdicts;             // per UDP53-responsive address
    std::vector<Prefix> aliased;     // this scan's verdicts, as announced
    std::vector<Prefix> aliased_collapsed;
    std::optional<ChurnReport> churn;  // absent on the first scan
};

/// Owns the on-disk state directory: candidate store, scan calendar,
/// per-scan records (raw and cleaned), verdict logs, stage ledgers and the
/// aliased-prefix artifacts. Construction reloads existing state; all
/// mutation happens through ingest() and run_scan(), which persist before
/// returning. One scan at a time, single writer.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    /// union addresses into the store under a source label
    void ingest(const std::vector<Addr128>& addrs, std::string_view label,
                std::uint32_t now_scan);
    void ingest_file(const std::filesystem::path& file, std::string_view label,
                     std::uint32_t now_scan);

    /// Runs the full staged scan. Probing happens before any state is
    /// touched, so an engine failure leaves store and files as they were.
    /// scan_id must increase strictly, date monotonically.
    ScanOutcome run_scan(ProbeEngine& engine, std::uint32_t scan_id, std::int64_t date,
                         const std::vector<Prefix>& blocklist);

    const CandidateStore& store() const { return store_; }
    const ScanCalendar& calendar() const { return calendar_; }
    const std::vector<Prefix>& aliased() const { return aliased_; }
    /// sorted union of responsive addresses over all recorded scans
    const std::vector<Addr128>& ever_responsive() const { return ever_responsive_; }
    /// cleaned records of all scans run so far, in scan order
    const std::vector<ScanRecord>& records() const { return records_; }
    const std::vector<std::pair<std::uint32_t, ChurnReport>>& churn_history() const {
        return churn_history_;
    }

    std::filesystem::path record_path(std::uint32_t scan_id) const;
    std::filesystem::path raw_record_path(std::uint32_t scan_id) const;
    std::filesystem::path verdict_path(std::uint32_t scan_id) const;
    std::filesystem::path ledger_path(std::uint32_t scan_id) const;

private:
    void load_state();
    void persist(const ScanOutcome& outcome);

    PipelineConfig cfg_;
    CandidateStore store_;
    ScanCalendar calendar_;
    std::vector<ScanRecord> records_;
    std::vector<Addr128> ever_responsive_;
    std::vector<Prefix> aliased_;
    std::vector<std::pair<std::uint32_t, ChurnReport>> churn_history_;
    // APD grids by prefix for the merge window: (scan_id, cell bits)
    std::map<Prefix, std::vector<std::pair<std::uint32_t, std::uint32_t>>> apd_history_;
};

}  // namespace hitlist

#endif  // HITLIST_PIPELINE_HPP
