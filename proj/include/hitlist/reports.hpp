#ifndef HITLIST_REPORTS_HPP
#define HITLIST_REPORTS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hitlist/addr.hpp"
#include "hitlist/asn.hpp"
#include "hitlist/scan_record.hpp"
#include "hitlist/store.hpp"

namespace hitlist {

// Read-only views over scan history, the candidate store and the RIB.
// Rerunning any of these never mutates state, so they can be produced at
// any time from the on-disk artifacts.

struct ResponsivenessRow {
    std::uint64_t addr_count = 0;
    std::uint64_t as_count = 0;  // distinct origin ASes, unmapped as one bucket
};

/// Per-protocol responsive addresses and covered ASes for one scan, plus a
/// total row for the union across protocols.
struct ResponsivenessTable {
    std::array<ResponsivenessRow, 5> by_protocol{};  // indexed by Protocol
    ResponsivenessRow total;

    const ResponsivenessRow& row(Protocol p) const {
        return by_protocol[static_cast<std::size_t>(p)];
    }

    /// `protocol,addresses,ases` rows ending with a `total` row
    void write_csv(std::ostream& out) const;
};

ResponsivenessTable responsiveness_table(const ScanRecord& record, const RibTable& rib);

/// Row-relative intersection percentages: cell(i,j) = 100·|Sᵢ∩Sⱼ|/|Sᵢ|.
/// Cells of an empty row are undefined and print as "-".
struct OverlapMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> cells;

    void write_csv(std::ostream& out) const;  // one decimal place per cell
};

OverlapMatrix overlap_matrix(
    const std::vector<std::pair<std::string, std::vector<Addr128>>>& sets);

struct AliasedAsRow {
    std::uint32_t asn = 0;
    double aliased_log2 = 0.0;  // log2 of the AS's aliased address count
    double fraction = 0.0;      // aliased addresses / announced addresses
    bool announced_missing = false;  // aliased space but nothing announced — inconsistent RIB
};

/// How much of each AS's announced space the aliased set covers. Sums on
/// both sides are exact big integers over the collapsed prefix sets; only
/// the final ratio is floating point.
struct AliasedFractionReport {
    std::vector<AliasedAsRow> rows;     // descending by fraction, then by ASN
    std::vector<Prefix> unattributed;   // aliased prefixes with no origin in the RIB

    void write_csv(std::ostream& out) const;  // `asn,aliased_log2,fraction`
};

AliasedFractionReport aliased_fraction_report(std::vector<Prefix> aliased,
                                              const RibTable& rib);

/// Domain placement inside the aliased space. A domain counts once for
/// every distinct aliased prefix any of its addresses falls in; per-AS
/// numbers sum the per-prefix counts by the prefix's origin.
struct DomainsReport {
    std::map<Prefix, std::uint64_t> per_prefix;
    std::map<std::uint32_t, std::uint64_t> per_as;
    std::uint64_t unattributed = 0;     // prefix counts with no origin AS
    std::uint64_t domains_in_any = 0;   // distinct domains with ≥1 aliased address

    void write_prefix_csv(std::ostream& out) const;  // `prefix,domains`
    void write_as_csv(std::ostream& out) const;      // `asn,domains`
};

/// `resolutions` rows are `domain<TAB>address`; a domain may repeat with
/// several addresses.
DomainsReport domains_in_aliased(const std::filesystem::path& resolutions,
                                 std::vector<Prefix> aliased, const RibTable& rib);

/// IEEE OUI registry slice: first three MAC octets → vendor name.
class OuiTable {
public:
    /// loads `<6-hex-digits><TAB><vendor>` lines; duplicates keep the first
    /// occurrence and log a warning
    static OuiTable load(const std::filesystem::path& file);

    void insert(std::string_view oui_hex, std::string vendor);
    /// vendor for the MAC's OUI, "unknown" when unregistered
    std::string lookup(const MacAddr& mac) const;
    std::size_t size() const { return vendors_.size(); }

private:
    std::map<std::string, std::string> vendors_;  // uppercase hex → vendor
};

struct Eui64Group {
    MacAddr mac;
    std::uint64_t address_count = 0;
    std::string vendor;
};

/// Store addresses with an extractable EUI-64 MAC, grouped by that MAC.
/// Descending by address count, ties by MAC.
std::vector<Eui64Group> eui64_report(const CandidateStore& store, const OuiTable& oui);

void write_eui64_csv(std::ostream& out, const std::vector<Eui64Group>& groups);

}  // namespace hitlist

#endif  // HITLIST_REPORTS_HPP
