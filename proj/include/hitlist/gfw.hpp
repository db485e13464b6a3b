#ifndef HITLIST_GFW_HPP
#define HITLIST_GFW_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hitlist/probe.hpp"
#include "hitlist/scan_record.hpp"

namespace hitlist {

/// Query name whose DNS lookups draw injected answers on poisoned paths.
inline constexpr std::string_view kDefaultGfwQname = "www.google.com";

/// How a set of DNS replies to one AAAA query reads. The injected_* classes
/// are signatures of on-path answer injection; valid_aaaa, error_status and
/// referral are the shapes a genuine resolver produces.
enum class DnsClass : std::uint8_t {
    valid_aaaa = 0,     // one reply, rcode 0, a real AAAA answer
    error_status,       // one reply with a non-zero rcode
    referral,           // one reply deferring to name servers
    injected_a_record,  // A answers to an AAAA query
    injected_teredo,    // AAAA answers inside the Teredo /32
    injected_multi,     // several replies raced in for a single query
    incorrect_other,    // anything else, all-timeout included
};

std::string_view dns_class_name(DnsClass c);
std::optional<DnsClass> dns_class_from_name(std::string_view name);

/// true for the classes produced by answer injection
bool is_injected(DnsClass c);

/// true for the classes a scan keeps as genuine UDP53 responsiveness
bool is_retained(DnsClass c);

struct DnsVerdict {
    DnsClass cls = DnsClass::incorrect_other;
    std::vector<ResourceRecord> evidence;  // the records that decided cls
};

/// Classifies the replies to one AAAA query. Injection evidence wins over
/// reply shape, and more specific evidence wins within the injected
/// classes: teredo > a_record > multi. Timeouts carry no information; a
/// query that only timed out is incorrect_other.
///
/// When `expected_aaaa` is set (control-domain queries with a known
/// answer), a shape-valid reply whose answers miss the expectation is
/// downgraded to incorrect_other.
///
/// Throws std::invalid_argument on an empty reply list or a non-DNS reply
/// kind.
DnsVerdict classify_dns_response(std::string_view qname,
                                 const std::vector<ProbeResponse>& responses,
                                 std::optional<Addr128> expected_aaaa = std::nullopt);

/// per-address verdicts of one scan, ordered for stable export
using VerdictMap = std::map<Addr128, DnsVerdict>;

/// Drops every UDP53-responsive address whose verdict is not one of the
/// retained classes; all other protocol sets pass through untouched.
/// Throws std::runtime_error when a UDP53-responsive address has no
/// verdict.
ScanRecord clean_scan(const ScanRecord& record, const VerdictMap& verdicts);

/// clean_scan over a scan series; `verdicts_by_scan` is keyed by scan_id
/// and may omit scans without UDP53 responders
std::vector<ScanRecord> historical_clean(const std::vector<ScanRecord>& records,
                                         const std::map<std::uint32_t, VerdictMap>& verdicts_by_scan);

/// Accumulates which addresses ever drew an injected DNS answer and which
/// ever answered on a non-UDP53 protocol. Both facts only ever switch on,
/// so the filter can only shrink by an address proving itself real.
class TaintState {
public:
    void note_injected(Addr128 a) { injected_.insert(a); }
    void note_other_responsive(Addr128 a) { other_responsive_.insert(a); }

    bool ever_injected(Addr128 a) const { return injected_.count(a) != 0; }
    bool ever_other_responsive(Addr128 a) const { return other_responsive_.count(a) != 0; }

    /// injected at least once and never seen on any other protocol
    bool filtered(Addr128 a) const {
        return ever_injected(a) && !ever_other_responsive(a);
    }

    /// all currently filtered addresses, sorted
    std::vector<Addr128> filter_list() const;

private:
    std::unordered_set<Addr128> injected_;
    std::unordered_set<Addr128> other_responsive_;
};

/// Folds one raw (pre-clean) scan into the taint state: injected verdicts
/// mark their address, responsiveness on any non-UDP53 protocol clears it
/// for good. Verdict coverage requirements are those of clean_scan.
void update_taint(TaintState& state, const ScanRecord& record, const VerdictMap& verdicts);

/// verdict log as `addr,class` rows
void write_verdict_csv(std::ostream& out, const VerdictMap& verdicts);
void write_verdict_csv(const std::filesystem::path& file, const VerdictMap& verdicts);

/// Reads a verdict log back; evidence is not persisted and comes back
/// empty. Throws std::runtime_error on a malformed row or unknown class.
VerdictMap load_verdict_csv(const std::filesystem::path& file);

}  // namespace hitlist

#endif  // HITLIST_GFW_HPP
