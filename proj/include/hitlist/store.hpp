#ifndef HITLIST_STORE_HPP
#define HITLIST_STORE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

/// Everything the pipeline remembers about one candidate address across
/// scans. Responsiveness fields reflect cleaned scan results, so injected
/// DNS answers never count as being responsive here.
struct AddressInfo {
    std::vector<std::string> sources;  // ingestion labels, sorted unique
    std::uint32_t first_seen = 0;      // scan current when the address arrived
    std::optional<std::uint32_t> last_probed;
    std::array<std::optional<std::uint32_t>, 5> last_responsive{};  // per protocol
    bool ever_injected = false;        // drew a forged DNS answer at least once

    std::optional<std::uint32_t> last_responsive_any() const;
    bool ever_responsive() const { return last_responsive_any().has_value(); }
};

/// Cumulative candidate set. Single writer; scans update it through the
/// note_* calls and reports read immutable snapshots.
class CandidateStore {
public:
    /// Adds addresses under a source label. New addresses get
    /// `first_seen = now_scan`; known ones only union the label in, so
    /// re-ingesting a manifest is a no-op.
    void ingest(const std::vector<Addr128>& addrs, std::string_view label,
                std::uint32_t now_scan);

    const AddressInfo* find(Addr128 a) const;
    std::size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }

    /// all candidate addresses, sorted
    std::vector<Addr128> addresses() const;

    /// Throws std::logic_error for an unknown address or a scan id that
    /// would move a last_* field backwards.
    void note_probed(Addr128 a, std::uint32_t scan_id);
    /// Requires the address to have been probed in `scan_id` first, so
    /// the last_responsive <= last_probed invariant holds by construction.
    void note_responsive(Addr128 a, Protocol p, std::uint32_t scan_id);
    void note_injected(Addr128 a);

    /// injected at least once and never responsive on any non-UDP53
    /// protocol — the address only ever "answered" through the injector
    bool gfw_filtered(Addr128 a) const;
    std::vector<Addr128> gfw_filter_list() const;

    /// every address responsive to >= 1 protocol so far, sorted
    std::vector<Addr128> ever_responsive_set() const;

    void for_each(const std::function<void(Addr128, const AddressInfo&)>& fn) const;

    void save(const std::filesystem::path& file) const;
    static CandidateStore load(const std::filesystem::path& file);

private:
    std::map<Addr128, AddressInfo> map_;  // ordered for stable snapshots
};

}  // namespace hitlist

#endif  // HITLIST_STORE_HPP
