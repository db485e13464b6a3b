#ifndef HITLIST_ASN_HPP
#define HITLIST_ASN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

struct RibEntry {
    Prefix prefix;
    std::uint32_t asn = 0;
};

/// Prefix-to-origin-AS table over a flattened RIB dump, indexed for
/// longest-prefix-match lookups. Immutable once loaded; lookups are safe
/// from any number of threads.
class RibTable {
public:
    /// loads `<prefix><TAB><asn>` lines; duplicate exact prefixes keep the
    /// first occurrence and log a warning
    static RibTable load(const std::filesystem::path& file);

    /// returns false (and logs) when the exact prefix is already present
    bool insert(const Prefix& prefix, std::uint32_t asn);

    std::optional<std::uint32_t> lookup_origin(Addr128 a) const;

    const std::vector<RibEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    struct KeyHash {
        std::size_t operator()(uint128 v) const noexcept {
            return std::hash<Addr128>{}(Addr128(v));
        }
    };

    std::vector<RibEntry> entries_;
    // one map per prefix length, keyed by the top `length` bits
    std::array<std::unordered_map<uint128, std::uint32_t, KeyHash>, 129> by_length_{};
    std::vector<int> lengths_desc_;  // lengths present, longest first
};

struct AsRow {
    std::optional<std::uint32_t> asn;  // nullopt = unmapped bucket
    std::uint64_t count = 0;
    double share = 0.0;
    double cumulative_share = 0.0;
};

/// Per-AS address counts for one address set, descending by count, with the
/// unmapped bucket last. Shares are fractions of the whole set.
struct AsDistribution {
    std::vector<AsRow> rows;
    std::uint64_t total = 0;

    void write_csv(std::ostream& out) const;
};

/// `addrs` must be sorted and duplicate-free
AsDistribution as_cdf(const RibTable& table, const std::vector<Addr128>& addrs);

/// distinct origin AS count of a set; unmapped addresses count as one bucket
std::uint64_t distinct_as_count(const RibTable& table, const std::vector<Addr128>& addrs);

}  // namespace hitlist

#endif  // HITLIST_ASN_HPP
