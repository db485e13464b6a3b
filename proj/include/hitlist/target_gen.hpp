#ifndef HITLIST_TARGET_GEN_HPP
#define HITLIST_TARGET_GEN_HPP

#include <cstdint>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

// Candidate generation by distance clustering: responsive addresses that
// sit numerically close together usually mark an allocation pattern, and
// the unseen addresses between them are promising probe targets.

/// defaults matching the deployed thresholds
inline constexpr std::size_t kClusterMinSize = 10;
inline constexpr std::uint64_t kClusterMaxGap = 64;

/// ceiling on the span one cluster may expand to
inline constexpr std::uint64_t kClusterSpanCap = 1u << 16;

/// A maximal run of addresses whose consecutive sorted neighbors are at
/// most max_gap apart.
struct Cluster {
    std::vector<Addr128> members;  // sorted, >= min_size of them

    Addr128 span_min() const { return members.front(); }
    Addr128 span_max() const { return members.back(); }

    friend bool operator==(const Cluster& a, const Cluster& b) { return a.members == b.members; }
};

/// Sorts the addresses and cuts them into maximal runs with consecutive
/// gaps <= max_gap, keeping runs of at least min_size members. Clusters
/// come back ordered and disjoint. Throws std::invalid_argument for
/// min_size < 2 or max_gap < 1.
std::vector<Cluster> find_clusters(std::vector<Addr128> addrs,
                                   std::size_t min_size = kClusterMinSize,
                                   std::uint64_t max_gap = kClusterMaxGap);

/// Every address in the cluster's span that is not already in `known`
/// (sorted). Throws std::runtime_error, naming the cluster, when the span
/// holds more than `span_cap` addresses.
std::vector<Addr128> expand_cluster(const Cluster& c, const std::vector<Addr128>& known,
                                    std::uint64_t span_cap = kClusterSpanCap);

/// The full pipeline step: cluster `addrs` (sorted), expand every cluster,
/// and drop anything inside an aliased prefix or already in the input.
/// Span-cap violations propagate.
std::vector<Addr128> generate(const std::vector<Addr128>& addrs,
                              const std::vector<Prefix>& aliased,
                              std::size_t min_size = kClusterMinSize,
                              std::uint64_t max_gap = kClusterMaxGap,
                              std::uint64_t span_cap = kClusterSpanCap);

}  // namespace hitlist

#endif  // HITLIST_TARGET_GEN_HPP
