#include "hitlist/target_gen.hpp"

#include <stdexcept>

#include "hitlist/apd.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

std::vector<Cluster> find_clusters(std::vector<Addr128> addrs, std::size_t min_size,
                                   std::uint64_t max_gap) {
    if (min_size < 2)
        throw std::invalid_argument("find_clusters: min_size must be at least 2");
    if (max_gap < 1) throw std::invalid_argument("find_clusters: max_gap must be at least 1");
    sort_unique(addrs);

    std::vector<Cluster> out;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= addrs.size(); ++i) {
        bool cut = i == addrs.size() ||
                   addr_distance(addrs[i], addrs[i - 1]) > static_cast<uint128>(max_gap);
        if (!cut) continue;
        if (i - run_start >= min_size)
            out.push_back({{addrs.begin() + run_start, addrs.begin() + i}});
        run_start = i;
    }
    return out;
}

std::vector<Addr128> expand_cluster(const Cluster& c, const std::vector<Addr128>& known,
                                    std::uint64_t span_cap) {
    const uint128 lo = c.span_min().value();
    const uint128 hi = c.span_max().value();
    // size is hi-lo+1; comparing hi-lo against the cap keeps the +1 from
    // wrapping on a full-space span
    if (hi - lo >= static_cast<uint128>(span_cap))
        throw std::runtime_error("expand_cluster: cluster " + format_addr(c.span_min()) + ".." +
                                 format_addr(c.span_max()) + " spans more than " +
                                 std::to_string(span_cap) + " addresses");

    std::vector<Addr128> span;
    span.reserve(static_cast<std::size_t>(hi - lo) + 1);
    for (uint128 v = lo;; ++v) {
        span.push_back(Addr128(v));
        if (v == hi) break;  // don't step past the top of the address space
    }
    return sorted_difference(span, known);
}

std::vector<Addr128> generate(const std::vector<Addr128>& addrs,
                              const std::vector<Prefix>& aliased, std::size_t min_size,
                              std::uint64_t max_gap, std::uint64_t span_cap) {
    const std::vector<Prefix> collapsed = collapse(aliased);
    std::vector<Addr128> out;
    for (const Cluster& c : find_clusters(addrs, min_size, max_gap)) {
        for (Addr128 a : expand_cluster(c, addrs, span_cap))
            if (!covered_by(collapsed, a)) out.push_back(a);
    }
    // clusters are ordered and disjoint, so the result is already sorted
    return out;
}

}  // namespace hitlist
