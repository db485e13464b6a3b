#include "hitlist/asn.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

RibTable RibTable::load(const std::filesystem::path& file) {
    RibTable table;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        auto fields = split_char(line, '\t');
        if (fields.size() != 2) {
            throw std::invalid_argument(file.string() + ":" + std::to_string(lineno) +
                                        ": expected <prefix>\\t<asn>");
        }
        Prefix prefix = Prefix::parse(trim(fields[0]));
        std::uint32_t asn = 0;
        try {
            unsigned long v = std::stoul(std::string(trim(fields[1])));
            if (v > 0xffffffffUL) throw std::out_of_range("asn");
            asn = static_cast<std::uint32_t>(v);
        } catch (const std::exception&) {
            throw std::invalid_argument(file.string() + ":" + std::to_string(lineno) +
                                        ": bad AS number '" + std::string(fields[1]) + "'");
        }
        if (!table.insert(prefix, asn)) {
            std::cerr << file.string() << ":" << lineno << ": duplicate prefix "
                      << prefix.to_string() << ", keeping first entry\n";
        }
    });
    return table;
}

bool RibTable::insert(const Prefix& prefix, std::uint32_t asn) {
    auto& bucket = by_length_[static_cast<std::size_t>(prefix.length())];
    auto [it, inserted] = bucket.emplace(prefix.base().value(), asn);
    (void)it;
    if (!inserted) return false;
    if (bucket.size() == 1) {
        lengths_desc_.push_back(prefix.length());
        std::sort(lengths_desc_.rbegin(), lengths_desc_.rend());
    }
    entries_.push_back(RibEntry{prefix, asn});
    return true;
}

std::optional<std::uint32_t> RibTable::lookup_origin(Addr128 a) const {
    for (int len : lengths_desc_) {
        uint128 masked = a.value() & Prefix::mask_bits(len);
        const auto& bucket = by_length_[static_cast<std::size_t>(len)];
        auto it = bucket.find(masked);
        if (it != bucket.end()) return it->second;
    }
    return std::nullopt;
}

AsDistribution as_cdf(const RibTable& table, const std::vector<Addr128>& addrs) {
    // ordered map gives a deterministic tie order (ascending ASN)
    std::map<std::uint32_t, std::uint64_t> counts;
    std::uint64_t unmapped = 0;
    for (Addr128 a : addrs) {
        if (auto asn = table.lookup_origin(a))
            ++counts[*asn];
        else
            ++unmapped;
    }

    AsDistribution dist;
    dist.total = addrs.size();
    for (const auto& [asn, count] : counts) dist.rows.push_back(AsRow{asn, count, 0.0, 0.0});
    std::stable_sort(dist.rows.begin(), dist.rows.end(),
                     [](const AsRow& a, const AsRow& b) { return a.count > b.count; });
    if (unmapped > 0) dist.rows.push_back(AsRow{std::nullopt, unmapped, 0.0, 0.0});

    double cumulative = 0.0;
    for (auto& row : dist.rows) {
        row.share = dist.total == 0 ? 0.0 : static_cast<double>(row.count) / static_cast<double>(dist.total);
        cumulative += row.share;
        row.cumulative_share = cumulative;
    }
    return dist;
}

void AsDistribution::write_csv(std::ostream& out) const {
    out << "asn,count,share,cumulative_share\n";
    char buf[64];
    for (const auto& row : rows) {
        if (row.asn)
            out << *row.asn;
        else
            out << "unmapped";
        std::snprintf(buf, sizeof buf, ",%llu,%.6f,%.6f", static_cast<unsigned long long>(row.count),
                      row.share, row.cumulative_share);
        out << buf << "\n";
    }
}

std::uint64_t distinct_as_count(const RibTable& table, const std::vector<Addr128>& addrs) {
    std::vector<std::uint32_t> seen;
    bool any_unmapped = false;
    for (Addr128 a : addrs) {
        if (auto asn = table.lookup_origin(a))
            seen.push_back(*asn);
        else
            any_unmapped = true;
    }
    sort_unique(seen);
    return seen.size() + (any_unmapped ? 1 : 0);
}

}  // namespace hitlist
