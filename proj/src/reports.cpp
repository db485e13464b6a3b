#include "hitlist/reports.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <ostream>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "hitlist/apd.hpp"
#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

ResponsivenessTable responsiveness_table(const ScanRecord& record, const RibTable& rib) {
    ResponsivenessTable table;
    for (Protocol p : kAllProtocols) {
        const auto& set = record.responsive(p);
        table.by_protocol[static_cast<std::size_t>(p)] = {set.size(),
                                                          distinct_as_count(rib, set)};
    }
    const auto any = record.responsive_any();
    table.total = {any.size(), distinct_as_count(rib, any)};
    return table;
}

void ResponsivenessTable::write_csv(std::ostream& out) const {
    out << "protocol,addresses,ases\n";
    for (Protocol p : kAllProtocols) {
        const ResponsivenessRow& r = row(p);
        out << protocol_name(p) << ',' << r.addr_count << ',' << r.as_count << '\n';
    }
    out << "total," << total.addr_count << ',' << total.as_count << '\n';
}

OverlapMatrix overlap_matrix(
    const std::vector<std::pair<std::string, std::vector<Addr128>>>& sets) {
    std::vector<std::vector<Addr128>> clean;
    OverlapMatrix m;
    for (const auto& [name, addrs] : sets) {
        m.names.push_back(name);
        std::vector<Addr128> c = addrs;
        sort_unique(c);
        clean.push_back(std::move(c));
    }
    m.cells.resize(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        m.cells[i].resize(clean.size());
        if (clean[i].empty()) continue;  // whole row stays undefined
        for (std::size_t j = 0; j < clean.size(); ++j) {
            const std::size_t common = sorted_intersection(clean[i], clean[j]).size();
            m.cells[i][j] = 100.0 * static_cast<double>(common) /
                            static_cast<double>(clean[i].size());
        }
    }
    return m;
}

void OverlapMatrix::write_csv(std::ostream& out) const {
    out << "set";
    for (const auto& name : names) out << ',' << csv_field(name);
    out << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << csv_field(names[i]);
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (cells[i][j]) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.1f", *cells[i][j]);
                out << ',' << buf;
            } else {
                out << ",-";
            }
        }
        out << '\n';
    }
}

namespace {

using BigInt = boost::multiprecision::cpp_int;

BigInt prefix_span(const Prefix& p) { return BigInt(1) << (128 - p.length()); }

BigInt collapsed_span_sum(std::vector<Prefix> prefixes) {
    BigInt sum = 0;
    for (const Prefix& p : collapse(std::move(prefixes))) sum += prefix_span(p);
    return sum;
}

double big_log2(const BigInt& v) {
    return static_cast<double>(std::log2(v.convert_to<long double>()));
}

}  // namespace

AliasedFractionReport aliased_fraction_report(std::vector<Prefix> aliased,
                                              const RibTable& rib) {
    AliasedFractionReport report;

    std::map<std::uint32_t, BigInt> aliased_sum;
    for (const Prefix& p : collapse(std::move(aliased))) {
        if (auto asn = rib.lookup_origin(p.base()))
            aliased_sum[*asn] += prefix_span(p);
        else
            report.unattributed.push_back(p);
    }

    std::map<std::uint32_t, std::vector<Prefix>> announced;
    for (const RibEntry& e : rib.entries()) announced[e.asn].push_back(e.prefix);

    for (const auto& [asn, sum] : aliased_sum) {
        AliasedAsRow row;
        row.asn = asn;
        row.aliased_log2 = big_log2(sum);
        auto it = announced.find(asn);
        if (it == announced.end()) {
            row.announced_missing = true;  // aliased space without any announcement
        } else {
            // collapse so nested announcements of one AS don't double-count
            const BigInt denom = collapsed_span_sum(it->second);
            row.fraction = static_cast<double>(sum.convert_to<long double>() /
                                               denom.convert_to<long double>());
        }
        report.rows.push_back(row);
    }

    std::sort(report.rows.begin(), report.rows.end(),
              [](const AliasedAsRow& a, const AliasedAsRow& b) {
                  if (a.fraction != b.fraction) return a.fraction > b.fraction;
                  return a.asn < b.asn;
              });
    return report;
}

void AliasedFractionReport::write_csv(std::ostream& out) const {
    out << "asn,aliased_log2,fraction\n";
    for (const AliasedAsRow& row : rows) {
        char log_buf[32];
        std::snprintf(log_buf, sizeof log_buf, "%.2f", row.aliased_log2);
        out << row.asn << ',' << log_buf << ',';
        if (row.announced_missing) {
            out << "-\n";
            continue;
        }
        char frac_buf[48];
        std::snprintf(frac_buf, sizeof frac_buf, "%.6g", row.fraction);
        out << frac_buf << '\n';
    }
}

DomainsReport domains_in_aliased(const std::filesystem::path& resolutions,
                                 std::vector<Prefix> aliased, const RibTable& rib) {
    const std::vector<Prefix> collapsed = collapse(std::move(aliased));

    std::map<std::string, std::set<Prefix>> placements;
    for_each_data_line(resolutions, [&](int lineno, std::string_view line) {
        auto fields = split_char(line, '\t');
        if (fields.size() != 2 || fields[0].empty())
            throw std::runtime_error(resolutions.string() + ":" + std::to_string(lineno) +
                                     ": expected `domain<TAB>address`");
        if (auto p = covering_prefix(collapsed, parse_addr(fields[1])))
            placements[std::string(fields[0])].insert(*p);
    });

    DomainsReport report;
    report.domains_in_any = placements.size();
    for (const auto& [domain, prefixes] : placements)
        for (const Prefix& p : prefixes) report.per_prefix[p] += 1;
    for (const auto& [p, count] : report.per_prefix) {
        if (auto asn = rib.lookup_origin(p.base()))
            report.per_as[*asn] += count;
        else
            report.unattributed += count;
    }
    return report;
}

void DomainsReport::write_prefix_csv(std::ostream& out) const {
    out << "prefix,domains\n";
    for (const auto& [p, count] : per_prefix) out << p.to_string() << ',' << count << '\n';
}

void DomainsReport::write_as_csv(std::ostream& out) const {
    out << "asn,domains\n";
    for (const auto& [asn, count] : per_as) out << asn << ',' << count << '\n';
    if (unattributed) out << "unmapped," << unattributed << '\n';
}

OuiTable OuiTable::load(const std::filesystem::path& file) {
    OuiTable table;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + why);
        };
        auto fields = split_char(line, '\t');
        if (fields.size() != 2 || fields[1].empty()) fail("expected `oui<TAB>vendor`");
        const std::string_view oui = fields[0];
        if (oui.size() != 6) fail("OUI must be 6 hex digits");
        for (char c : oui)
            if (!std::isxdigit(static_cast<unsigned char>(c))) fail("OUI must be 6 hex digits");
        table.insert(oui, std::string(fields[1]));
    });
    return table;
}

void OuiTable::insert(std::string_view oui_hex, std::string vendor) {
    std::string key(oui_hex);
    for (char& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!vendors_.emplace(std::move(key), std::move(vendor)).second)
        std::cerr << "oui: duplicate prefix " << oui_hex << ", keeping first entry\n";
}

std::string OuiTable::lookup(const MacAddr& mac) const {
    auto it = vendors_.find(mac.oui_hex());
    return it == vendors_.end() ? "unknown" : it->second;
}

std::vector<Eui64Group> eui64_report(const CandidateStore& store, const OuiTable& oui) {
    std::map<MacAddr, std::uint64_t> counts;
    store.for_each([&](Addr128 a, const AddressInfo&) {
        if (auto mac = eui64_extract(a)) counts[*mac] += 1;
    });

    std::vector<Eui64Group> groups;
    groups.reserve(counts.size());
    for (const auto& [mac, count] : counts) groups.push_back({mac, count, oui.lookup(mac)});
    std::sort(groups.begin(), groups.end(), [](const Eui64Group& a, const Eui64Group& b) {
        if (a.address_count != b.address_count) return a.address_count > b.address_count;
        return a.mac < b.mac;
    });
    return groups;
}

void write_eui64_csv(std::ostream& out, const std::vector<Eui64Group>& groups) {
    out << "mac,addresses,vendor\n";
    for (const Eui64Group& g : groups)
        out << g.mac.to_string() << ',' << g.address_count << ',' << csv_field(g.vendor) << '\n';
}

}  // namespace hitlist
