#include "hitlist/scan_record.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

std::vector<Addr128> ScanRecord::responsive_any() const {
    std::vector<Addr128> all;
    for (const auto& v : responsive_by_protocol) all = sorted_union(all, v);
    return all;
}

bool ScanRecord::is_responsive(Addr128 a) const {
    for (const auto& v : responsive_by_protocol)
        if (sorted_contains(v, a)) return true;
    return false;
}

void ScanRecord::validate() const {
    auto check_sorted = [](const std::vector<Addr128>& v, const char* what) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i - 1] < v[i]))
                throw std::runtime_error(std::string("scan record: ") + what +
                                         " set is not strictly sorted");
        }
    };
    check_sorted(probed, "probed");
    for (Protocol p : kAllProtocols) {
        const auto& v = responsive(p);
        check_sorted(v, protocol_name(p).data());
        for (Addr128 a : v) {
            if (!sorted_contains(probed, a))
                throw std::runtime_error("scan record: " + format_addr(a) + " responsive on " +
                                         std::string(protocol_name(p)) + " but never probed");
        }
    }
}

// One header line `scan <id> <date-days>` and one row per probed address:
// `<addr>\t<protocols>` with "-" for unresponsive.
void ScanRecord::save(const std::filesystem::path& file) const {
    validate();
    std::ofstream out = open_output(file);
    out << "scan\t" << scan_id << "\t" << date << "\n";
    for (Addr128 a : probed) {
        ProtocolSet set;
        for (Protocol p : kAllProtocols)
            if (sorted_contains(responsive(p), a)) set.insert(p);
        out << format_addr(a) << "\t" << (set.empty() ? "-" : set.to_string()) << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + file.string());
}

ScanRecord ScanRecord::load(const std::filesystem::path& file) {
    ScanRecord rec;
    bool have_header = false;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        auto fields = split_char(line, '\t');
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + why);
        };
        if (!have_header) {
            if (fields.size() != 3 || fields[0] != "scan") fail("expected `scan <id> <date>` header");
            rec.scan_id = static_cast<std::uint32_t>(std::stoul(std::string(fields[1])));
            rec.date = std::stoll(std::string(fields[2]));
            have_header = true;
            return;
        }
        if (fields.size() != 2) fail("expected `<addr>\\t<protocols>`");
        Addr128 a = parse_addr(fields[0]);
        rec.probed.push_back(a);
        if (fields[1] != "-") {
            ProtocolSet set = ProtocolSet::parse(fields[1]);
            for (Protocol p : kAllProtocols)
                if (set.contains(p)) rec.responsive(p).push_back(a);
        }
    });
    if (!have_header) throw std::runtime_error(file.string() + ": empty scan record");
    sort_unique(rec.probed);
    for (auto& v : rec.responsive_by_protocol) sort_unique(v);
    rec.validate();
    return rec;
}

}  // namespace hitlist
