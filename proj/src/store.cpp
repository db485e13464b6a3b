#include "hitlist/store.hpp"

#include <fstream>
#include <stdexcept>

#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

std::optional<std::uint32_t> AddressInfo::last_responsive_any() const {
    std::optional<std::uint32_t> best;
    for (const auto& v : last_responsive)
        if (v && (!best || *v > *best)) best = v;
    return best;
}

void CandidateStore::ingest(const std::vector<Addr128>& addrs, std::string_view label,
                            std::uint32_t now_scan) {
    for (Addr128 a : addrs) {
        auto [it, inserted] = map_.try_emplace(a);
        if (inserted) it->second.first_seen = now_scan;
        auto& sources = it->second.sources;
        std::string tag(label);
        auto pos = std::lower_bound(sources.begin(), sources.end(), tag);
        if (pos == sources.end() || *pos != tag) sources.insert(pos, std::move(tag));
    }
}

const AddressInfo* CandidateStore::find(Addr128 a) const {
    auto it = map_.find(a);
    return it == map_.end() ? nullptr : &it->second;
}

std::vector<Addr128> CandidateStore::addresses() const {
    std::vector<Addr128> out;
    out.reserve(map_.size());
    for (const auto& [a, info] : map_) out.push_back(a);
    return out;
}

namespace {

AddressInfo& known(std::map<Addr128, AddressInfo>& map, Addr128 a, const char* op) {
    auto it = map.find(a);
    if (it == map.end())
        throw std::logic_error(std::string(op) + ": address " + format_addr(a) +
                               " is not in the store");
    return it->second;
}

}  // namespace

void CandidateStore::note_probed(Addr128 a, std::uint32_t scan_id) {
    AddressInfo& info = known(map_, a, "note_probed");
    if (info.last_probed && *info.last_probed > scan_id)
        throw std::logic_error("note_probed: scan ids must not go backwards for " +
                               format_addr(a));
    info.last_probed = scan_id;
}

void CandidateStore::note_responsive(Addr128 a, Protocol p, std::uint32_t scan_id) {
    AddressInfo& info = known(map_, a, "note_responsive");
    if (!info.last_probed || *info.last_probed < scan_id)
        throw std::logic_error("note_responsive: " + format_addr(a) + " was not probed in scan " +
                               std::to_string(scan_id));
    auto& slot = info.last_responsive[static_cast<std::size_t>(p)];
    if (slot && *slot > scan_id)
        throw std::logic_error("note_responsive: scan ids must not go backwards for " +
                               format_addr(a));
    slot = scan_id;
}

void CandidateStore::note_injected(Addr128 a) {
    known(map_, a, "note_injected").ever_injected = true;
}

bool CandidateStore::gfw_filtered(Addr128 a) const {
    const AddressInfo* info = find(a);
    if (!info || !info->ever_injected) return false;
    for (Protocol p : kAllProtocols) {
        if (p == Protocol::udp53) continue;
        if (info->last_responsive[static_cast<std::size_t>(p)]) return false;
    }
    return true;
}

std::vector<Addr128> CandidateStore::gfw_filter_list() const {
    std::vector<Addr128> out;
    for (const auto& [a, info] : map_)
        if (info.ever_injected && gfw_filtered(a)) out.push_back(a);
    return out;
}

std::vector<Addr128> CandidateStore::ever_responsive_set() const {
    std::vector<Addr128> out;
    for (const auto& [a, info] : map_)
        if (info.ever_responsive()) out.push_back(a);
    return out;
}

void CandidateStore::for_each(
    const std::function<void(Addr128, const AddressInfo&)>& fn) const {
    for (const auto& [a, info] : map_) fn(a, info);
}

// One row per address:
// `addr<TAB>sources<TAB>first_seen<TAB>last_probed<TAB>proto:scan,...<TAB>gfw_flag`
// with "-" for empty fields. The flag persists ever_injected — the
// filtered verdict is derived, so an address that later proves itself
// stays unfiltered across reloads.
void CandidateStore::save(const std::filesystem::path& file) const {
    std::ofstream out = open_output(file);
    out << "addr\tsources\tfirst_seen\tlast_probed\tlast_responsive\tgfw_flag\n";
    for (const auto& [a, info] : map_) {
        out << format_addr(a) << '\t';
        for (std::size_t i = 0; i < info.sources.size(); ++i)
            out << (i ? "," : "") << info.sources[i];
        out << '\t' << info.first_seen << '\t';
        if (info.last_probed)
            out << *info.last_probed;
        else
            out << '-';
        out << '\t';
        bool any = false;
        for (Protocol p : kAllProtocols) {
            const auto& slot = info.last_responsive[static_cast<std::size_t>(p)];
            if (!slot) continue;
            out << (any ? "," : "") << protocol_name(p) << ':' << *slot;
            any = true;
        }
        if (!any) out << '-';
        out << '\t' << (info.ever_injected ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + file.string());
}

CandidateStore CandidateStore::load(const std::filesystem::path& file) {
    CandidateStore store;
    bool have_header = false;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " + why);
        };
        auto fields = split_char(line, '\t');
        if (!have_header) {
            if (fields.size() != 6 || fields[0] != "addr") fail("unrecognized store header");
            have_header = true;
            return;
        }
        if (fields.size() != 6) fail("expected 6 tab-separated fields");

        Addr128 a = parse_addr(fields[0]);
        AddressInfo info;
        if (!fields[1].empty())
            for (auto s : split_char(fields[1], ',')) info.sources.emplace_back(s);
        sort_unique(info.sources);
        info.first_seen = static_cast<std::uint32_t>(std::stoul(std::string(fields[2])));
        if (fields[3] != "-")
            info.last_probed = static_cast<std::uint32_t>(std::stoul(std::string(fields[3])));
        if (fields[4] != "-") {
            for (auto entry : split_char(fields[4], ',')) {
                auto kv = split_char(entry, ':');
                if (kv.size() != 2) fail("malformed last_responsive entry");
                auto p = protocol_from_name(kv[0]);
                if (!p) fail("unknown protocol \"" + std::string(kv[0]) + "\"");
                info.last_responsive[static_cast<std::size_t>(*p)] =
                    static_cast<std::uint32_t>(std::stoul(std::string(kv[1])));
            }
        }
        if (fields[5] == "1")
            info.ever_injected = true;
        else if (fields[5] != "0")
            fail("gfw_flag must be 0 or 1");

        for (const auto& slot : info.last_responsive) {
            if (slot && (!info.last_probed || *slot > *info.last_probed))
                fail("last_responsive after last_probed for " + format_addr(a));
        }
        if (info.last_probed && info.first_seen > *info.last_probed)
            fail("first_seen after last_probed for " + format_addr(a));
        if (!store.map_.emplace(a, std::move(info)).second)
            fail("duplicate address " + format_addr(a));
    });
    if (!have_header) throw std::runtime_error(file.string() + ": missing store header");
    return store;
}

}  // namespace hitlist
