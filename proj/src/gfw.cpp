#include "hitlist/gfw.hpp"

#include <fstream>
#include <stdexcept>

#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

namespace {

constexpr std::string_view kClassNames[] = {
    "valid_aaaa",     "error_status",    "referral",       "injected_a_record",
    "injected_teredo", "injected_multi", "incorrect_other",
};

}  // namespace

std::string_view dns_class_name(DnsClass c) {
    return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<DnsClass> dns_class_from_name(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kClassNames); ++i)
        if (kClassNames[i] == name) return static_cast<DnsClass>(i);
    return std::nullopt;
}

bool is_injected(DnsClass c) {
    return c == DnsClass::injected_a_record || c == DnsClass::injected_teredo ||
           c == DnsClass::injected_multi;
}

bool is_retained(DnsClass c) {
    return c == DnsClass::valid_aaaa || c == DnsClass::error_status || c == DnsClass::referral;
}

DnsVerdict classify_dns_response(std::string_view qname,
                                 const std::vector<ProbeResponse>& responses,
                                 std::optional<Addr128> expected_aaaa) {
    if (responses.empty())
        throw std::invalid_argument("classify_dns_response: no responses for query " +
                                    std::string(qname));

    std::vector<const ProbeResponse*> replies;
    for (const auto& r : responses) {
        if (r.kind == ResponseKind::dns_reply) {
            replies.push_back(&r);
        } else if (r.kind != ResponseKind::timeout) {
            throw std::invalid_argument("classify_dns_response: non-DNS response kind for query " +
                                        std::string(qname));
        }
    }

    const Prefix teredo = teredo_prefix();
    std::vector<ResourceRecord> teredo_answers;
    std::vector<ResourceRecord> a_answers;
    std::vector<ResourceRecord> all_answers;
    for (const ProbeResponse* r : replies) {
        for (const auto& rec : r->answers) {
            all_answers.push_back(rec);
            if (rec.type == RrType::a) a_answers.push_back(rec);
            if (rec.type == RrType::aaaa && teredo.contains(rec.aaaa_data))
                teredo_answers.push_back(rec);
        }
    }

    // Injection evidence first, most specific class first. A flood of
    // replies whose answers sit in the Teredo /32 reads as injected_teredo,
    // not injected_multi.
    if (!teredo_answers.empty()) return {DnsClass::injected_teredo, std::move(teredo_answers)};
    if (!a_answers.empty()) return {DnsClass::injected_a_record, std::move(a_answers)};
    if (replies.size() > 1) return {DnsClass::injected_multi, std::move(all_answers)};

    if (replies.empty()) return {DnsClass::incorrect_other, {}};

    const ProbeResponse& reply = *replies.front();
    if (reply.rcode == 0) {
        std::vector<ResourceRecord> genuine;
        for (const auto& rec : reply.answers)
            if (rec.type == RrType::aaaa) genuine.push_back(rec);
        if (!genuine.empty()) {
            bool matches = !expected_aaaa.has_value();
            for (const auto& rec : genuine)
                if (expected_aaaa && rec.aaaa_data == *expected_aaaa) matches = true;
            if (matches) return {DnsClass::valid_aaaa, std::move(genuine)};
            return {DnsClass::incorrect_other, std::move(genuine)};
        }
    }
    if (reply.rcode != 0) return {DnsClass::error_status, reply.answers};
    if (reply.referral) return {DnsClass::referral, reply.answers};
    return {DnsClass::incorrect_other, reply.answers};
}

namespace {

const DnsVerdict& verdict_for(const VerdictMap& verdicts, Addr128 a) {
    auto it = verdicts.find(a);
    if (it == verdicts.end())
        throw std::runtime_error("no DNS verdict for UDP53-responsive address " + format_addr(a));
    return it->second;
}

}  // namespace

ScanRecord clean_scan(const ScanRecord& record, const VerdictMap& verdicts) {
    ScanRecord out = record;
    auto& udp53 = out.responsive(Protocol::udp53);
    std::vector<Addr128> kept;
    kept.reserve(udp53.size());
    for (Addr128 a : udp53)
        if (is_retained(verdict_for(verdicts, a).cls)) kept.push_back(a);
    udp53 = std::move(kept);
    return out;
}

std::vector<ScanRecord> historical_clean(
    const std::vector<ScanRecord>& records,
    const std::map<std::uint32_t, VerdictMap>& verdicts_by_scan) {
    static const VerdictMap kEmpty;
    std::vector<ScanRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        auto it = verdicts_by_scan.find(rec.scan_id);
        out.push_back(clean_scan(rec, it == verdicts_by_scan.end() ? kEmpty : it->second));
    }
    return out;
}

std::vector<Addr128> TaintState::filter_list() const {
    std::vector<Addr128> out;
    out.reserve(injected_.size());
    for (Addr128 a : injected_)
        if (other_responsive_.count(a) == 0) out.push_back(a);
    std::sort(out.begin(), out.end());
    return out;
}

void update_taint(TaintState& state, const ScanRecord& record, const VerdictMap& verdicts) {
    for (Addr128 a : record.responsive(Protocol::udp53))
        if (is_injected(verdict_for(verdicts, a).cls)) state.note_injected(a);
    for (Protocol p : kAllProtocols) {
        if (p == Protocol::udp53) continue;
        for (Addr128 a : record.responsive(p)) state.note_other_responsive(a);
    }
}

void write_verdict_csv(std::ostream& out, const VerdictMap& verdicts) {
    out << "addr,class\n";
    for (const auto& [addr, verdict] : verdicts)
        out << format_addr(addr) << ',' << dns_class_name(verdict.cls) << '\n';
}

void write_verdict_csv(const std::filesystem::path& file, const VerdictMap& verdicts) {
    auto out = open_output(file);
    write_verdict_csv(out, verdicts);
}

VerdictMap load_verdict_csv(const std::filesystem::path& file) {
    VerdictMap out;
    bool saw_header = false;
    for_each_data_line(file, [&](int lineno, std::string_view line) {
        if (!saw_header) {
            if (line != "addr,class")
                throw std::runtime_error(file.string() + ": expected addr,class header, got \"" +
                                         std::string(line) + "\"");
            saw_header = true;
            return;
        }
        auto fields = split_char(line, ',');
        if (fields.size() != 2)
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": expected addr,class");
        Addr128 addr = parse_addr(fields[0]);
        auto cls = dns_class_from_name(fields[1]);
        if (!cls)
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                     ": unknown verdict class \"" + std::string(fields[1]) + "\"");
        out[addr] = DnsVerdict{*cls, {}};
    });
    if (!saw_header) throw std::runtime_error(file.string() + ": missing addr,class header");
    return out;
}

}  // namespace hitlist
