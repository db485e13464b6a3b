#include "hitlist/scenario.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "hitlist/io.hpp"
#include "hitlist/util.hpp"

namespace hitlist {

std::optional<std::size_t> AliasedEntity::group_of(Addr128 a) const {
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (std::find(groups[i].begin(), groups[i].end(), a) != groups[i].end()) return i;
    return std::nullopt;
}

bool GfwSpec::covers(Addr128 a) const {
    return std::any_of(covered.begin(), covered.end(),
                       [&](const Prefix& p) { return p.contains(a); });
}

bool GfwSpec::blocks(const std::string& qname) const {
    return std::find(blocked_qnames.begin(), blocked_qnames.end(), qname) != blocked_qnames.end();
}

namespace {

// which stanza continuation lines (`group`, `covered`, `mac`, ...) attach to
enum class Attach { none, aliased, injector, fleet };

struct LineError {
    const std::string& origin;
    int lineno;

    [[noreturn]] void fail(const std::string& why) const {
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": " + why);
    }
};

std::uint64_t parse_u64(std::string_view tok, const LineError& err) {
    try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(std::string(tok), &used);
        if (used != tok.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        err.fail("expected an unsigned integer, got '" + std::string(tok) + "'");
    }
}

double parse_double(std::string_view tok, const LineError& err) {
    try {
        std::size_t used = 0;
        double v = std::stod(std::string(tok), &used);
        if (used != tok.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        err.fail("expected a number, got '" + std::string(tok) + "'");
    }
}

// `wscale=none` / `mss=none` mean "option absent"
int parse_opt_int(std::string_view val, const LineError& err) {
    if (val == "none") return -1;
    auto v = parse_u64(val, err);
    if (v > 0x7fffffffULL) err.fail("value out of range: '" + std::string(val) + "'");
    return static_cast<int>(v);
}

DnsMode parse_dns_mode(std::string_view val, const LineError& err) {
    if (val == "valid") return DnsMode::valid;
    if (val == "error") return DnsMode::error;
    if (val == "referral") return DnsMode::referral;
    err.fail("unknown dns mode '" + std::string(val) + "' (valid|error|referral)");
}

// shared key=value attributes of host and aliased stanzas; returns false for
// keys the caller must handle itself
bool apply_persona_key(std::string_view key, std::string_view val, TcpPersona& tcp,
                       DnsMode& dns, const LineError& err) {
    if (key == "dns") {
        dns = parse_dns_mode(val, err);
    } else if (key == "ttl") {
        auto v = parse_u64(val, err);
        if (v < 1 || v > 255) err.fail("ttl outside [1,255]");
        tcp.ttl = static_cast<int>(v);
    } else if (key == "window") {
        auto v = parse_u64(val, err);
        if (v > 0xffffffffULL) err.fail("window out of range");
        tcp.window = static_cast<std::uint32_t>(v);
    } else if (key == "wscale") {
        tcp.wscale = parse_opt_int(val, err);
    } else if (key == "mss") {
        tcp.mss = parse_opt_int(val, err);
    } else if (key == "options") {
        tcp.options_order = std::string(val);
    } else {
        return false;
    }
    return true;
}

std::uint32_t parse_ipv4_quad(std::string_view tok, const LineError& err) {
    std::uint32_t parts[4];
    std::size_t idx = 0, pos = 0;
    while (idx < 4) {
        std::size_t dot = tok.find('.', pos);
        std::string_view part =
            dot == std::string_view::npos ? tok.substr(pos) : tok.substr(pos, dot - pos);
        if (part.empty() || part.size() > 3) err.fail("bad IPv4 '" + std::string(tok) + "'");
        std::uint32_t v = 0;
        for (char c : part) {
            if (c < '0' || c > '9') err.fail("bad IPv4 '" + std::string(tok) + "'");
            v = v * 10 + static_cast<std::uint32_t>(c - '0');
        }
        if (v > 255) err.fail("bad IPv4 '" + std::string(tok) + "'");
        parts[idx++] = v;
        if (dot == std::string_view::npos) break;
        pos = dot + 1;
    }
    if (idx != 4 || tok.find('.', pos) != std::string_view::npos)
        err.fail("bad IPv4 '" + std::string(tok) + "'");
    return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

}  // namespace

Scenario Scenario::parse(const std::string& text, const std::string& origin) {
    Scenario sc;
    Attach attach = Attach::none;
    int lineno = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view raw = nl == std::string::npos
                                   ? std::string_view(text).substr(pos)
                                   : std::string_view(text).substr(pos, nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        LineError err{origin, lineno};

        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        std::string_view verb = tok[0];

        if (verb == "seed") {
            if (tok.size() != 2) err.fail("usage: seed <integer>");
            sc.seed = parse_u64(tok[1], err);
            attach = Attach::none;
        } else if (verb == "loss") {
            if (tok.size() != 2) err.fail("usage: loss <fraction>");
            sc.loss_rate = parse_double(tok[1], err);
            attach = Attach::none;
        } else if (verb == "host") {
            if (tok.size() < 3) err.fail("usage: host <addr> <protocols> [key=value ...]");
            HostSpec host;
            try {
                host.addr = parse_addr(tok[1]);
                host.protocols = ProtocolSet::parse(tok[2]);
            } catch (const std::invalid_argument& e) {
                err.fail(e.what());
            }
            for (std::size_t i = 3; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string_view::npos) err.fail("expected key=value, got '" + std::string(tok[i]) + "'");
                if (!apply_persona_key(tok[i].substr(0, eq), tok[i].substr(eq + 1), host.tcp,
                                       host.dns_mode, err))
                    err.fail("unknown host attribute '" + std::string(tok[i]) + "'");
            }
            sc.hosts.push_back(std::move(host));
            attach = Attach::none;
        } else if (verb == "aliased") {
            if (tok.size() < 4)
                err.fail("usage: aliased <prefix> <single_host|multi_host> <protocols> [key=value ...]");
            AliasedEntity ent;
            try {
                ent.prefix = Prefix::parse(tok[1]);
                ent.protocols = ProtocolSet::parse(tok[3]);
            } catch (const std::invalid_argument& e) {
                err.fail(e.what());
            }
            if (tok[2] == "single_host")
                ent.mode = AliasMode::single_host;
            else if (tok[2] == "multi_host")
                ent.mode = AliasMode::multi_host;
            else
                err.fail("unknown alias mode '" + std::string(tok[2]) + "'");
            for (std::size_t i = 4; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string_view::npos) err.fail("expected key=value, got '" + std::string(tok[i]) + "'");
                std::string_view key = tok[i].substr(0, eq), val = tok[i].substr(eq + 1);
                if (key == "vary") {
                    if (val == "none") ent.vary = PersonaVariation::none;
                    else if (val == "window") ent.vary = PersonaVariation::window;
                    else if (val == "options") ent.vary = PersonaVariation::options;
                    else err.fail("unknown vary mode '" + std::string(val) + "'");
                } else if (!apply_persona_key(key, val, ent.tcp, ent.dns_mode, err)) {
                    err.fail("unknown aliased attribute '" + std::string(tok[i]) + "'");
                }
            }
            sc.aliased.push_back(std::move(ent));
            attach = Attach::aliased;
        } else if (verb == "group") {
            if (attach != Attach::aliased) err.fail("'group' must follow an 'aliased' stanza");
            if (tok.size() < 3) err.fail("a group needs at least two addresses");
            std::vector<Addr128> members;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                try {
                    members.push_back(parse_addr(tok[i]));
                } catch (const std::invalid_argument& e) {
                    err.fail(e.what());
                }
            }
            sc.aliased.back().groups.push_back(std::move(members));
        } else if (verb == "injector") {
            if (sc.injector) err.fail("only one injector stanza allowed");
            GfwSpec spec;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string_view::npos || tok[i].substr(0, eq) != "replies")
                    err.fail("usage: injector replies=<n>");
                auto v = parse_u64(tok[i].substr(eq + 1), err);
                if (v < 1 || v > 1000) err.fail("replies outside [1,1000]");
                spec.replies_per_query = static_cast<int>(v);
            }
            sc.injector = std::move(spec);
            attach = Attach::injector;
        } else if (verb == "covered" || verb == "blocked" || verb == "answer") {
            if (attach != Attach::injector)
                err.fail("'" + std::string(verb) + "' must follow an 'injector' stanza");
            GfwSpec& spec = *sc.injector;
            if (verb == "covered") {
                if (tok.size() != 2) err.fail("usage: covered <prefix>");
                try {
                    spec.covered.push_back(Prefix::parse(tok[1]));
                } catch (const std::invalid_argument& e) {
                    err.fail(e.what());
                }
            } else if (verb == "blocked") {
                if (tok.size() != 2) err.fail("usage: blocked <qname>");
                spec.blocked_qnames.emplace_back(tok[1]);
            } else {
                if (tok.size() != 3 || (tok[1] != "a" && tok[1] != "aaaa"))
                    err.fail("usage: answer a <ipv4> | answer aaaa <ipv6>");
                if (tok[1] == "a") {
                    spec.answer_pool.push_back(ResourceRecord::a(parse_ipv4_quad(tok[2], err)));
                } else {
                    try {
                        spec.answer_pool.push_back(ResourceRecord::aaaa(parse_addr(tok[2])));
                    } catch (const std::invalid_argument& e) {
                        err.fail(e.what());
                    }
                }
            }
        } else if (verb == "fleet") {
            CpeFleet fleet;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string_view::npos || tok[i].substr(0, eq) != "rotation")
                    err.fail("usage: fleet rotation=<scans>");
                auto v = parse_u64(tok[i].substr(eq + 1), err);
                if (v < 1) err.fail("rotation must be >= 1");
                fleet.rotation_period = static_cast<std::uint32_t>(v);
            }
            sc.fleets.push_back(std::move(fleet));
            attach = Attach::fleet;
        } else if (verb == "mac" || verb == "pool") {
            if (attach != Attach::fleet)
                err.fail("'" + std::string(verb) + "' must follow a 'fleet' stanza");
            if (tok.size() != 2) err.fail("usage: " + std::string(verb) + " <value>");
            try {
                if (verb == "mac")
                    sc.fleets.back().macs.push_back(MacAddr::parse(tok[1]));
                else
                    sc.fleets.back().prefix_pool.push_back(Prefix::parse(tok[1]));
            } catch (const std::invalid_argument& e) {
                err.fail(e.what());
            }
        } else {
            err.fail("unknown directive '" + std::string(verb) + "'");
        }
    }

    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return sc;
}

Scenario Scenario::load(const std::filesystem::path& file) {
    return parse(read_whole_file(file), file.string());
}

void Scenario::validate() const {
    if (loss_rate < 0.0 || loss_rate >= 1.0)
        throw std::invalid_argument("loss_rate must lie in [0,1)");

    std::set<Addr128> host_addrs;
    for (const auto& h : hosts) {
        if (h.protocols.empty())
            throw std::invalid_argument("host " + format_addr(h.addr) + " has no protocols");
        if (!host_addrs.insert(h.addr).second)
            throw std::invalid_argument("duplicate host " + format_addr(h.addr));
    }

    // aliased prefixes and CPE pools must be pairwise disjoint address spaces
    std::vector<Prefix> spaces;
    for (const auto& e : aliased) spaces.push_back(e.prefix);
    for (const auto& f : fleets)
        for (const auto& p : f.prefix_pool) spaces.push_back(p);
    for (std::size_t i = 0; i < spaces.size(); ++i)
        for (std::size_t j = i + 1; j < spaces.size(); ++j)
            if (spaces[i].contains(spaces[j]) || spaces[j].contains(spaces[i]))
                throw std::invalid_argument("overlapping entities " + spaces[i].to_string() +
                                            " and " + spaces[j].to_string());
    for (const auto& h : hosts)
        for (const auto& p : spaces)
            if (p.contains(h.addr))
                throw std::invalid_argument("host " + format_addr(h.addr) +
                                            " lies inside entity " + p.to_string());

    for (const auto& e : aliased) {
        if (e.protocols.empty())
            throw std::invalid_argument("aliased " + e.prefix.to_string() + " has no protocols");
        if (e.mode == AliasMode::single_host) {
            if (!e.groups.empty())
                throw std::invalid_argument("single_host " + e.prefix.to_string() +
                                            " cannot carry groups");
            if (e.vary != PersonaVariation::none)
                throw std::invalid_argument("single_host " + e.prefix.to_string() +
                                            " cannot vary its persona");
        }
        std::set<Addr128> seen;
        for (const auto& g : e.groups) {
            if (g.size() < 2)
                throw std::invalid_argument("group in " + e.prefix.to_string() +
                                            " needs at least two addresses");
            for (Addr128 a : g) {
                if (!e.prefix.contains(a))
                    throw std::invalid_argument("group member " + format_addr(a) +
                                                " outside " + e.prefix.to_string());
                if (!seen.insert(a).second)
                    throw std::invalid_argument("address " + format_addr(a) +
                                                " appears in two groups of " +
                                                e.prefix.to_string());
            }
        }
    }

    if (injector) {
        if (!injector->covered.empty() && injector->answer_pool.empty())
            throw std::invalid_argument("injector covers prefixes but has an empty answer pool");
        for (const auto& r : injector->answer_pool)
            if (r.type != RrType::a && r.type != RrType::aaaa)
                throw std::invalid_argument("injector answer pool holds a non-address record");
    }

    for (const auto& f : fleets) {
        if (f.macs.empty()) throw std::invalid_argument("fleet without MACs");
        if (f.prefix_pool.empty()) throw std::invalid_argument("fleet without pool prefixes");
        for (const auto& p : f.prefix_pool)
            if (p.length() != 64)
                throw std::invalid_argument("fleet pool prefix " + p.to_string() +
                                            " must be a /64");
        std::set<MacAddr> macs(f.macs.begin(), f.macs.end());
        if (macs.size() != f.macs.size())
            throw std::invalid_argument("duplicate MAC in fleet");
    }
}

const HostSpec* Scenario::find_host(Addr128 a) const {
    for (const auto& h : hosts)
        if (h.addr == a) return &h;
    return nullptr;
}

const AliasedEntity* Scenario::find_aliased(Addr128 a) const {
    for (const auto& e : aliased)
        if (e.prefix.contains(a)) return &e;
    return nullptr;
}

}  // namespace hitlist
