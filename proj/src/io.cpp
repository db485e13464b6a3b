#include "hitlist/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hitlist/util.hpp"

namespace hitlist {

void for_each_data_line(const std::filesystem::path& file,
                        const std::function<void(int, std::string_view)>& fn) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = line;
        std::size_t hash = body.find('#');
        if (hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        fn(lineno, body);
    }
}

std::vector<Addr128> read_address_file(const std::filesystem::path& file) {
    std::vector<Addr128> out;
    for_each_data_line(file, [&](int lineno, std::string_view body) {
        try {
            out.push_back(parse_addr(body));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    sort_unique(out);
    return out;
}

std::vector<Prefix> read_prefix_file(const std::filesystem::path& file) {
    std::vector<Prefix> out;
    for_each_data_line(file, [&](int lineno, std::string_view body) {
        try {
            out.push_back(Prefix::parse(body));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    });
    sort_unique(out);
    return out;
}

void write_address_file(const std::filesystem::path& file, const std::vector<Addr128>& addrs) {
    auto out = open_output(file);
    for (Addr128 a : addrs) out << format_addr(a) << '\n';
}

void write_prefix_file(const std::filesystem::path& file, const std::vector<Prefix>& prefixes) {
    auto out = open_output(file);
    for (const Prefix& p : prefixes) out << p.to_string() << '\n';
}

std::string read_whole_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_output(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    return out;
}

}  // namespace hitlist
