#ifndef HITLIST_IO_HPP
#define HITLIST_IO_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

/// Calls `fn(line_number, trimmed_line)` for every non-blank, non-comment
/// line ('#' starts a comment). Throws std::runtime_error if unreadable.
void for_each_data_line(const std::filesystem::path& file,
                        const std::function<void(int, std::string_view)>& fn);

/// one address per line; returns a sorted, duplicate-free set
std::vector<Addr128> read_address_file(const std::filesystem::path& file);

/// one prefix per line
std::vector<Prefix> read_prefix_file(const std::filesystem::path& file);

void write_address_file(const std::filesystem::path& file, const std::vector<Addr128>& addrs);
void write_prefix_file(const std::filesystem::path& file, const std::vector<Prefix>& prefixes);

std::string read_whole_file(const std::filesystem::path& file);

/// opens for writing, throws on failure
std::ofstream open_output(const std::filesystem::path& file);

}  // namespace hitlist

#endif  // HITLIST_IO_HPP
