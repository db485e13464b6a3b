#ifndef HITLIST_SCAN_RECORD_HPP
#define HITLIST_SCAN_RECORD_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hitlist/addr.hpp"

namespace hitlist {

/// Outcome of one scan round: who was probed and who answered, per
/// protocol. Address vectors are sorted and duplicate-free; every
/// responsive set is a subset of `probed`.
struct ScanRecord {
    std::uint32_t scan_id = 0;
    std::int64_t date = 0;  // days since 1970-01-01
    std::vector<Addr128> probed;
    std::array<std::vector<Addr128>, 5> responsive_by_protocol{};

    std::vector<Addr128>& responsive(Protocol p) {
        return responsive_by_protocol[static_cast<std::size_t>(p)];
    }
    const std::vector<Addr128>& responsive(Protocol p) const {
        return responsive_by_protocol[static_cast<std::size_t>(p)];
    }

    /// union of the five responsive sets
    std::vector<Addr128> responsive_any() const;

    bool is_responsive(Addr128 a) const;

    /// throws std::runtime_error on an out-of-order, duplicated or
    /// non-subset responsive entry
    void validate() const;

    void save(const std::filesystem::path& file) const;
    static ScanRecord load(const std::filesystem::path& file);
};

}  // namespace hitlist

#endif  // HITLIST_SCAN_RECORD_HPP
