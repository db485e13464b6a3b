#ifndef HITLIST_UTIL_HPP
#define HITLIST_UTIL_HPP

#include <algorithm>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace hitlist {

// Address sets are carried as sorted, duplicate-free vectors throughout the
// pipeline; these helpers keep that invariant.

template <typename T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <typename T>
bool sorted_contains(const std::vector<T>& v, const T& x) {
    return std::binary_search(v.begin(), v.end(), x);
}

template <typename T>
std::vector<T> sorted_union(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

template <typename T>
std::vector<T> sorted_difference(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

template <typename T>
std::vector<T> sorted_intersection(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::string_view trim(std::string_view s);

/// whitespace-separated tokens of a line
std::vector<std::string_view> split_ws(std::string_view s);

std::vector<std::string_view> split_char(std::string_view s, char sep);

/// days since 1970-01-01 for a proleptic Gregorian date
long long days_from_civil(int year, unsigned month, unsigned day);

/// "YYYY-MM-DD" for a days-since-1970 count
std::string format_iso_date(long long days);

/// parses "YYYY-MM-DD"; throws std::invalid_argument on malformed input
long long parse_iso_date(std::string_view text);

/// minimal CSV field quoting (commas, quotes, newlines)
std::string csv_field(std::string_view s);

}  // namespace hitlist

#endif  // HITLIST_UTIL_HPP
