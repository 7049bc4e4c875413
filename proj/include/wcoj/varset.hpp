#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wcoj {

// A set of query variables as a bitmask over vertex indices 0..n-1.
// Queries are capped well below 64 variables, so one word suffices.
using VarSet = std::uint64_t;

inline VarSet var_bit(int i) { return VarSet{1} << i; }
inline bool var_in(VarSet s, int i) { return (s >> i) & 1; }
inline int varset_size(VarSet s) { return __builtin_popcountll(s); }
inline bool subset_of(VarSet a, VarSet b) { return (a & ~b) == 0; }
inline bool proper_subset_of(VarSet a, VarSet b) { return a != b && subset_of(a, b); }
// I and J are incomparable: neither contains the other.
inline bool crossing(VarSet i, VarSet j) { return !subset_of(i, j) && !subset_of(j, i); }
inline VarSet full_set(int n) { return n == 64 ? ~VarSet{0} : (VarSet{1} << n) - 1; }

inline std::vector<int> varset_members(VarSet s) {
    std::vector<int> out;
    while (s) {
        int i = __builtin_ctzll(s);
        out.push_back(i);
        s &= s - 1;
    }
    return out;
}

// Maps vertex indices to attribute names and back.
class VarTable {
public:
    VarTable() = default;
    explicit VarTable(std::vector<std::string> names) : names_(std::move(names)) {}

    int size() const { return static_cast<int>(names_.size()); }
    const std::string& name(int i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }

    // Returns -1 when the name is unknown.
    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (names_[i] == name) return i;
        return -1;
    }

    // Renders {A,C} style set notation with members in index order.
    std::string set_to_string(VarSet s) const {
        std::string out = "{";
        bool first = true;
        for (int i : varset_members(s)) {
            if (!first) out += ",";
            first = false;
            out += name(i);
        }
        out += "}";
        return out;
    }

    std::vector<std::string> set_to_names(VarSet s) const {
        std::vector<std::string> out;
        for (int i : varset_members(s)) out.push_back(name(i));
        return out;
    }

private:
    std::vector<std::string> names_;
};

}  // namespace wcoj
