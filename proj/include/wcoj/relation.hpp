#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wcoj/rational.hpp"

namespace wcoj {

using Value = std::uint64_t;
using AttributeName = std::string;

// Values at or above this point are dictionary keys for interned strings;
// plain integers in the data must stay below it.
inline constexpr Value kStringKeyBase = Value{1} << 63;

// Maps external strings to value keys at load time. Shared by all relations
// of one database so joins across files agree on the encoding.
class StringDict {
public:
    Value intern(const std::string& s);
    // Reverse lookup; nullptr for plain integer values.
    const std::string* lookup(Value v) const;
    std::size_t size() const { return rev_.size(); }

private:
    std::unordered_map<std::string, Value> map_;
    std::vector<std::string> rev_;
};

// Per-execution operation counters.
struct Counters {
    std::uint64_t probes = 0;       // index seeks (galloping or binary searches)
    std::uint64_t emitted = 0;      // tuples materialized, intermediates included
    std::uint64_t comparisons = 0;  // value comparisons performed by seeks

    void reset() { *this = Counters{}; }
};

// Immutable set of tuples stored in one flat sorted array. Sort order is
// lexicographic over the schema order; there are no duplicate rows.
class Relation {
public:
    Relation() = default;

    // Sorts and deduplicates. Every row must have exactly schema.size() values.
    static Relation from_rows(std::string name, std::vector<AttributeName> schema,
                              const std::vector<std::vector<Value>>& rows);
    // Same, over a flat row-major buffer.
    static Relation from_flat(std::string name, std::vector<AttributeName> schema,
                              std::vector<Value> flat);

    const std::string& name() const { return name_; }
    const std::vector<AttributeName>& schema() const { return schema_; }
    int arity() const { return static_cast<int>(schema_.size()); }
    std::size_t size() const { return arity() == 0 ? (nullary_holds_ ? 1 : 0) : data_.size() / arity(); }
    bool empty() const { return size() == 0; }

    Value at(std::size_t row, int col) const { return data_[row * arity() + col]; }
    std::span<const Value> row(std::size_t r) const {
        return {data_.data() + r * arity(), static_cast<std::size_t>(arity())};
    }

    int column_index(const AttributeName& a) const;

    // Membership test by binary search. Counts one probe.
    bool contains(std::span<const Value> tuple, Counters* c = nullptr) const;

    // First row index whose leading prefix.size() values are >= / > prefix.
    std::size_t lower_bound_prefix(std::span<const Value> prefix, Counters* c = nullptr) const;
    std::size_t upper_bound_prefix(std::span<const Value> prefix, Counters* c = nullptr) const;

    Relation renamed(std::string name, std::vector<AttributeName> schema) const;

    bool operator==(const Relation& other) const {
        return schema_ == other.schema_ && data_ == other.data_ && nullary_holds_ == other.nullary_holds_;
    }

private:
    std::string name_;
    std::vector<AttributeName> schema_;
    std::vector<Value> data_;
    bool nullary_holds_ = false;  // arity-0 relation: either {} or {()}
};

// Rows of a base relation extending a bound prefix, in sorted order, with no
// copying of tuple payloads.
class PrefixView {
public:
    PrefixView(const Relation& base, std::size_t lo, std::size_t hi, int prefix_len)
        : base_(&base), lo_(lo), hi_(hi), prefix_len_(prefix_len) {}

    const Relation& base() const { return *base_; }
    std::size_t begin_row() const { return lo_; }
    std::size_t end_row() const { return hi_; }
    std::size_t size() const { return hi_ - lo_; }
    bool empty() const { return lo_ == hi_; }
    int prefix_len() const { return prefix_len_; }

private:
    const Relation* base_;
    std::size_t lo_, hi_;
    int prefix_len_;
};

// Distinct sorted values of one column over a row range in which all earlier
// columns are constant. Supports galloping seeks; each seek counts one probe.
class UnaryView {
public:
    UnaryView(const Relation& rel, std::size_t lo, std::size_t hi, int col)
        : rel_(&rel), lo_(lo), hi_(hi), col_(col), pos_(lo) {}

    static UnaryView over(const PrefixView& pv) {
        return UnaryView(pv.base(), pv.begin_row(), pv.end_row(), pv.prefix_len());
    }

    std::size_t size() const { return hi_ - lo_; }  // row count, >= distinct count
    bool at_end() const { return pos_ >= hi_; }
    Value value() const { return rel_->at(pos_, col_); }

    // Advances to the first value >= v (>): one probe each.
    void seek_ge(Value v, Counters* c);
    void seek_gt(Value v, Counters* c);
    void rewind() { pos_ = lo_; }

private:
    std::size_t gallop(Value v, bool strict, Counters* c);

    const Relation* rel_;
    std::size_t lo_, hi_;
    int col_;
    std::size_t pos_;
};

// --- relation operations ---------------------------------------------------

// CSV loader: UTF-8, first row carries attribute names, comma separated, no
// quoting. Header must match `schema` as a set; columns are permuted into
// schema order. Integer tokens become values directly, everything else is
// interned through `dict`.
Relation load_csv(const std::string& path, const std::vector<AttributeName>& schema,
                  StringDict& dict);

// Loader used when only the arity is dictated by the caller: columns keep the
// file order and are renamed positionally to `schema`.
Relation load_csv_positional(const std::string& path, const std::vector<AttributeName>& schema,
                             StringDict& dict);

void write_csv(const Relation& rel, const std::string& path, const StringDict* dict = nullptr);

// Duplicate-free sorted projection onto `attrs` (subset of the schema).
Relation project(const Relation& rel, const std::vector<AttributeName>& attrs);

// Rows of `rel` whose leading columns equal `binding`. O(log |rel|): two
// binary searches on the sorted store.
PrefixView prefix_select(const Relation& rel, std::span<const Value> binding,
                         Counters* c = nullptr);

// max over bindings t of X of |pi_Y(sigma_{X=t} rel)|, as column index sets.
// X must be a proper subset of Y. degree({}, Y) = |pi_Y rel|.
std::uint64_t degree(const Relation& rel, const std::vector<int>& x_cols,
                     const std::vector<int>& y_cols);
std::uint64_t degree(const Relation& rel, const std::vector<AttributeName>& x,
                     const std::vector<AttributeName>& y);

// Sorted intersection of single-attribute views by leapfrogging. Probe count
// is bounded by min-size * #views * (1 + ceil(log2 max-size)).
std::vector<Value> intersect_views(std::vector<UnaryView> views, Counters* c = nullptr);

// Tuples of rel whose projection onto the shared attributes appears in other.
// Schemas must share at least one attribute.
Relation semijoin(const Relation& rel, const Relation& other);

// Natural join; disjoint schemas produce the cartesian product. Output schema
// is left's schema followed by right's new attributes; output sorted, deduped.
Relation hash_join(const Relation& left, const Relation& right, Counters* c = nullptr);

// Splits rel by X-group size: heavy holds the tuples whose group has more
// than theta rows, light the rest. theta must be positive.
std::pair<Relation, Relation> partition_by_degree(const Relation& rel,
                                                  const std::vector<AttributeName>& x,
                                                  const Rat& theta);

}  // namespace wcoj
