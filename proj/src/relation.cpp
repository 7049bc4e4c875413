#include "wcoj/relation.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "wcoj/error.hpp"

namespace wcoj {

namespace {

// Lexicographic compare of two rows of equal arity.
int compare_rows(const Value* a, const Value* b, int arity) {
    for (int i = 0; i < arity; ++i) {
        if (a[i] < b[i]) return -1;
        if (a[i] > b[i]) return 1;
    }
    return 0;
}

struct RowKeyHash {
    std::size_t operator()(const std::vector<Value>& key) const {
        std::size_t h = 1469598103934665603ull;
        for (Value v : key) {
            h ^= std::hash<Value>{}(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

}  // namespace

Value StringDict::intern(const std::string& s) {
    auto it = map_.find(s);
    if (it != map_.end()) return it->second;
    Value key = kStringKeyBase + rev_.size();
    map_.emplace(s, key);
    rev_.push_back(s);
    return key;
}

const std::string* StringDict::lookup(Value v) const {
    if (v < kStringKeyBase) return nullptr;
    std::size_t idx = v - kStringKeyBase;
    if (idx >= rev_.size()) return nullptr;
    return &rev_[idx];
}

Relation Relation::from_rows(std::string name, std::vector<AttributeName> schema,
                             const std::vector<std::vector<Value>>& rows) {
    const int arity = static_cast<int>(schema.size());
    std::vector<Value> flat;
    flat.reserve(rows.size() * arity);
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != arity)
            fail(Errc::internal, "from_rows: row arity mismatch in relation " + name);
        flat.insert(flat.end(), r.begin(), r.end());
    }
    if (arity == 0) {
        Relation rel;
        rel.name_ = std::move(name);
        rel.nullary_holds_ = !rows.empty();
        return rel;
    }
    return from_flat(std::move(name), std::move(schema), std::move(flat));
}

Relation Relation::from_flat(std::string name, std::vector<AttributeName> schema,
                             std::vector<Value> flat) {
    const int arity = static_cast<int>(schema.size());
    if (arity == 0) fail(Errc::internal, "from_flat: zero-arity relation needs from_rows");
    if (flat.size() % arity != 0) fail(Errc::internal, "from_flat: ragged buffer");
    const std::size_t n = flat.size() / arity;

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const Value* base = flat.data();
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return compare_rows(base + a * arity, base + b * arity, arity) < 0;
    });

    Relation rel;
    rel.name_ = std::move(name);
    rel.schema_ = std::move(schema);
    rel.data_.reserve(flat.size());
    for (std::size_t k = 0; k < n; ++k) {
        const Value* r = base + idx[k] * arity;
        if (k > 0 && compare_rows(r, base + idx[k - 1] * arity, arity) == 0) continue;
        rel.data_.insert(rel.data_.end(), r, r + arity);
    }
    rel.data_.shrink_to_fit();
    return rel;
}

int Relation::column_index(const AttributeName& a) const {
    for (int i = 0; i < arity(); ++i)
        if (schema_[i] == a) return i;
    return -1;
}

bool Relation::contains(std::span<const Value> tuple, Counters* c) const {
    if (static_cast<int>(tuple.size()) != arity())
        fail(Errc::internal, "contains: arity mismatch");
    if (c) c->probes += 1;
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (c) c->comparisons += arity();
        int cmp = compare_rows(data_.data() + mid * arity(), tuple.data(), arity());
        if (cmp < 0)
            lo = mid + 1;
        else if (cmp > 0)
            hi = mid;
        else
            return true;
    }
    return false;
}

std::size_t Relation::lower_bound_prefix(std::span<const Value> prefix, Counters* c) const {
    if (c) c->probes += 1;
    const int plen = static_cast<int>(prefix.size());
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (c) c->comparisons += plen;
        if (compare_rows(data_.data() + mid * arity(), prefix.data(), plen) < 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

std::size_t Relation::upper_bound_prefix(std::span<const Value> prefix, Counters* c) const {
    if (c) c->probes += 1;
    const int plen = static_cast<int>(prefix.size());
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (c) c->comparisons += plen;
        if (compare_rows(data_.data() + mid * arity(), prefix.data(), plen) <= 0)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

Relation Relation::renamed(std::string name, std::vector<AttributeName> schema) const {
    if (schema.size() != schema_.size())
        fail(Errc::internal, "renamed: arity mismatch");
    Relation rel = *this;
    rel.name_ = std::move(name);
    rel.schema_ = std::move(schema);
    return rel;
}

// --- UnaryView --------------------------------------------------------------

std::size_t UnaryView::gallop(Value v, bool strict, Counters* c) {
    // Find the first row in [pos_, hi_) whose column value is >= v (or > v).
    auto past = [&](std::size_t r) {
        if (c) c->comparisons += 1;
        Value x = rel_->at(r, col_);
        return strict ? x > v : x >= v;
    };
    if (pos_ >= hi_ || past(pos_)) return pos_;
    std::size_t step = 1;
    std::size_t prev = pos_;
    std::size_t cur = pos_ + 1;
    while (cur < hi_ && !past(cur)) {
        prev = cur;
        step *= 2;
        cur = (hi_ - pos_ > step) ? pos_ + step : hi_;
        if (cur <= prev) cur = prev + 1;
    }
    // Invariant: value(prev) fails the test, value(cur) passes (or cur == hi_).
    std::size_t lo = prev + 1, hi = cur;
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (past(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

void UnaryView::seek_ge(Value v, Counters* c) {
    if (c) c->probes += 1;
    pos_ = gallop(v, false, c);
}

void UnaryView::seek_gt(Value v, Counters* c) {
    if (c) c->probes += 1;
    pos_ = gallop(v, true, c);
}

// --- CSV --------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

Value parse_value(const std::string& token, StringDict& dict, const std::string& path, int lineno) {
    if (!token.empty() && token.find_first_not_of("0123456789") == std::string::npos) {
        Value v = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || v >= kStringKeyBase)
            fail(Errc::parse, path + ":" + std::to_string(lineno) +
                                  ": integer value out of range: " + token);
        return v;
    }
    return dict.intern(token);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse, "cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

Relation load_csv_impl(const std::string& path, const std::vector<AttributeName>& schema,
                       StringDict& dict, bool positional) {
    auto lines = read_lines(path);
    if (lines.empty()) fail(Errc::parse, path + ": missing header row");

    auto header = split_csv_line(lines[0]);
    const int arity = static_cast<int>(schema.size());
    if (static_cast<int>(header.size()) != arity)
        fail(Errc::parse, path + ": header has " + std::to_string(header.size()) +
                              " columns, expected " + std::to_string(arity));

    // perm[j] = file column holding schema attribute j.
    std::vector<int> perm(arity);
    if (positional) {
        std::iota(perm.begin(), perm.end(), 0);
    } else {
        for (int j = 0; j < arity; ++j) {
            auto it = std::find(header.begin(), header.end(), schema[j]);
            if (it == header.end())
                fail(Errc::parse, path + ": header does not contain attribute '" + schema[j] + "'");
            perm[j] = static_cast<int>(it - header.begin());
        }
        auto sorted_header = header;
        auto sorted_schema = schema;
        std::sort(sorted_header.begin(), sorted_header.end());
        std::sort(sorted_schema.begin(), sorted_schema.end());
        if (sorted_header != sorted_schema)
            fail(Errc::parse, path + ": header does not match schema as a set");
    }

    std::vector<Value> flat;
    flat.reserve((lines.size() - 1) * arity);
    std::vector<Value> file_row(arity);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty() && i + 1 == lines.size()) break;  // trailing newline
        auto fields = split_csv_line(lines[i]);
        if (static_cast<int>(fields.size()) != arity)
            fail(Errc::parse, path + ":" + std::to_string(i + 1) + ": ragged row with " +
                                  std::to_string(fields.size()) + " fields");
        for (int j = 0; j < arity; ++j)
            file_row[j] = parse_value(fields[j], dict, path, static_cast<int>(i + 1));
        for (int j = 0; j < arity; ++j) flat.push_back(file_row[perm[j]]);
    }

    std::string name = path;
    std::size_t slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return Relation::from_flat(std::move(name), schema, std::move(flat));
}

}  // namespace

Relation load_csv(const std::string& path, const std::vector<AttributeName>& schema,
                  StringDict& dict) {
    return load_csv_impl(path, schema, dict, false);
}

Relation load_csv_positional(const std::string& path, const std::vector<AttributeName>& schema,
                             StringDict& dict) {
    return load_csv_impl(path, schema, dict, true);
}

void write_csv(const Relation& rel, const std::string& path, const StringDict* dict) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::internal, "cannot write file: " + path);
    for (int j = 0; j < rel.arity(); ++j) {
        if (j) out << ',';
        out << rel.schema()[j];
    }
    out << '\n';
    for (std::size_t r = 0; r < rel.size(); ++r) {
        for (int j = 0; j < rel.arity(); ++j) {
            if (j) out << ',';
            Value v = rel.at(r, j);
            const std::string* s = dict ? dict->lookup(v) : nullptr;
            if (s)
                out << *s;
            else
                out << v;
        }
        out << '\n';
    }
}

// --- operations ---------------------------------------------------------

Relation project(const Relation& rel, const std::vector<AttributeName>& attrs) {
    std::vector<int> cols;
    cols.reserve(attrs.size());
    for (const auto& a : attrs) {
        int c = rel.column_index(a);
        if (c < 0) fail(Errc::internal, "project: unknown attribute '" + a + "'");
        cols.push_back(c);
    }
    std::vector<Value> flat;
    flat.reserve(rel.size() * cols.size());
    for (std::size_t r = 0; r < rel.size(); ++r)
        for (int c : cols) flat.push_back(rel.at(r, c));
    if (attrs.empty()) {
        std::vector<std::vector<Value>> rows(rel.empty() ? 0 : 1);
        return Relation::from_rows(rel.name(), {}, rows);
    }
    return Relation::from_flat(rel.name(), attrs, std::move(flat));
}

PrefixView prefix_select(const Relation& rel, std::span<const Value> binding, Counters* c) {
    if (static_cast<int>(binding.size()) > rel.arity())
        fail(Errc::internal, "prefix_select: binding longer than schema");
    std::size_t lo = rel.lower_bound_prefix(binding, c);
    std::size_t hi = rel.upper_bound_prefix(binding, c);
    return PrefixView(rel, lo, hi, static_cast<int>(binding.size()));
}

std::uint64_t degree(const Relation& rel, const std::vector<int>& x_cols,
                     const std::vector<int>& y_cols) {
    for (int c : x_cols)
        if (std::find(y_cols.begin(), y_cols.end(), c) == y_cols.end())
            fail(Errc::internal, "degree: X is not a subset of Y");
    if (x_cols.size() >= y_cols.size()) fail(Errc::internal, "degree: X must be a proper subset of Y");
    for (int c : y_cols)
        if (c < 0 || c >= rel.arity()) fail(Errc::internal, "degree: column out of range");

    // Key layout: X columns first, then Y-X columns.
    std::vector<int> key_cols = x_cols;
    for (int c : y_cols)
        if (std::find(x_cols.begin(), x_cols.end(), c) == x_cols.end()) key_cols.push_back(c);
    const int klen = static_cast<int>(key_cols.size());
    const int xlen = static_cast<int>(x_cols.size());

    std::vector<Value> keys;
    keys.reserve(rel.size() * klen);
    for (std::size_t r = 0; r < rel.size(); ++r)
        for (int c : key_cols) keys.push_back(rel.at(r, c));

    std::vector<std::size_t> idx(rel.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return compare_rows(keys.data() + a * klen, keys.data() + b * klen, klen) < 0;
    });

    std::uint64_t best = 0, cur = 0;
    const Value* prev = nullptr;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Value* row = keys.data() + idx[k] * klen;
        if (prev && compare_rows(row, prev, klen) == 0) continue;  // duplicate Y-projection
        if (prev && compare_rows(row, prev, xlen) == 0)
            ++cur;
        else
            cur = 1;
        best = std::max(best, cur);
        prev = row;
    }
    return best;
}

std::uint64_t degree(const Relation& rel, const std::vector<AttributeName>& x,
                     const std::vector<AttributeName>& y) {
    auto to_cols = [&](const std::vector<AttributeName>& names) {
        std::vector<int> cols;
        for (const auto& a : names) {
            int c = rel.column_index(a);
            if (c < 0) fail(Errc::internal, "degree: unknown attribute '" + a + "'");
            cols.push_back(c);
        }
        return cols;
    };
    return degree(rel, to_cols(x), to_cols(y));
}

std::vector<Value> intersect_views(std::vector<UnaryView> views, Counters* c) {
    if (views.empty()) fail(Errc::internal, "intersect_views: empty view list");
    std::vector<Value> out;
    for (const auto& v : views)
        if (v.at_end()) return out;

    const std::size_t k = views.size();
    Value candidate = views[0].value();
    for (std::size_t i = 1; i < k; ++i) candidate = std::max(candidate, views[i].value());

    std::size_t agree = 0;  // consecutive views confirmed to sit at candidate
    std::size_t turn = 0;
    while (true) {
        UnaryView& v = views[turn];
        Value x = v.value();
        if (x < candidate) {
            v.seek_ge(candidate, c);
            if (v.at_end()) return out;
            x = v.value();
        }
        if (x == candidate) {
            if (++agree == k) {
                out.push_back(candidate);
                v.seek_gt(candidate, c);
                if (v.at_end()) return out;
                candidate = v.value();
                agree = 1;
            }
        } else {  // x > candidate
            candidate = x;
            agree = 1;
        }
        turn = (turn + 1) % k;
    }
}

namespace {

std::vector<AttributeName> shared_attributes(const Relation& a, const Relation& b) {
    std::vector<AttributeName> shared;
    for (const auto& attr : a.schema())
        if (b.column_index(attr) >= 0) shared.push_back(attr);
    return shared;
}

}  // namespace

Relation semijoin(const Relation& rel, const Relation& other) {
    auto shared = shared_attributes(rel, other);
    if (shared.empty()) fail(Errc::internal, "semijoin: schemas share no attribute");
    Relation keys = project(other, shared);
    std::vector<int> cols;
    for (const auto& a : shared) cols.push_back(rel.column_index(a));

    std::vector<Value> flat;
    std::vector<Value> key(shared.size());
    for (std::size_t r = 0; r < rel.size(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) key[j] = rel.at(r, cols[j]);
        if (keys.contains(key)) {
            auto row = rel.row(r);
            flat.insert(flat.end(), row.begin(), row.end());
        }
    }
    // Rows come out as a subsequence of an already sorted store.
    return Relation::from_flat(rel.name(), rel.schema(), std::move(flat));
}

Relation hash_join(const Relation& left, const Relation& right, Counters* c) {
    auto shared = shared_attributes(left, right);

    std::vector<AttributeName> out_schema = left.schema();
    std::vector<int> right_new_cols;
    for (int j = 0; j < right.arity(); ++j)
        if (left.column_index(right.schema()[j]) < 0) {
            out_schema.push_back(right.schema()[j]);
            right_new_cols.push_back(j);
        }

    std::vector<int> lcols, rcols;
    for (const auto& a : shared) {
        lcols.push_back(left.column_index(a));
        rcols.push_back(right.column_index(a));
    }

    // Build on the right side, probe with the left.
    std::unordered_map<std::vector<Value>, std::vector<std::size_t>, RowKeyHash> table;
    table.reserve(right.size());
    {
        std::vector<Value> key(rcols.size());
        for (std::size_t r = 0; r < right.size(); ++r) {
            for (std::size_t j = 0; j < rcols.size(); ++j) key[j] = right.at(r, rcols[j]);
            table[key].push_back(r);
        }
    }

    std::vector<Value> flat;
    std::vector<Value> key(lcols.size());
    for (std::size_t l = 0; l < left.size(); ++l) {
        for (std::size_t j = 0; j < lcols.size(); ++j) key[j] = left.at(l, lcols[j]);
        if (c) c->probes += 1;
        auto it = table.find(key);
        if (it == table.end()) continue;
        for (std::size_t r : it->second) {
            auto lrow = left.row(l);
            flat.insert(flat.end(), lrow.begin(), lrow.end());
            for (int j : right_new_cols) flat.push_back(right.at(r, j));
            if (c) c->emitted += 1;
        }
    }
    return Relation::from_flat(left.name() + "*" + right.name(), std::move(out_schema),
                               std::move(flat));
}

std::pair<Relation, Relation> partition_by_degree(const Relation& rel,
                                                  const std::vector<AttributeName>& x,
                                                  const Rat& theta) {
    Rat theta_c = theta;
    theta_c.canonicalize();
    if (theta_c <= 0) fail(Errc::internal, "partition_by_degree: theta must be positive");
    std::vector<int> cols;
    for (const auto& a : x) {
        int c = rel.column_index(a);
        if (c < 0) fail(Errc::internal, "partition_by_degree: unknown attribute '" + a + "'");
        cols.push_back(c);
    }
    if (static_cast<int>(cols.size()) >= rel.arity())
        fail(Errc::internal, "partition_by_degree: X must be a proper subset of the schema");

    std::unordered_map<std::vector<Value>, std::uint64_t, RowKeyHash> group_size;
    std::vector<Value> key(cols.size());
    for (std::size_t r = 0; r < rel.size(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) key[j] = rel.at(r, cols[j]);
        group_size[key] += 1;
    }

    std::vector<Value> heavy_flat, light_flat;
    for (std::size_t r = 0; r < rel.size(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) key[j] = rel.at(r, cols[j]);
        auto row = rel.row(r);
        bool heavy = Rat(static_cast<unsigned long>(group_size[key])) > theta_c;
        auto& flat = heavy ? heavy_flat : light_flat;
        flat.insert(flat.end(), row.begin(), row.end());
    }
    // Both partitions preserve the original sorted order.
    return {Relation::from_flat(rel.name() + "#heavy", rel.schema(), std::move(heavy_flat)),
            Relation::from_flat(rel.name() + "#light", rel.schema(), std::move(light_flat))};
}

}  // namespace wcoj
