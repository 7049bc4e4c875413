#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wcoj/query.hpp"
#include "wcoj/relation.hpp"

namespace wcoj {

// The instance data for one query: one relation per atom, with schemas equal
// to the atom's variable names in atom order. All loads share one dictionary.
class Database {
public:
    Database() : dict_(std::make_shared<StringDict>()) {}

    // Loads <relation>.csv from dir for every atom of q. When the file header
    // matches the atom's variable names as a set, columns are permuted by
    // name; otherwise they bind positionally (this covers self joins, where
    // one file backs atoms with different variable lists).
    static Database load_dir(const std::string& dir, const Query& q);

    // Builds a database from in-memory per-atom relations (schemas must match
    // the atoms' variable names).
    static Database from_relations(const Query& q, std::vector<Relation> atom_rels);

    const Relation& atom_relation(int atom_idx) const { return atom_rels_.at(atom_idx); }
    std::size_t total_tuples() const;

    StringDict& dict() { return *dict_; }
    const StringDict& dict() const { return *dict_; }

private:
    std::shared_ptr<StringDict> dict_;
    std::vector<Relation> atom_rels_;
};

}  // namespace wcoj
