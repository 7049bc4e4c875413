#include "wcoj/database.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "wcoj/error.hpp"

namespace wcoj {

Database Database::load_dir(const std::string& dir, const Query& q) {
    Database db;
    for (const auto& atom : q.atoms()) {
        std::filesystem::path path = std::filesystem::path(dir) / (atom.relation + ".csv");
        if (!std::filesystem::exists(path))
            fail(Errc::parse, "data file not found: " + path.string());

        std::vector<AttributeName> schema;
        for (int v : atom.vars) schema.push_back(q.vars().name(v));

        // Peek at the header to decide between name matching and positional
        // binding.
        std::ifstream in(path, std::ios::binary);
        std::string header;
        std::getline(in, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        in.close();
        std::vector<std::string> names;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = header.find(',', start);
            if (comma == std::string::npos) {
                names.push_back(header.substr(start));
                break;
            }
            names.push_back(header.substr(start, comma - start));
            start = comma + 1;
        }
        auto sorted_names = names;
        auto sorted_schema = schema;
        std::sort(sorted_names.begin(), sorted_names.end());
        std::sort(sorted_schema.begin(), sorted_schema.end());

        Relation rel = (sorted_names == sorted_schema)
                           ? load_csv(path.string(), schema, *db.dict_)
                           : load_csv_positional(path.string(), schema, *db.dict_);
        db.atom_rels_.push_back(rel.renamed(atom.relation, schema));
    }
    return db;
}

Database Database::from_relations(const Query& q, std::vector<Relation> atom_rels) {
    if (atom_rels.size() != q.atoms().size())
        fail(Errc::internal, "from_relations: atom count mismatch");
    for (std::size_t i = 0; i < atom_rels.size(); ++i) {
        const auto& atom = q.atoms()[i];
        if (atom_rels[i].arity() != static_cast<int>(atom.vars.size()))
            fail(Errc::internal, "from_relations: arity mismatch for atom " + atom.relation);
        for (std::size_t j = 0; j < atom.vars.size(); ++j)
            if (atom_rels[i].schema()[j] != q.vars().name(atom.vars[j]))
                fail(Errc::internal,
                     "from_relations: schema mismatch for atom " + atom.relation);
    }
    Database db;
    db.atom_rels_ = std::move(atom_rels);
    return db;
}

std::size_t Database::total_tuples() const {
    std::size_t total = 0;
    for (const auto& r : atom_rels_) total += r.size();
    return total;
}

}  // namespace wcoj
