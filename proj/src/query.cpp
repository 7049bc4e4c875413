#include "wcoj/query.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "wcoj/error.hpp"

namespace wcoj {

namespace {

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c))
            fail(Errc::parse, "query parse error at offset " + std::to_string(pos) +
                                  ": expected '" + std::string(1, c) + "'");
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        if (pos == start)
            fail(Errc::parse,
                 "query parse error at offset " + std::to_string(pos) + ": expected identifier");
        return s.substr(start, pos - start);
    }
};

std::vector<std::string> parse_arg_list(Cursor& c) {
    std::vector<std::string> args;
    c.expect('(');
    if (c.eat(')')) return args;
    while (true) {
        args.push_back(c.ident());
        if (c.eat(')')) break;
        c.expect(',');
    }
    return args;
}

}  // namespace

Query Query::parse(const std::string& text) {
    // Strip comment lines, then parse the single remaining rule.
    std::string rule;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            std::size_t first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            rule += line;
            rule += ' ';
        }
    }
    Cursor c{rule};

    Query q;
    q.head_name_ = c.ident();
    auto head_vars = parse_arg_list(c);
    if (head_vars.empty()) fail(Errc::parse, "query head has no variables");
    for (std::size_t i = 0; i < head_vars.size(); ++i)
        for (std::size_t j = i + 1; j < head_vars.size(); ++j)
            if (head_vars[i] == head_vars[j])
                fail(Errc::parse, "duplicate head variable '" + head_vars[i] + "'");
    if (head_vars.size() > 63) fail(Errc::parse, "too many variables");
    q.vars_ = VarTable(head_vars);

    c.expect(':');
    c.expect('-');

    while (true) {
        Atom atom;
        atom.relation = c.ident();
        auto args = parse_arg_list(c);
        if (args.empty()) fail(Errc::parse, "atom " + atom.relation + " has no variables");
        for (const auto& a : args) {
            int idx = q.vars_.index_of(a);
            if (idx < 0)
                fail(Errc::parse, "atom variable '" + a + "' does not appear in the head");
            if (var_in(atom.var_set, idx))
                fail(Errc::parse, "atom " + atom.relation + " repeats variable '" + a + "'");
            atom.vars.push_back(idx);
            atom.var_set |= var_bit(idx);
        }
        q.atoms_.push_back(std::move(atom));
        if (c.eat('.')) break;
        c.expect(',');
    }
    c.skip_ws();
    if (c.pos != rule.size())
        fail(Errc::parse, "trailing content after the query rule");

    VarSet covered = 0;
    for (const auto& a : q.atoms_) covered |= a.var_set;
    if (covered != full_set(q.num_vars()))
        for (int i = 0; i < q.num_vars(); ++i)
            if (!var_in(covered, i))
                fail(Errc::parse, "head variable '" + q.vars_.name(i) + "' occurs in no atom");
    return q;
}

Query Query::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse, "cannot open query file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

Hypergraph Query::hypergraph() const {
    Hypergraph h;
    h.n = num_vars();
    for (const auto& a : atoms_) h.edges.push_back(a.var_set);
    return h;
}

int Query::guard_atom(const std::string& relation, VarSet required) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        if (atoms_[i].relation == relation && subset_of(required, atoms_[i].var_set))
            return static_cast<int>(i);
    return -1;
}

std::string Query::to_string() const {
    std::string out = head_name_ + "(";
    for (int i = 0; i < num_vars(); ++i) {
        if (i) out += ",";
        out += vars_.name(i);
    }
    out += ") :- ";
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        if (k) out += ", ";
        out += atoms_[k].relation + "(";
        for (std::size_t j = 0; j < atoms_[k].vars.size(); ++j) {
            if (j) out += ",";
            out += vars_.name(atoms_[k].vars[j]);
        }
        out += ")";
    }
    out += ".";
    return out;
}

}  // namespace wcoj
