#include "wcoj.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <cstring>
#include <optional>
#include <string>

#include <json.hpp>
#include <mpfr.h>

#include "wcoj/bounds.hpp"
#include "wcoj/constraints.hpp"
#include "wcoj/database.hpp"
#include "wcoj/error.hpp"
#include "wcoj/executor.hpp"
#include "wcoj/proof.hpp"
#include "wcoj/query.hpp"
#include "wcoj/workbench.hpp"

using json = nlohmann::ordered_json;
using namespace wcoj;

struct wcoj_session {
    std::optional<Query> query;
    std::optional<ConstraintSet> constraints;
    std::optional<Database> db;
    bool deterministic = false;
    std::string last_error;
};

namespace {

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const json& report) {
    if (out) *out = dup_string(report.dump(2));
}

// 2^(p/q) with 12 significant digits.
std::string tuple_scale(const Rat& log2_value) {
    mpfr_t x;
    mpfr_init2(x, 128);
    mpfr_set_q(x, log2_value.get_mpq_t(), MPFR_RNDN);
    mpfr_exp2(x, x, MPFR_RNDN);
    char buf[64];
    mpfr_snprintf(buf, sizeof buf, "%.11Re", x);
    mpfr_clear(x);
    return buf;
}

json varset_json(const Query& q, VarSet s) {
    json arr = json::array();
    for (int v : varset_members(s)) arr.push_back(q.vars().name(v));
    return arr;
}

json certificate_json(const Query& q, const DualCertificate& cert) {
    json out;
    out["value_log2"] = rat_to_string(cert.value_log2);
    out["delta"] = json::array();
    for (const auto& t : cert.delta)
        out["delta"].push_back({{"X", varset_json(q, t.x)},
                                {"Y", varset_json(q, t.y)},
                                {"weight", rat_to_string(t.weight)}});
    out["xi"] = json::array();
    for (const auto& t : cert.xi)
        out["xi"].push_back({{"I", varset_json(q, t.i)},
                             {"J", varset_json(q, t.j)},
                             {"weight", rat_to_string(t.weight)}});
    out["alpha"] = json::array();
    for (const auto& t : cert.alpha)
        out["alpha"].push_back({{"X", varset_json(q, t.x)},
                                {"Y", varset_json(q, t.y)},
                                {"weight", rat_to_string(t.weight)}});
    return out;
}

// The unbound-variable witness for an incomplete closure.
std::string unbound_witness(const Query& q, const ConstraintSet& dc) {
    VarSet closed = bound_closure(dc, q.num_vars());
    for (int v = 0; v < q.num_vars(); ++v)
        if (!var_in(closed, v)) return q.vars().name(v);
    return "";
}

const Query& need_query(wcoj_session* s) {
    if (!s->query.has_value()) fail(Errc::parse, "no query loaded");
    return *s->query;
}
const ConstraintSet& need_constraints(wcoj_session* s) {
    if (!s->constraints.has_value()) fail(Errc::parse, "no constraints loaded");
    return *s->constraints;
}
const Database& need_db(wcoj_session* s) {
    if (!s->db.has_value()) fail(Errc::parse, "no data loaded");
    return *s->db;
}

template <typename Fn>
int guarded(wcoj_session* s, Fn&& fn) {
    if (!s) return WCOJ_ERROR;
    s->last_error.clear();
    try {
        return fn();
    } catch (const Error& e) {
        s->last_error = e.what();
        return e.exit_code();
    } catch (const std::exception& e) {
        s->last_error = e.what();
        return WCOJ_ERROR;
    }
}

}  // namespace

wcoj_session* wcoj_session_create(void) { return new wcoj_session(); }

void wcoj_session_destroy(wcoj_session* s) { delete s; }

const char* wcoj_last_error(const wcoj_session* s) {
    return s ? s->last_error.c_str() : "null session";
}

void wcoj_string_free(char* s) { std::free(s); }

void wcoj_set_deterministic(wcoj_session* s, int on) {
    if (s) s->deterministic = on != 0;
}

int wcoj_load_query(wcoj_session* s, const char* path) {
    return guarded(s, [&] {
        s->query = Query::parse_file(path);
        s->constraints.reset();
        s->db.reset();
        return WCOJ_OK;
    });
}

int wcoj_load_constraints(wcoj_session* s, const char* path) {
    return guarded(s, [&] {
        s->constraints = ConstraintSet::parse_file(path, need_query(s));
        return WCOJ_OK;
    });
}

int wcoj_load_data(wcoj_session* s, const char* dir) {
    return guarded(s, [&] {
        s->db = Database::load_dir(dir, need_query(s));
        return WCOJ_OK;
    });
}

int wcoj_bound(wcoj_session* s, const char* method, char** report_json) {
    return guarded(s, [&] {
        const Query& q = need_query(s);
        const ConstraintSet& dc = need_constraints(s);
        const int n = q.num_vars();
        std::string m = method ? method : "";
        json report;
        report["method"] = m;

        auto unbounded = [&]() {
            report["unbounded"] = true;
            report["witness"] = unbound_witness(q, dc);
            emit(report_json, report);
            s->last_error = "the bound is infinite: variable '" +
                            std::string(report["witness"]) + "' is unbound";
            return WCOJ_UNBOUNDED;
        };
        auto finish = [&](const Rat& value) {
            report["unbounded"] = false;
            report["value_log2"] = rat_to_string(value);
            report["bound_tuples"] = tuple_scale(value);
            emit(report_json, report);
            return WCOJ_OK;
        };

        if (m == "agm") {
            std::vector<LogStat> stats;
            for (const auto& atom : q.atoms()) {
                std::uint64_t best = 0;
                for (const auto& c : dc.items())
                    if (c.is_cardinality() && c.y == atom.var_set &&
                        (best == 0 || c.bound < best))
                        best = c.bound;
                if (best == 0) {
                    report["unbounded"] = true;
                    report["witness"] = atom.relation;
                    emit(report_json, report);
                    s->last_error =
                        "agm needs a cardinality constraint for every atom (missing: " +
                        atom.relation + ")";
                    return WCOJ_UNBOUNDED;
                }
                stats.push_back(LogStat::of(best));
            }
            auto res = agm_bound(q.hypergraph(), stats);
            if (res.status != BoundStatus::ok) return unbounded();
            json cover = json::array();
            for (std::size_t f = 0; f < res.cover.weight.size(); ++f)
                cover.push_back({{"atom", q.atoms()[f].relation},
                                 {"weight", rat_to_string(res.cover.weight[f])}});
            report["cover"] = cover;
            return finish(res.log2_bound);
        }
        if (m == "modular") {
            auto res = modular_bound(dc, n);
            if (res.status == BoundStatus::unbounded) return unbounded();
            report["acyclic"] = res.acyclic;
            json primal = json::array();
            for (int v = 0; v < n; ++v)
                primal.push_back(
                    {{"variable", q.vars().name(v)}, {"value", rat_to_string(res.primal[v])}});
            report["primal"] = primal;
            json dual = json::array();
            for (std::size_t k = 0; k < dc.items().size(); ++k)
                dual.push_back({{"X", varset_json(q, dc.items()[k].x)},
                                {"Y", varset_json(q, dc.items()[k].y)},
                                {"weight", rat_to_string(res.dual[k])}});
            report["dual"] = dual;
            return finish(res.log2_bound);
        }
        if (m == "polymatroid") {
            auto res = polymatroid_bound(dc, n);
            if (res.status == BoundStatus::unbounded) return unbounded();
            if (res.status == BoundStatus::size_limit)
                fail(Errc::internal, "polymatroid bound supports at most 10 variables");
            return finish(res.log2_bound);
        }
        if (m == "dual") {
            auto res = shannon_flow_dual(dc, n);
            if (res.status == BoundStatus::unbounded) return unbounded();
            if (res.status == BoundStatus::size_limit)
                fail(Errc::internal, "the dual certificate supports at most 6 variables");
            report["certificate"] = certificate_json(q, res.cert);
            return finish(res.value);
        }
        fail(Errc::parse, "unknown bound method '" + m +
                              "' (expected agm, modular, polymatroid, or dual)");
    });
}

int wcoj_run(wcoj_session* s, const char* algo, const char* order_text, const char* seq_path,
             const char* tuples_csv, int validate_flag, char** report_json) {
    return guarded(s, [&] {
        const Query& q = need_query(s);
        const Database& db = need_db(s);
        std::string a = algo ? algo : "";
        json report;
        report["algorithm"] = a;

        if (validate_flag && a != "bruteforce") {
            const ConstraintSet& dc = need_constraints(s);
            auto val = validate_db(q, dc, db);
            json entries = json::array();
            for (const auto& e : val.entries)
                entries.push_back({{"X", varset_json(q, e.constraint.x)},
                                   {"Y", varset_json(q, e.constraint.y)},
                                   {"declared", e.constraint.bound},
                                   {"actual", e.actual},
                                   {"ok", e.ok}});
            report["validation"] = {{"pass", val.pass}, {"constraints", entries}};
            if (!val.pass) {
                emit(report_json, report);
                s->last_error = "the data does not satisfy the declared constraints";
                return WCOJ_ERROR;
            }
        }

        auto started = std::chrono::steady_clock::now();
        Relation output;
        Counters counters;

        if (a == "backtrack") {
            const ConstraintSet& dc = need_constraints(s);
            std::vector<int> order;
            if (order_text && *order_text) {
                std::string text = order_text;
                std::size_t start = 0;
                while (start <= text.size()) {
                    std::size_t comma = text.find(',', start);
                    std::string name = text.substr(
                        start, comma == std::string::npos ? std::string::npos : comma - start);
                    int idx = q.vars().index_of(name);
                    if (idx < 0) fail(Errc::parse, "unknown variable in --order: '" + name + "'");
                    order.push_back(idx);
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            } else {
                order = compatible_order(dc, q);
            }
            json order_json = json::array();
            for (int v : order) order_json.push_back(q.vars().name(v));
            report["order"] = order_json;

            auto mod = modular_bound(dc, q.num_vars());
            if (mod.status == BoundStatus::ok)
                report["bound_log2"] = rat_to_string(mod.log2_bound);

            auto res = backtrack_join(q, dc, order, db);
            output = std::move(res.output);
            counters = res.counters;
        } else if (a == "heavy-light") {
            if (q.atoms().size() != 3)
                fail(Errc::parse, "heavy-light expects the triangle query shape");
            auto res = triangle_heavy_light(db.atom_relation(0), db.atom_relation(1),
                                            db.atom_relation(2));
            report["heavy_join_size"] = res.heavy_join_size;
            report["light_join_size"] = res.light_join_size;
            output = std::move(res.output);
            counters = res.counters;
        } else if (a == "panda") {
            const ConstraintSet& dc = need_constraints(s);
            ProofSequence seq;
            if (seq_path && *seq_path) {
                seq = parse_proof_file(seq_path, q.vars());
            } else {
                auto dual = shannon_flow_dual(dc, q.num_vars());
                if (dual.status == BoundStatus::unbounded)
                    fail(Errc::unbounded, "the constraint set leaves the output unbounded");
                if (dual.status != BoundStatus::ok)
                    fail(Errc::internal, "the dual certificate supports at most 6 variables");
                auto derived = derive(dual.cert, q.num_vars());
                if (!derived.ok)
                    fail(Errc::derive_incomplete,
                         "could not serialize the certificate into a proof sequence; "
                         "supply one with --seq");
                seq = derived.seq;
            }
            report["steps"] = seq.steps.size();
            auto annotated = annotate_with_thetas(seq, dc, q.num_vars());
            auto res = panda_interpret(q, db, dc, annotated);
            report["max_intermediate"] = res.max_intermediate;
            auto poly = polymatroid_bound(dc, q.num_vars());
            if (poly.status == BoundStatus::ok)
                report["bound_log2"] = rat_to_string(poly.log2_bound);
            output = std::move(res.output);
            counters = res.counters;
        } else if (a == "bruteforce") {
            auto res = bruteforce_join(q, db);
            output = std::move(res.output);
            counters = res.counters;
        } else {
            fail(Errc::parse, "unknown algorithm '" + a +
                                  "' (expected backtrack, heavy-light, panda, or bruteforce)");
        }

        auto elapsed = std::chrono::steady_clock::now() - started;
        report["cardinality"] = output.size();
        report["counters"] = {{"probes", counters.probes},
                              {"emitted", counters.emitted},
                              {"comparisons", counters.comparisons}};
        if (!s->deterministic)
            report["wall_time_ms"] =
                std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        if (tuples_csv && *tuples_csv) {
            write_csv(output, tuples_csv, &need_db(s).dict());
            report["tuples_csv"] = tuples_csv;
        }
        emit(report_json, report);
        return WCOJ_OK;
    });
}

int wcoj_acyclicize(wcoj_session* s, const char* out_path, char** report_json) {
    return guarded(s, [&] {
        const Query& q = need_query(s);
        const ConstraintSet& dc = need_constraints(s);
        const int n = q.num_vars();

        auto oracle = [n](const ConstraintSet& cs) -> std::optional<Rat> {
            auto res = modular_bound(cs, n);
            if (res.status != BoundStatus::ok) return std::nullopt;
            return res.log2_bound;
        };
        auto relaxed = acyclicize(dc, n, oracle);

        json report;
        report["already_acyclic"] = relaxed == dc;
        auto before = polymatroid_bound(dc, n);
        auto after = polymatroid_bound(relaxed, n);
        if (before.status == BoundStatus::ok)
            report["bound_before_log2"] = rat_to_string(before.log2_bound);
        if (after.status == BoundStatus::ok)
            report["bound_after_log2"] = rat_to_string(after.log2_bound);
        std::string text = relaxed.to_text(q);
        if (out_path && *out_path) {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) fail(Errc::internal, std::string("cannot write file: ") + out_path);
            out << text;
            report["constraints_path"] = out_path;
        }
        report["constraints"] = text;
        emit(report_json, report);
        return WCOJ_OK;
    });
}

int wcoj_proof_derive(wcoj_session* s, const char* seq_out_path, char** report_json) {
    return guarded(s, [&] {
        const Query& q = need_query(s);
        const ConstraintSet& dc = need_constraints(s);
        auto dual = shannon_flow_dual(dc, q.num_vars());
        if (dual.status == BoundStatus::unbounded)
            fail(Errc::unbounded, "the bound is infinite; no certificate exists");
        if (dual.status != BoundStatus::ok)
            fail(Errc::internal, "the dual certificate supports at most 6 variables");

        auto derived = derive(dual.cert, q.num_vars());
        if (!derived.ok)
            fail(Errc::derive_incomplete,
                 "could not serialize the certificate into a proof sequence");

        std::string text = emit_proof(derived.seq, q.vars());
        json report;
        report["value_log2"] = rat_to_string(dual.value);
        report["steps"] = derived.seq.steps.size();
        report["sequence"] = text;
        if (seq_out_path && *seq_out_path) {
            std::ofstream out(seq_out_path, std::ios::binary);
            if (!out) fail(Errc::internal, std::string("cannot write file: ") + seq_out_path);
            out << text;
            report["sequence_path"] = seq_out_path;
        }
        emit(report_json, report);
        return WCOJ_OK;
    });
}

int wcoj_proof_validate(wcoj_session* s, const char* seq_path, char** report_json) {
    return guarded(s, [&] {
        const Query& q = need_query(s);
        const ConstraintSet& dc = need_constraints(s);
        if (!seq_path || !*seq_path) fail(Errc::parse, "a sequence file is required");
        auto seq = parse_proof_file(seq_path, q.vars());

        auto dual = shannon_flow_dual(dc, q.num_vars());
        if (dual.status == BoundStatus::unbounded)
            fail(Errc::unbounded, "the bound is infinite; nothing to validate against");
        if (dual.status != BoundStatus::ok)
            fail(Errc::internal, "the dual certificate supports at most 6 variables");

        auto res = validate(seq, dual.cert.delta, q.num_vars());
        json report;
        report["valid"] = res.ok;
        if (!res.ok) {
            report["failing_step"] = res.failing_step;
            report["message"] = res.message;
        }
        emit(report_json, report);
        return res.ok ? WCOJ_OK : WCOJ_ERROR;
    });
}

int wcoj_generate(wcoj_session* s, const char* spec_json, const char* out_dir,
                  char** report_json) {
    return guarded(s, [&] {
        if (!spec_json || !out_dir) fail(Errc::parse, "a spec and output directory are required");
        json spec = json::parse(spec_json, nullptr, false);
        if (spec.is_discarded()) fail(Errc::parse, "malformed generator spec JSON");

        GenSpec gen;
        std::string kind = spec.value("kind", "");
        gen.seed = spec.value("seed", std::uint64_t(0));
        if (kind == "grid-triangle") {
            gen.kind = GenSpec::Kind::grid_triangle;
            gen.m = spec.value("m", 0);
            if (gen.m < 1) fail(Errc::parse, "grid-triangle needs m >= 1");
        } else if (kind == "agm-tight") {
            gen.kind = GenSpec::Kind::agm_tight;
            gen.n_value = spec.value("n", std::uint64_t(0));
            if (!is_power_of_two(gen.n_value))
                fail(Errc::parse, "agm-tight needs a power-of-two n");
        } else if (kind == "random") {
            gen.kind = GenSpec::Kind::random;
            if (!spec.contains("sizes") || !spec["sizes"].is_array())
                fail(Errc::parse, "random needs a sizes array");
            for (const auto& v : spec["sizes"]) gen.sizes.push_back(v.get<std::uint64_t>());
        } else {
            fail(Errc::parse, "unknown generator kind '" + kind + "'");
        }

        const Query q = gen.kind == GenSpec::Kind::grid_triangle ? triangle_query()
                                                                 : need_query(s);
        Database db = gen_write(gen, q, out_dir);

        json report;
        report["kind"] = kind;
        report["dir"] = out_dir;
        report["seed"] = gen.seed;
        json rels = json::object();
        const Query& used = gen.kind == GenSpec::Kind::grid_triangle ? triangle_query() : q;
        for (std::size_t f = 0; f < used.atoms().size(); ++f)
            rels[used.atoms()[f].relation] = db.atom_relation(static_cast<int>(f)).size();
        report["relations"] = rels;
        emit(report_json, report);
        return WCOJ_OK;
    });
}
