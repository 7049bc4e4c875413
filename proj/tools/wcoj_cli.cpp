// Command-line front end. Everything goes through the C API in wcoj.h:
// reports print to stdout as JSON, diagnostics to stderr, and the process
// exit code is the API status (0 ok, 2 parse, 3 incompatible, 4 unbounded,
// 5 derive-incomplete).
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wcoj.h"

namespace {

struct Session {
    wcoj_session* s = wcoj_session_create();
    ~Session() { wcoj_session_destroy(s); }
};

int finish(wcoj_session* s, int code, char* report) {
    if (report) {
        std::printf("%s\n", report);
        wcoj_string_free(report);
    }
    if (code != WCOJ_OK) std::fprintf(stderr, "error: %s\n", wcoj_last_error(s));
    return code;
}

int load_inputs(wcoj_session* s, const std::string& query, const std::string& constraints,
                const std::string& data) {
    int rc = WCOJ_OK;
    if (!query.empty() && (rc = wcoj_load_query(s, query.c_str())) != WCOJ_OK) return rc;
    if (!constraints.empty() && (rc = wcoj_load_constraints(s, constraints.c_str())) != WCOJ_OK)
        return rc;
    if (!data.empty() && (rc = wcoj_load_data(s, data.c_str())) != WCOJ_OK) return rc;
    return WCOJ_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worst-case optimal join engine and output-size bound calculator"};
    app.require_subcommand(1);

    bool deterministic = false;
    app.add_flag("--deterministic", deterministic,
                 "suppress wall-clock fields for byte-identical reports");

    std::string query, constraints, data;
    auto add_query = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--query,-q", query, "query file");
        if (required) opt->required();
    };
    auto add_constraints = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--constraints,-c", constraints, "constraints file");
        if (required) opt->required();
    };

    // bound
    auto* bound = app.add_subcommand("bound", "compute an output-size bound");
    std::string method = "polymatroid";
    add_query(bound, true);
    add_constraints(bound, true);
    bound->add_option("--method", method, "agm | modular | polymatroid | dual")
        ->check(CLI::IsMember({"agm", "modular", "polymatroid", "dual"}));

    // run
    auto* run = app.add_subcommand("run", "evaluate the query");
    std::string algo, order, seq, tuples;
    bool no_validate = false;
    add_query(run, true);
    add_constraints(run, false);
    run->add_option("--data,-d", data, "directory with <relation>.csv files")->required();
    run->add_option("--algo", algo, "backtrack | heavy-light | panda | bruteforce")
        ->required()
        ->check(CLI::IsMember({"backtrack", "heavy-light", "panda", "bruteforce"}));
    run->add_option("--order", order, "comma-separated variable order (backtrack)");
    run->add_option("--seq", seq, "proof sequence file (panda)");
    run->add_option("--tuples", tuples, "write the output tuples to this CSV file");
    run->add_flag("--no-validate", no_validate, "skip checking constraints against the data");

    // acyclicize
    auto* acyc = app.add_subcommand("acyclicize", "rewrite constraints into an acyclic set");
    std::string out_path;
    add_query(acyc, true);
    add_constraints(acyc, true);
    acyc->add_option("--out,-o", out_path, "write the new constraints here");

    // proof
    auto* proof = app.add_subcommand("proof", "derive or validate a proof sequence");
    std::string action;
    proof->add_option("action", action, "derive | validate")
        ->required()
        ->check(CLI::IsMember({"derive", "validate"}));
    add_query(proof, true);
    add_constraints(proof, true);
    std::string proof_seq, proof_out;
    proof->add_option("--seq", proof_seq, "sequence file to validate");
    proof->add_option("--out,-o", proof_out, "write the derived sequence here");

    // gen
    auto* gen = app.add_subcommand("gen", "generate instance data");
    std::string kind, out_dir, sizes_text;
    int grid_m = 0;
    std::uint64_t n_value = 0, seed = 0;
    gen->add_option("--kind", kind, "grid-triangle | agm-tight | random")
        ->required()
        ->check(CLI::IsMember({"grid-triangle", "agm-tight", "random"}));
    gen->add_option("--out-dir,-o", out_dir, "output directory")->required();
    gen->add_option("--m", grid_m, "grid side (grid-triangle)");
    gen->add_option("--n", n_value, "cardinality target (agm-tight, power of two)");
    gen->add_option("--sizes", sizes_text, "comma-separated per-atom sizes (random)");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--query,-q", query, "query file (agm-tight and random)");

    CLI11_PARSE(app, argc, argv);

    Session session;
    wcoj_set_deterministic(session.s, deterministic ? 1 : 0);
    char* report = nullptr;

    if (bound->parsed()) {
        int rc = load_inputs(session.s, query, constraints, "");
        if (rc != WCOJ_OK) return finish(session.s, rc, nullptr);
        rc = wcoj_bound(session.s, method.c_str(), &report);
        return finish(session.s, rc, report);
    }
    if (run->parsed()) {
        int rc = load_inputs(session.s, query, constraints, data);
        if (rc != WCOJ_OK) return finish(session.s, rc, nullptr);
        int validate = no_validate || constraints.empty() ? 0 : 1;
        rc = wcoj_run(session.s, algo.c_str(), order.empty() ? nullptr : order.c_str(),
                      seq.empty() ? nullptr : seq.c_str(),
                      tuples.empty() ? nullptr : tuples.c_str(), validate, &report);
        return finish(session.s, rc, report);
    }
    if (acyc->parsed()) {
        int rc = load_inputs(session.s, query, constraints, "");
        if (rc != WCOJ_OK) return finish(session.s, rc, nullptr);
        rc = wcoj_acyclicize(session.s, out_path.empty() ? nullptr : out_path.c_str(), &report);
        return finish(session.s, rc, report);
    }
    if (proof->parsed()) {
        int rc = load_inputs(session.s, query, constraints, "");
        if (rc != WCOJ_OK) return finish(session.s, rc, nullptr);
        if (action == "derive")
            rc = wcoj_proof_derive(session.s, proof_out.empty() ? nullptr : proof_out.c_str(),
                                   &report);
        else
            rc = wcoj_proof_validate(session.s, proof_seq.c_str(), &report);
        return finish(session.s, rc, report);
    }
    if (gen->parsed()) {
        int rc = WCOJ_OK;
        if (!query.empty()) {
            rc = wcoj_load_query(session.s, query.c_str());
            if (rc != WCOJ_OK) return finish(session.s, rc, nullptr);
        }
        std::string spec = "{\"kind\":\"" + kind + "\"";
        if (kind == "grid-triangle") spec += ",\"m\":" + std::to_string(grid_m);
        if (kind == "agm-tight") spec += ",\"n\":" + std::to_string(n_value);
        if (kind == "random") {
            spec += ",\"sizes\":[" + sizes_text + "]";
        }
        spec += ",\"seed\":" + std::to_string(seed) + "}";
        rc = wcoj_generate(session.s, spec.c_str(), out_dir.c_str(), &report);
        return finish(session.s, rc, report);
    }
    return WCOJ_ERROR;
}
