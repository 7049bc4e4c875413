#include "wcoj/proof.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "wcoj/error.hpp"

namespace wcoj {

namespace {

Rat canon(Rat r) {
    r.canonicalize();
    return r;
}

// Weight of a term, zero when absent.
const Rat& weight_of(const TermLedger& ledger, const CondTerm& t) {
    static const Rat zero(0);
    auto it = ledger.find(t);
    return it == ledger.end() ? zero : it->second;
}

void add_weight(TermLedger& ledger, const CondTerm& t, const Rat& w) {
    Rat& slot = ledger[t];
    slot += w;
    if (slot == 0) ledger.erase(t);
}

}  // namespace

StepOutcome apply_step(TermLedger& ledger, const ProofStep& step) {
    StepOutcome out;
    Rat w = canon(step.weight);
    if (w <= 0) fail(Errc::internal, "apply_step: step weight must be positive");

    switch (step.kind) {
        case StepKind::submodularity: {
            VarSet i = step.a, j = step.b;
            if (!crossing(i, j))
                fail(Errc::internal, "apply_step: submodularity needs incomparable sets");
            CondTerm src{i, i & j};
            CondTerm dst{i | j, j};
            if (weight_of(ledger, src) < w) return {false, src};
            add_weight(ledger, src, -w);
            add_weight(ledger, dst, w);
            break;
        }
        case StepKind::decomposition: {
            VarSet y = step.a, x = step.b;
            if (x == 0 || !proper_subset_of(x, y))
                fail(Errc::internal, "apply_step: decomposition needs {} != X strictly inside Y");
            CondTerm src{y, 0};
            if (weight_of(ledger, src) < w) return {false, src};
            add_weight(ledger, src, -w);
            add_weight(ledger, CondTerm{y, x}, w);
            add_weight(ledger, CondTerm{x, 0}, w);
            break;
        }
        case StepKind::composition: {
            VarSet y = step.a, x = step.b;
            if (x == 0 || !proper_subset_of(x, y))
                fail(Errc::internal, "apply_step: composition needs {} != X strictly inside Y");
            CondTerm cond{y, x};
            CondTerm base{x, 0};
            if (weight_of(ledger, cond) < w) return {false, cond};
            if (weight_of(ledger, base) < w) return {false, base};
            add_weight(ledger, cond, -w);
            add_weight(ledger, base, -w);
            add_weight(ledger, CondTerm{y, 0}, w);
            break;
        }
    }
    return out;
}

TermLedger ledger_from_delta(const std::vector<CertTerm>& delta) {
    TermLedger ledger;
    for (const auto& t : delta) {
        if (!proper_subset_of(t.x, t.y))
            fail(Errc::internal, "ledger_from_delta: malformed term");
        Rat w = canon(t.weight);
        if (w < 0) fail(Errc::internal, "ledger_from_delta: negative weight");
        if (w != 0) add_weight(ledger, CondTerm{t.y, t.x}, w);
    }
    return ledger;
}

ValidateResult validate(const ProofSequence& seq, const std::vector<CertTerm>& delta, int n) {
    ValidateResult res;
    TermLedger ledger = ledger_from_delta(delta);
    for (std::size_t i = 0; i < seq.steps.size(); ++i) {
        auto outcome = apply_step(ledger, seq.steps[i]);
        if (!outcome.ok) {
            res.ok = false;
            res.failing_step = static_cast<int>(i);
            res.message = "insufficient weight at step " + std::to_string(i);
            return res;
        }
    }
    if (weight_of(ledger, CondTerm{full_set(n), 0}) < 1) {
        res.ok = false;
        res.failing_step = -1;
        res.message = "final weight on h([n]) is below 1";
        return res;
    }
    res.ok = true;
    return res;
}

namespace {

struct RuleQuantity {
    ProofStep step;  // weight field unused; quantity tracked separately
    Rat remaining;
};

}  // namespace

DeriveResult derive(const DualCertificate& cert, int n) {
    DeriveResult res;
    TermLedger ledger = ledger_from_delta(cert.delta);

    std::vector<RuleQuantity> rules;
    for (const auto& xi : cert.xi) {
        Rat q = canon(xi.weight);
        if (q > 0) rules.push_back({{StepKind::submodularity, xi.i, xi.j, Rat(0)}, q});
    }
    for (const auto& al : cert.alpha) {
        Rat q = canon(al.weight);
        if (q > 0) rules.push_back({{StepKind::decomposition, al.y, al.x, Rat(0)}, q});
        if (q < 0) rules.push_back({{StepKind::composition, al.y, al.x, Rat(0)}, -q});
    }

    const CondTerm target{full_set(n), 0};
    long budget = 10 * static_cast<long>(rules.size() + cert.delta.size());
    std::vector<ProofStep> steps;

    // Greedy with depth-first backtracking: try every rule that currently has
    // both remaining quantity and source weight, applying as much as possible.
    std::function<bool()> search = [&]() -> bool {
        if (weight_of(ledger, target) >= 1) return true;
        if (budget <= 0) return false;
        for (std::size_t k = 0; k < rules.size(); ++k) {
            RuleQuantity& rule = rules[k];
            if (rule.remaining <= 0) continue;

            Rat avail;
            switch (rule.step.kind) {
                case StepKind::submodularity:
                    avail = weight_of(ledger, CondTerm{rule.step.a, rule.step.a & rule.step.b});
                    break;
                case StepKind::decomposition:
                    avail = weight_of(ledger, CondTerm{rule.step.a, 0});
                    break;
                case StepKind::composition:
                    avail = std::min(weight_of(ledger, CondTerm{rule.step.a, rule.step.b}),
                                     weight_of(ledger, CondTerm{rule.step.b, 0}));
                    break;
            }
            Rat w = std::min(avail, rule.remaining);
            if (w <= 0) continue;

            ProofStep step = rule.step;
            step.weight = w;
            --budget;
            auto outcome = apply_step(ledger, step);
            if (!outcome.ok) fail(Errc::internal, "derive: availability check out of sync");
            rule.remaining -= w;
            steps.push_back(step);

            if (search()) return true;

            // Undo.
            steps.pop_back();
            rule.remaining += w;
            ProofStep undo = step;
            switch (step.kind) {
                case StepKind::submodularity: {
                    // Move the weight back: apply the inverse transfer directly.
                    add_weight(ledger, CondTerm{step.a | step.b, step.b}, -w);
                    add_weight(ledger, CondTerm{step.a, step.a & step.b}, w);
                    break;
                }
                case StepKind::decomposition: {
                    add_weight(ledger, CondTerm{step.a, step.b}, -w);
                    add_weight(ledger, CondTerm{step.b, 0}, -w);
                    add_weight(ledger, CondTerm{step.a, 0}, w);
                    break;
                }
                case StepKind::composition: {
                    add_weight(ledger, CondTerm{step.a, 0}, -w);
                    add_weight(ledger, CondTerm{step.a, step.b}, w);
                    add_weight(ledger, CondTerm{step.b, 0}, w);
                    break;
                }
            }
            (void)undo;
        }
        return false;
    };

    if (search()) {
        res.ok = true;
        res.seq.steps = std::move(steps);
    }
    return res;
}

// --- text format -------------------------------------------------------------

namespace {

VarSet parse_set(const std::string& text, const VarTable& vars, int lineno) {
    if (text.size() < 2 || text.front() != '{' || text.back() != '}')
        fail(Errc::parse, "proof line " + std::to_string(lineno) + ": expected {A,B} set, got '" +
                              text + "'");
    VarSet s = 0;
    std::string inner = text.substr(1, text.size() - 2);
    if (inner.empty()) return s;
    std::istringstream in(inner);
    std::string name;
    while (std::getline(in, name, ',')) {
        int idx = vars.index_of(name);
        if (idx < 0)
            fail(Errc::parse,
                 "proof line " + std::to_string(lineno) + ": unknown variable '" + name + "'");
        s |= var_bit(idx);
    }
    return s;
}

std::string expect_key(const std::string& token, const std::string& key, int lineno) {
    if (token.size() <= key.size() + 1 || token.compare(0, key.size(), key) != 0 ||
        token[key.size()] != '=')
        fail(Errc::parse,
             "proof line " + std::to_string(lineno) + ": expected " + key + "=..., got '" +
                 token + "'");
    return token.substr(key.size() + 1);
}

}  // namespace

ProofSequence parse_proof(const std::string& text, const VarTable& vars) {
    ProofSequence seq;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind[0] == '#') continue;

        ProofStep step;
        std::string t1, t2, t3;
        if (!(ls >> t1 >> t2 >> t3))
            fail(Errc::parse, "proof line " + std::to_string(lineno) + ": expected three fields");
        if (kind == "sub") {
            step.kind = StepKind::submodularity;
            step.a = parse_set(expect_key(t1, "I", lineno), vars, lineno);
            step.b = parse_set(expect_key(t2, "J", lineno), vars, lineno);
        } else if (kind == "dec" || kind == "comp") {
            step.kind = kind == "dec" ? StepKind::decomposition : StepKind::composition;
            step.a = parse_set(expect_key(t1, "Y", lineno), vars, lineno);
            step.b = parse_set(expect_key(t2, "X", lineno), vars, lineno);
        } else {
            fail(Errc::parse,
                 "proof line " + std::to_string(lineno) + ": unknown step kind '" + kind + "'");
        }
        auto w = rat_from_string(expect_key(t3, "w", lineno));
        if (!w.has_value() || *w <= 0)
            fail(Errc::parse, "proof line " + std::to_string(lineno) + ": bad weight");
        step.weight = *w;
        std::string extra;
        if (ls >> extra)
            fail(Errc::parse, "proof line " + std::to_string(lineno) + ": trailing content");
        seq.steps.push_back(step);
    }
    return seq;
}

ProofSequence parse_proof_file(const std::string& path, const VarTable& vars) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse, "cannot open proof file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_proof(buf.str(), vars);
}

std::string emit_proof(const ProofSequence& seq, const VarTable& vars) {
    std::string out;
    auto set_text = [&](VarSet s) {
        std::string t = "{";
        bool first = true;
        for (int v : varset_members(s)) {
            if (!first) t += ",";
            first = false;
            t += vars.name(v);
        }
        return t + "}";
    };
    for (const auto& step : seq.steps) {
        switch (step.kind) {
            case StepKind::submodularity:
                out += "sub I=" + set_text(step.a) + " J=" + set_text(step.b);
                break;
            case StepKind::decomposition:
                out += "dec Y=" + set_text(step.a) + " X=" + set_text(step.b);
                break;
            case StepKind::composition:
                out += "comp Y=" + set_text(step.a) + " X=" + set_text(step.b);
                break;
        }
        out += " w=" + rat_to_string(step.weight) + "\n";
    }
    return out;
}

}  // namespace wcoj
