#include "cli.hpp"
#include "json_views.hpp"
#include "server.hpp"

#include <sheetguard/audit.hpp>
#include <sheetguard/digest.hpp>
#include <sheetguard/error.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <ostream>

namespace sheetguard::tools {

namespace fs = std::filesystem;
using views::json;

namespace {

struct Options {
    std::string workbook;
    bool json = false;
    std::string policy;
    std::string manifest;
    std::string chain;
    std::string session;
    std::string strategy = "areas";
    bool forward = false;
    std::string level = "copy";
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string cell;
    std::string dir;
    std::string created_at;
    double budget = 30;
    std::string out_path;
    int mark = 0;
    std::string state;
    std::string note;
    double elapsed = -1;
    std::string static_dir;
};

std::optional<fs::path> optional_path(const std::string& p) {
    if (p.empty()) return std::nullopt;
    return fs::path(p);
}

Analysis load(const Options& o) { return Analysis::load(o.workbook, optional_path(o.policy)); }

std::string trim_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

fs::path program_sidecar(const fs::path& manifest) { return manifest.string() + ".program"; }

views::SealInput read_seal_input(const std::string& manifest_path) {
    views::SealInput input;
    if (manifest_path.empty()) return input;
    input.manifest = manifest_from_json(trim_newline(read_file(manifest_path)));
    auto sidecar = program_sidecar(manifest_path);
    if (fs::exists(sidecar)) input.retained = read_file(sidecar);
    return input;
}

class Commands {
public:
    Commands(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

    int parse() {
        auto w = parse_workbook(read_file(o_.workbook), fs::path(o_.workbook).stem().string());
        if (o_.json) {
            out_ << views::render(views::workbook(Analysis::build(std::move(w))));
        } else {
            out_ << print_workbook(w);
        }
        return kOk;
    }

    int eval() {
        auto a = load(o_);
        auto doc = views::values(a.workbook, a.values);
        if (!o_.cell.empty()) {
            auto id = parse_cell_id(o_.cell);
            if (!id || !a.workbook.find(*id)) throw NotFoundError("no cell " + o_.cell);
            json one = json::array();
            for (const auto& v : doc["values"]) {
                if (v["cell"] == to_string(*id)) one.push_back(v);
            }
            doc["values"] = one;
        }
        if (o_.json) {
            out_ << views::render(doc);
        } else {
            for (const auto& v : doc["values"]) out_ << v["cell"].get<std::string>() << "=" << v["display"].get<std::string>() << "\n";
        }
        return kOk;
    }

    int areas() {
        auto level = parse_level(o_.level);
        if (!level) throw UsageError("unknown level '" + o_.level + "'");
        auto a = load(o_);
        auto doc = views::areas(a, *level);
        if (o_.json) {
            out_ << views::render(doc);
            return kOk;
        }
        for (const auto& area : doc["areas"]) {
            out_ << "area " << area["id"].get<int>() << " (" << area["size"].get<std::size_t>() << ") "
                 << area["signature"].get<std::string>() << "\n ";
            for (const auto& m : area["members"]) out_ << " " << m.get<std::string>();
            out_ << "\n";
        }
        return kOk;
    }

    int anomalies() {
        auto a = load(o_);
        if (o_.json) {
            out_ << views::render(views::anomalies(a.anomalies));
        } else {
            for (const auto& an : a.anomalies) {
                out_ << to_string(an.severity) << " " << to_string(an.kind) << " " << to_string(an.cell) << " "
                     << an.context << "\n";
            }
        }
        bool alert = std::any_of(a.anomalies.begin(), a.anomalies.end(),
                                 [](const Anomaly& an) { return an.severity == Severity::Alert; });
        return alert ? kFindings : kOk;
    }

    int classes() {
        auto a = load(o_);
        auto doc = views::classes(a);
        if (o_.json) {
            out_ << views::render(doc);
            return kOk;
        }
        for (const auto& c : doc["classes"]) {
            out_ << c["sheet"].get<std::string>() << " rows x" << c["height"].get<int>() << " at";
            for (const auto& r : c["occurrences"]) out_ << " " << r.get<int>();
            out_ << " columns " << c["columns"][0].get<std::string>() << ":" << c["columns"][1].get<std::string>() << "\n";
        }
        return kOk;
    }

    int flow() {
        auto a = load(o_);
        auto doc = views::flow(a, o_.cell, o_.dir);
        if (o_.json) {
            out_ << views::render(doc);
            return kOk;
        }
        auto line = [&](const char* label, const json& list) {
            out_ << label << ":";
            for (const auto& c : list) out_ << " " << c.get<std::string>();
            out_ << "\n";
        };
        if (o_.cell.empty()) {
            line("order", doc["order"]);
            for (const auto& e : doc["edges"]) out_ << e[0].get<std::string>() << " -> " << e[1].get<std::string>() << "\n";
            for (const auto& c : doc["cycles"]) line("cycle", c);
        } else {
            out_ << doc["direction"].get<std::string>() << " of " << doc["cell"].get<std::string>() << "\n";
            line("direct", doc["direct"]);
            line("transitive", doc["transitive"]);
        }
        return kOk;
    }

    int intervals() {
        auto a = load(o_);
        auto doc = views::intervals(a);
        if (o_.json) {
            out_ << views::render(doc);
        } else {
            for (const auto& c : doc["intervals"]) {
                out_ << c["cell"].get<std::string>() << " " << c["interval"]["text"].get<std::string>() << "\n";
            }
            for (const auto& v : doc["verdicts"]) {
                out_ << v["status"].get<std::string>() << " " << v["cell"].get<std::string>() << " computed "
                     << v["computed"]["text"].get<std::string>() << " expected "
                     << v["expected"]["text"].get<std::string>() << "\n";
            }
            for (const auto& c : doc["unasserted_inputs"]) err_ << "note: unasserted input " << c.get<std::string>() << "\n";
            for (const auto& e : doc["policy_errors"]) err_ << "warning: " << e.get<std::string>() << "\n";
        }
        for (const auto& v : doc["verdicts"]) {
            auto s = v["status"].get<std::string>();
            if (s == "RANGE_VIOLATION" || s == "ACTUAL_OUT") return kFindings;
        }
        return kOk;
    }

    int roles() {
        auto a = load(o_);
        for (const auto& w : a.roles.warnings) err_ << "warning: " << w << "\n";
        if (o_.json) {
            out_ << views::render(views::roles(a.roles));
        } else {
            for (const auto& [id, role] : a.roles.roles) out_ << to_string(id) << " " << to_string(role) << "\n";
        }
        return kOk;
    }

    int separate() {
        auto a = load(o_);
        auto s = sheetguard::separate(a.workbook, a.roles);
        auto text = print_workbook(s.workbook);
        if (!o_.out_path.empty()) write_file(o_.out_path, text);
        if (o_.json) {
            out_ << views::render(views::separation(s));
        } else if (o_.out_path.empty()) {
            out_ << text;
        }
        for (const auto& d : s.report.value_diffs) err_ << "value changed: " << d << "\n";
        return s.report.preserved ? kOk : kFindings;
    }

    int seal() {
        auto a = load(o_);
        auto m = sheetguard::seal(a.workbook, a.roles, a.policy_digest, "-", resolve_created_at(o_.created_at));
        if (!o_.chain.empty()) m = SealChain(o_.chain).append(m);
        if (!o_.manifest.empty()) {
            write_file(o_.manifest, manifest_to_json(m) + "\n");
            write_file(program_sidecar(o_.manifest), canonical_serialize_program(a.workbook, a.roles));
        }
        if (o_.json) {
            out_ << views::render(views::manifest(m));
        } else {
            out_ << "digest " << m.digest << "\nrole_digest " << m.role_digest << "\npolicy_digest " << m.policy_digest
                 << "\ncreated_at " << m.created_at << "\nprev " << m.prev << "\n";
        }
        return kOk;
    }

    int verify() {
        auto a = load(o_);
        views::SealInput input = read_seal_input(o_.manifest);
        bool chain_ok = true;
        if (!o_.chain.empty()) {
            auto entries = SealChain(o_.chain).read();
            chain_ok = chain_intact(entries);
            if (!input.manifest && !entries.empty()) input.manifest = entries.back();
        }
        auto doc = views::seal_status(a, input);
        if (!o_.chain.empty()) doc["chain"] = chain_ok ? "INTACT" : "BROKEN";
        if (o_.json) {
            out_ << views::render(doc);
        } else {
            out_ << doc["status"].get<std::string>() << " " << doc["digest"].get<std::string>() << "\n";
            if (doc.contains("checks")) {
                for (const auto& [k, v] : doc["checks"].items()) {
                    if (!v.get<bool>()) out_ << "  " << k << " differs\n";
                }
            }
            for (const auto& d : doc.value("diff", json::array())) {
                out_ << "  " << d["change"].get<std::string>() << " " << d["cell"].get<std::string>();
                if (!d["before"].get<std::string>().empty()) out_ << "\n    - " << d["before"].get<std::string>();
                if (!d["after"].get<std::string>().empty()) out_ << "\n    + " << d["after"].get<std::string>();
                out_ << "\n";
            }
            if (doc["status"] == "MISMATCH" && !doc["diff_available"].get<bool>()) {
                out_ << "  no retained serialization; digest-only comparison\n";
            }
            if (!o_.chain.empty()) out_ << "chain " << doc["chain"].get<std::string>() << "\n";
        }
        return doc["status"] == "MISMATCH" || !chain_ok ? kFindings : kOk;
    }

    int audit() {
        if (o_.session.empty()) throw UsageError("audit requires --session <file>");
        auto a = load(o_);
        const auto digest = a.program_digest();
        std::optional<AuditSession> session;
        if (fs::exists(o_.session)) {
            session = load_session(read_file(o_.session), digest);
        } else {
            auto strategy = parse_strategy(o_.strategy);
            if (!strategy) throw UsageError("unknown strategy '" + o_.strategy + "'");
            auto plan = plan_audit(a.workbook, a.graph, &a.copy_areas, a.anomalies, *strategy, o_.forward);
            session.emplace(fs::path(o_.session).stem().string(), std::move(plan), o_.budget, digest,
                            resolve_created_at(o_.created_at));
        }
        auto& s = *session;

        if (s.invalidated()) {
            err_ << "error: session " << s.id() << " is INVALIDATED: the workbook's program digest changed\n";
        } else {
            if (o_.elapsed >= 0 && o_.mark == 0) s.set_elapsed(o_.elapsed);
            if (o_.mark != 0) {
                auto state = parse_item_state(o_.state);
                if (!state) throw UsageError("--state must be checked or suspect");
                if (o_.elapsed >= 0 && o_.elapsed < s.elapsed_minutes()) throw UsageError("elapsed time may not decrease");
                s.mark(o_.mark, *state, o_.note);
                if (o_.elapsed >= 0) s.set_elapsed(o_.elapsed);
            }
            write_file(o_.session, save_session(s));
            if (s.over_budget()) err_ << "warning: session is over budget\n";
        }

        ReportContext ctx{a.anomalies, check_assertions(a.workbook, a.graph, a.policy.assertions).verdicts, digest};
        out_ << report(s, ctx, o_.json ? ReportFormat::Json : ReportFormat::Text);
        if (!o_.json && !s.invalidated()) {
            const auto* next = s.next_item();
            out_ << "next: " << (next ? std::to_string(next->id) + " " + next->subject : std::string("done")) << "\n";
        }
        return s.invalidated() ? kFindings : kOk;
    }

    int serve() {
        auto a = load(o_);
        ServiceOptions options;
        auto input = read_seal_input(o_.manifest);
        options.manifest = input.manifest;
        options.retained = input.retained;
        options.static_dir = optional_path(o_.static_dir);
        Service service(std::move(a), std::move(options));
        out_ << "listening on http://" << o_.host << ":" << o_.port << std::endl;
        if (!service.listen(o_.host, o_.port)) {
            err_ << "error: cannot listen on " << o_.host << ":" << o_.port << "\n";
            return kUsage;
        }
        return kOk;
    }

private:
    Options& o_;
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spreadsheet fraud-audit toolkit", "sheetguard"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Options o;
    int code = kOk;
    Commands commands(o, out, err);

    auto add = [&](const char* name, const char* help, int (Commands::*fn)()) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("workbook", o.workbook, "Workbook (.sgw)")->required()->check(CLI::ExistingFile);
        sub->add_flag("--json", o.json, "Print JSON");
        sub->callback([&, fn] { code = (commands.*fn)(); });
        return sub;
    };
    auto policy = [&](CLI::App* sub) { sub->add_option("--policy", o.policy, "Policy file")->check(CLI::ExistingFile); };

    auto* parse = add("parse", "Validate and print the canonical workbook", &Commands::parse);
    (void)parse;
    auto* eval = add("eval", "Evaluate every cell", &Commands::eval);
    eval->add_option("--cell", o.cell, "Only this cell (Sheet!A1)");
    policy(eval);
    auto* areas = add("areas", "Logical areas", &Commands::areas);
    areas->add_option("--level", o.level, "copy|logical|structural");
    auto* anomalies = add("anomalies", "Structural anomalies (exit 1 on ALERT)", &Commands::anomalies);
    (void)anomalies;
    add("classes", "Repeating row-block patterns", &Commands::classes);
    auto* flow = add("flow", "Dataflow graph or one cell's precedents/dependents", &Commands::flow);
    flow->add_option("--cell", o.cell, "Cell (Sheet!A1)");
    flow->add_option("--dir", o.dir, "precedents|dependents");
    auto* intervals = add("intervals", "Interval assertions (exit 1 on violations)", &Commands::intervals);
    policy(intervals);
    auto* roles = add("roles", "Cell roles", &Commands::roles);
    policy(roles);
    auto* separate = add("separate", "Front-sheet transform", &Commands::separate);
    policy(separate);
    separate->add_option("--out", o.out_path, "Write the separated workbook here");
    auto* seal = add("seal", "Seal the program portion", &Commands::seal);
    policy(seal);
    seal->add_option("--manifest", o.manifest, "Write the manifest here (plus <file>.program)");
    seal->add_option("--chain", o.chain, "Append to this seal chain");
    seal->add_option("--created-at", o.created_at, "Timestamp to record");
    auto* verify = add("verify", "Check the workbook against a seal (exit 1 on MISMATCH)", &Commands::verify);
    policy(verify);
    verify->add_option("--manifest", o.manifest, "Manifest file")->check(CLI::ExistingFile);
    verify->add_option("--chain", o.chain, "Seal chain to check")->check(CLI::ExistingFile);
    auto* audit = add("audit", "Create, advance or report an audit session", &Commands::audit);
    policy(audit);
    audit->add_option("--session", o.session, "Session file (created if missing)")->required();
    audit->add_option("--strategy", o.strategy, "scan|flow|areas");
    audit->add_flag("--forward", o.forward, "FLOW: trace along the flow");
    audit->add_option("--budget", o.budget, "Budget in minutes")->check(CLI::NonNegativeNumber);
    audit->add_option("--created-at", o.created_at, "Timestamp to record");
    audit->add_option("--elapsed", o.elapsed, "Clock reading in minutes")->check(CLI::NonNegativeNumber);
    audit->add_option("--mark", o.mark, "Item id to mark")->check(CLI::PositiveNumber);
    audit->add_option("--state", o.state, "checked|suspect");
    audit->add_option("--note", o.note, "Note (required for suspect)");
    auto* serve = add("serve", "HTTP service", &Commands::serve);
    policy(serve);
    serve->add_option("--manifest", o.manifest, "Manifest to report against")->check(CLI::ExistingFile);
    serve->add_option("--port", o.port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--host", o.host, "Address to bind");
    serve->add_option("--static", o.static_dir, "Directory served under /")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kOk;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << o.workbook << ": " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    return code;
}

}  // namespace sheetguard::tools
