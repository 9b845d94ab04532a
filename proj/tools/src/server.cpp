#include "server.hpp"
#include "json_views.hpp"

#include <sheetguard/audit.hpp>
#include <sheetguard/error.hpp>

#include <httplib.h>

#include <map>
#include <mutex>

namespace sheetguard::tools {

using views::json;

namespace {

struct SessionEntry {
    explicit SessionEntry(AuditSession s) : session(std::move(s)) {}
    std::mutex mutex;
    AuditSession session;
};

void send(httplib::Response& res, int status, const json& doc) {
    res.status = status;
    res.set_content(views::render(doc), "application/json");
}

/// Maps library errors onto status codes.
template <class F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const TransitionError& e) {
        send(res, 409, views::error(e.what()));
    } catch (const NotFoundError& e) {
        send(res, 404, views::error(e.what()));
    } catch (const Error& e) {
        send(res, 400, views::error(e.what()));
    } catch (const json::exception& e) {
        send(res, 400, views::error(std::string("bad request body: ") + e.what()));
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw UsageError(std::string("malformed JSON body: ") + e.what());
    }
}

}  // namespace

struct Service::Impl {
    Analysis analysis;
    ServiceOptions options;
    httplib::Server server;

    std::mutex store_mutex;
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
    int next_id = 1;

    Impl(Analysis a, ServiceOptions o) : analysis(std::move(a)), options(std::move(o)) { routes(); }

    std::shared_ptr<SessionEntry> find_session(const std::string& id) {
        std::lock_guard lock(store_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw NotFoundError("unknown session " + id);
        return it->second;
    }

    void routes() {
        auto get = [this](const std::string& path, auto view) {
            server.Get(path, [view](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { send(res, 200, view(req)); });
            });
        };
        const auto& a = analysis;

        get("/api/workbook", [&a](const httplib::Request&) { return views::workbook(a); });
        get("/api/values", [&a](const httplib::Request&) { return views::values(a.workbook, a.values); });
        get("/api/areas", [&a](const httplib::Request& req) {
            auto text = req.has_param("level") ? req.get_param_value("level") : std::string("copy");
            auto level = parse_level(text);
            if (!level) throw UsageError("unknown level '" + text + "'");
            return views::areas(a, *level);
        });
        get("/api/anomalies", [&a](const httplib::Request&) { return views::anomalies(a.anomalies); });
        get("/api/classes", [&a](const httplib::Request&) { return views::classes(a); });
        get("/api/flow", [&a](const httplib::Request& req) {
            return views::flow(a, req.get_param_value("cell"), req.get_param_value("dir"));
        });
        get("/api/intervals", [&a](const httplib::Request&) { return views::intervals(a); });
        get("/api/roles", [&a](const httplib::Request&) { return views::roles(a.roles); });
        get("/api/seal", [this](const httplib::Request&) {
            return views::seal_status(analysis, {options.manifest, options.retained});
        });

        server.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto body = parse_body(req);
                auto strategy = parse_strategy(body.value("strategy", std::string("AREAS")));
                if (!strategy) throw UsageError("unknown strategy");
                double budget = body.value("budget_minutes", 30.0);
                auto plan = plan_audit(analysis.workbook, analysis.graph, &analysis.copy_areas, analysis.anomalies,
                                       *strategy, body.value("forward", false));
                auto created = resolve_created_at(body.value("created_at", std::string()));
                std::shared_ptr<SessionEntry> entry;
                {
                    std::lock_guard lock(store_mutex);
                    auto id = "s" + std::to_string(next_id++);
                    entry = std::make_shared<SessionEntry>(
                        AuditSession(id, std::move(plan), budget, analysis.program_digest(), created));
                    sessions.emplace(id, entry);
                }
                std::lock_guard lock(entry->mutex);
                send(res, 201, views::session(entry->session));
            });
        });
        server.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto entry = find_session(req.matches[1]);
                std::lock_guard lock(entry->mutex);
                send(res, 200, views::session(entry->session));
            });
        });
        server.Get(R"(/api/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto entry = find_session(req.matches[1]);
                std::lock_guard lock(entry->mutex);
                send(res, 200, views::next(entry->session));
            });
        });
        server.Post(R"(/api/sessions/([^/]+)/items/([^/]+)/mark)",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        guarded(res, [&] {
                            auto entry = find_session(req.matches[1]);
                            int item_id = 0;
                            try {
                                item_id = std::stoi(req.matches[2]);
                            } catch (const std::exception&) {
                                throw NotFoundError("unknown item " + std::string(req.matches[2]));
                            }
                            auto body = parse_body(req);
                            auto state = parse_item_state(body.value("state", std::string()));
                            if (!state) throw UsageError("state must be CHECKED or SUSPECT");
                            std::lock_guard lock(entry->mutex);
                            auto& session = entry->session;
                            double elapsed = body.value("elapsed_minutes", session.elapsed_minutes());
                            if (!(elapsed >= session.elapsed_minutes())) throw UsageError("elapsed time may not decrease");
                            session.mark(item_id, *state, body.value("note", std::string()));
                            session.set_elapsed(elapsed);
                            send(res, 200, views::session(entry->session));
                        });
                    });
        server.Post("/api/whatif", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send(res, 200, views::whatif(analysis, parse_body(req))); });
        });

        if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
    }
};

Service::Service(Analysis analysis, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(analysis), std::move(options))) {}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace sheetguard::tools
