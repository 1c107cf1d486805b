#include "hill/server/http.hpp"

#include <atomic>

#include <httplib.h>

#include "../json_io.hpp"

namespace hill::server {

using detail::json;

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::illegal_transition:
        case ErrorCode::wrong_state: return 409;
        case ErrorCode::parse_error:
        case ErrorCode::invalid_argument:
        case ErrorCode::format_error:
        case ErrorCode::shape_mismatch: return 400;
        default: return 500;
    }
}

struct HttpServer::Impl {
    Service& service;
    httplib::Server http;
    std::atomic<bool> stopping{false};
    std::atomic<std::uint64_t> reply_seq{1};

    explicit Impl(Service& s) : service(s) {
        // httplib's default adds SO_REUSEPORT, which lets a second server share
        // the port silently.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        });
    }

    void reply_error(httplib::Response& res, const std::string& session_id, ErrorCode code, const std::string& detail) {
        res.status = http_status_for(code);
        res.set_content(envelope(ServerMessageType::error, session_id, reply_seq++, error_body(code, detail)),
                        "application/json");
    }

    template <class F>
    void guarded(httplib::Response& res, const std::string& session_id, F&& body) {
        try {
            body();
        } catch (const Error& e) {
            reply_error(res, session_id, e.code(), e.detail());
        } catch (const std::exception& e) {
            reply_error(res, session_id, ErrorCode::invalid_argument, e.what());
        }
    }

    void routes() {
        http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, "", [&] {
                const auto handle = service.create_session(req.body.empty() ? std::string("{}") : req.body);
                res.status = 201;
                res.set_content(handle_json(handle), "application/json");
            });
        });
        http.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, "", [&] {
                json out = json::array();
                for (const auto& h : service.list()) out.push_back(json::parse(handle_json(h)));
                res.set_content(out.dump(), "application/json");
            });
        });
        http.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            guarded(res, id, [&] { res.set_content(handle_json(service.get(id)), "application/json"); });
        });
        http.Get(R"(/sessions/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            guarded(res, id, [&] { res.set_content(service.find(id)->log_jsonl(), "application/x-ndjson"); });
        });
        http.Get(R"(/sessions/([^/]+)/snapshot)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            guarded(res, id, [&] {
                const auto snap = service.find(id)->latest_snapshot();
                if (!snap) throw Error(ErrorCode::not_found, "no snapshot yet");
                res.set_content(snapshot_body(*snap), "application/json");
            });
        });
        http.Post(R"(/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            guarded(res, id, [&] { res.set_content(service.post_message(id, req.body), "application/json"); });
        });
        http.Get(R"(/sessions/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            guarded(res, id, [&] {
                auto sub = service.find(id)->subscribe();
                res.set_chunked_content_provider(
                    "application/x-ndjson",
                    [this, sub](std::size_t, httplib::DataSink& sink) {
                        if (stopping) {
                            sink.done();
                            return true;
                        }
                        if (auto msg = sub->pop(std::chrono::milliseconds(200))) {
                            msg->push_back('\n');
                            return sink.write(msg->data(), msg->size());
                        }
                        if (sub->closed()) {
                            sink.done();
                            return true;
                        }
                        return sink.is_writable();
                    },
                    [sub](bool) { sub->close(); });
            });
        });
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->http.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->http.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void HttpServer::listen() { impl_->http.listen_after_bind(); }

void HttpServer::stop() {
    impl_->stopping = true;
    impl_->http.stop();
}

}  // namespace hill::server
