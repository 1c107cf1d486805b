#pragma once

#include <memory>
#include <string>

#include "hill/server/service.hpp"

namespace hill::server {

// HTTP front end.
//   POST /sessions                  body: options JSON     -> handle
//   GET  /sessions                                          -> [handle]
//   GET  /sessions/{id}                                     -> handle
//   GET  /sessions/{id}/log                                 -> experiment log (JSONL)
//   GET  /sessions/{id}/snapshot                            -> latest snapshot body
//   GET  /sessions/{id}/stream                              -> NDJSON stream of wire messages
//   POST /sessions/{id}/messages    body: client message   -> reply
// Errors answer with an error wire message and a 4xx status.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    // Returns false when the address cannot be bound. port 0 picks a free one.
    bool bind(const std::string& host, int port);
    int port() const noexcept { return port_; }
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
};

int http_status_for(ErrorCode code) noexcept;

}  // namespace hill::server
