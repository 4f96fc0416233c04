#pragma once

// Binds the service handlers to cpp-httplib routes under /api/v1.

#include <cstdint>
#include <span>
#include <string>

#include "httplib.h"
#include "kidvoice/service.hpp"

namespace kidvoice {

inline void mount_routes(httplib::Server& server, Service& svc) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Post("/api/v1/recognize", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
        reply(res, svc.recognize(std::span(data, req.body.size())));
    });
    server.Post("/api/v1/sessions", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.create_session(req.body));
    });
    server.Post(R"(/api/v1/sessions/([^/]+)/turn)", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.turn(req.matches[1], req.body));
    });
    server.Get(R"(/api/v1/sessions/([^/]+)/history)", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc.history(req.matches[1]));
    });
    server.Get("/api/v1/corpus/stats", [&svc, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, svc.corpus_stats());
    });
}

}  // namespace kidvoice
