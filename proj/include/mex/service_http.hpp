#pragma once
// HTTP transport for Service. Needs a thread library at link time.

#include "mex/service.hpp"

#include <httplib.h>

#include <string>

namespace mex {

/// Routes every request to `service`. `origin` goes into
/// Access-Control-Allow-Origin.
inline void bind_service(httplib::Server& server, Service& service, const std::string& origin = "*") {
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    Response r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

}  // namespace mex
