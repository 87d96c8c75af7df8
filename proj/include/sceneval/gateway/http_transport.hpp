#pragma once

#include <httplib.h>

#include "sceneval/gateway/transport.hpp"

namespace sceneval {

/// One connection per request; base_url may be http:// or https://.
class HttpTransport : public Transport {
public:
  HttpResponse post(const HttpRequest &request) override {
    httplib::Client client(request.base_url);
    const auto sec = static_cast<time_t>(request.timeout_s);
    const auto usec = static_cast<time_t>((request.timeout_s - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    for (const auto &[k, v] : request.headers)
      if (k != "Content-Type") headers.emplace(k, v);
    auto res = client.Post(request.path, headers, request.body, "application/json");
    HttpResponse out;
    if (!res) {
      const auto err = res.error();
      out.transport = (err == httplib::Error::Read || err == httplib::Error::Write ||
                       err == httplib::Error::ConnectionTimeout)
                          ? TransportStatus::Timeout
                          : TransportStatus::ConnectionError;
      out.error = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

} // namespace sceneval
