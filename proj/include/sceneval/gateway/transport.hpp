#pragma once

// Transport seam between the client and the network. Tests substitute
// capturing or failing transports; production uses HttpTransport.

#include <map>
#include <string>
#include <string_view>

namespace sceneval {

struct HttpRequest {
  std::string base_url;
  std::string path;
  std::map<std::string, std::string> headers;
  std::string body;
  double timeout_s = 60.0;
};

/// AssetError: the scenario's images could not be produced, so nothing was sent.
enum class TransportStatus { Ok, Timeout, ConnectionError, AuthFailure, HttpError, MockFailure, AssetError };

inline std::string_view to_string(TransportStatus s) {
  switch (s) {
  case TransportStatus::Ok: return "ok";
  case TransportStatus::Timeout: return "timeout";
  case TransportStatus::ConnectionError: return "connection_error";
  case TransportStatus::AuthFailure: return "auth_failure";
  case TransportStatus::HttpError: return "http_error";
  case TransportStatus::MockFailure: return "mock_failure";
  case TransportStatus::AssetError: return "asset_error";
  }
  return "http_error";
}

struct HttpResponse {
  /// Ok when an HTTP response arrived, whatever its status code.
  TransportStatus transport = TransportStatus::Ok;
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest &request) = 0;
};

} // namespace sceneval
