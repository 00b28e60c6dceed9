#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "squarebox/errors.hpp"
#include "squarebox/inference.hpp"
#include "squarebox/stub_server.hpp"

namespace squarebox {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path for /logits
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  ep.path = prefix + "/logits";
  return ep;
}

std::string encode_request(const ImageTensor& image) {
  nlohmann::json body = {
      {"shape", {image.channels(), image.side(), image.side()}},
      {"image", std::vector<double>(image.data().begin(), image.data().end())},
  };
  return body.dump();
}

ImageTensor decode_request(const std::string& text) {
  const auto body = nlohmann::json::parse(text);
  const auto& shape = body.at("shape");
  if (!shape.is_array() || shape.size() != 3 || shape[1] != shape[2]) {
    throw ShapeError("shape must be [c, w, w]");
  }
  return ImageTensor(shape[0].get<int>(), shape[1].get<int>(),
                     body.at("image").get<std::vector<double>>());
}

}  // namespace

std::vector<double> query_remote(const std::string& endpoint, const ImageTensor& image,
                                 std::chrono::milliseconds timeout,
                                 std::size_t expected_classes) {
  const Endpoint ep = split_endpoint(endpoint);
  httplib::Client client(ep.origin);
  if (!client.is_valid()) throw NetworkError("invalid endpoint '" + endpoint + "'");
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  auto res = client.Post(ep.path, encode_request(image), "application/json");
  if (!res) {
    throw NetworkError("request to " + endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw HttpStatusError(res->status, "remote classifier returned status " +
                                           std::to_string(res->status));
  }

  std::vector<double> logits;
  try {
    const auto body = nlohmann::json::parse(res->body);
    const auto& arr = body.at("logits");
    if (!arr.is_array()) throw DecodeError("'logits' is not an array");
    logits.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) throw DecodeError("'logits' contains a non-number");
      logits.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed response body: ") + e.what());
  }
  if (expected_classes != 0 ? logits.size() != expected_classes : logits.size() < 2) {
    throw LengthMismatchError("remote classifier returned " + std::to_string(logits.size()) +
                              " logits, expected " +
                              (expected_classes ? std::to_string(expected_classes) : ">= 2"));
  }
  return logits;
}

RemoteClassifier::RemoteClassifier(std::string endpoint, std::size_t num_classes,
                                   std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), num_classes_(num_classes), timeout_(timeout) {
  if (num_classes_ < 2) throw ValueError("remote classifier needs at least 2 classes");
}

std::vector<double> RemoteClassifier::evaluate(const ImageTensor& image) const {
  return query_remote(endpoint_, image, timeout_, num_classes_);
}

struct LogitsServer::Impl {
  httplib::Server server;
  std::thread thread;
};

LogitsServer::LogitsServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/logits", [handler = std::move(handler)](const httplib::Request& req,
                                                              httplib::Response& res) {
    try {
      const ImageTensor image = decode_request(req.body);
      const nlohmann::json out = {{"logits", handler(image)}};
      res.set_content(out.dump(), "application/json");
    } catch (const nlohmann::json::exception& e) {
      res.status = 400;
      res.set_content(std::string("bad request: ") + e.what(), "text/plain");
    } catch (const ShapeError& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    } catch (const ValueError& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
    }
  });
}

LogitsServer::~LogitsServer() { stop(); }

int LogitsServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw NetworkError("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void LogitsServer::listen_blocking(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw NetworkError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void LogitsServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string LogitsServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace squarebox
