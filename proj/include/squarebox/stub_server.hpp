#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "squarebox/core.hpp"

namespace squarebox {

// Minimal HTTP server speaking the remote-classifier protocol:
// POST /logits {"shape":[c,w,w],"image":[...]} -> {"logits":[...]}.
// The handler's return value is sent as the logits; exceptions thrown by the
// handler become status 400 (ShapeError/ValueError) or 500.
class LogitsServer {
 public:
  using Handler = std::function<std::vector<double>(const ImageTensor&)>;

  explicit LogitsServer(Handler handler);
  ~LogitsServer();
  LogitsServer(const LogitsServer&) = delete;
  LogitsServer& operator=(const LogitsServer&) = delete;

  // Binds and serves on a background thread. port == 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called from elsewhere.
  void listen_blocking(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

}  // namespace squarebox
