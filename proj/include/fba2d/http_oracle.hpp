#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "fba2d/oracle.hpp"

namespace fba2d {

struct HttpOracleOptions {
  std::chrono::milliseconds timeout{5000};
  /// Extra attempts after the first one for connection errors and 5xx replies.
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{50};
  /// Sent as "Authorization: Bearer <token>" when set.
  std::optional<std::string> bearer_token;
};

/// Remote detector speaking the JSON protocol
///   POST <endpoint>, content-type: application/json,
///   body {"image_png_base64": "<base64 of an 8-bit PNG>"}
///   reply {"label": 0|1}
/// A retried call still counts as one ledger query. Only plain http:// is supported.
class HttpOracle final : public Oracle {
public:
  explicit HttpOracle(const std::string &endpoint, HttpOracleOptions options = {});
  ~HttpOracle() override;

  /// Requests sent including retries (diagnostics only; the ledger counts verdicts).
  std::uint64_t attempts() const { return attempts_.load(); }

protected:
  Label classify(const ImageTensor &img) override;

private:
  std::string host_;
  int port_ = 80;
  std::string path_;
  HttpOracleOptions options_;
  std::atomic<std::uint64_t> attempts_{0};
};

/// Builds the request body for img.
std::string make_oracle_request(const ImageTensor &img);
/// Parses a reply body; throws TransportError unless it is {"label": 0|1}.
Label parse_oracle_reply(const std::string &body);

/// In-process HTTP server that answers the oracle protocol with a wrapped local
/// oracle. Used as a test fixture and by the fba2d-mock-oracle tool.
class MockOracleServer {
public:
  explicit MockOracleServer(Oracle &backend, std::string host = "127.0.0.1", int port = 0);
  ~MockOracleServer();
  MockOracleServer(const MockOracleServer &) = delete;
  MockOracleServer &operator=(const MockOracleServer &) = delete;

  int port() const { return port_; }
  std::string endpoint() const;

  /// The next n requests get HTTP 503 without touching the backend.
  void fail_next(int n) { fail_remaining_.store(n); }
  /// Delay every reply, for timeout tests.
  void set_delay(std::chrono::milliseconds d) { delay_ms_.store(d.count()); }
  /// Replace every reply body with this literal (protocol-violation tests).
  void set_raw_reply(std::optional<std::string> body);

  std::uint64_t requests() const { return requests_.load(); }

  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Oracle &backend_;
  std::string host_;
  int port_ = 0;
  std::atomic<int> fail_remaining_{0};
  std::atomic<long long> delay_ms_{0};
  std::atomic<std::uint64_t> requests_{0};
  std::mutex raw_mutex_;
  std::optional<std::string> raw_reply_;
  std::thread thread_;
};

} // namespace fba2d
