#include "fba2d/http_oracle.hpp"

#include <regex>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fba2d/image_io.hpp"

namespace fba2d {

std::string make_oracle_request(const ImageTensor &img) {
  nlohmann::json j;
  j["image_png_base64"] = base64_encode(encode_png(img));
  return j.dump();
}

Label parse_oracle_reply(const std::string &body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception &e) {
    throw TransportError(std::string("oracle reply is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("label") || !j["label"].is_number_integer())
    throw TransportError("oracle reply lacks an integer \"label\": " + body);
  const auto v = j["label"].get<long long>();
  if (v == 0) return Label::Real;
  if (v == 1) return Label::Fake;
  throw TransportError("oracle reply label out of range: " + std::to_string(v));
}

HttpOracle::HttpOracle(const std::string &endpoint, HttpOracleOptions options)
    : options_(std::move(options)) {
  static const std::regex url(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, url))
    throw std::invalid_argument("unsupported oracle endpoint (expected http://host[:port]/path): " +
                                endpoint);
  host_ = m[1].str();
  if (m[2].matched) port_ = std::stoi(m[2].str());
  path_ = m[3].matched ? m[3].str() : "/";
  if (options_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

HttpOracle::~HttpOracle() = default;

Label HttpOracle::classify(const ImageTensor &img) {
  const std::string body = make_oracle_request(img);
  httplib::Headers headers;
  if (options_.bearer_token) headers.emplace("Authorization", "Bearer " + *options_.bearer_token);

  // One client per call keeps concurrent runs independent.
  httplib::Client client(host_, port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);

  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    ++attempts_;
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300)
      throw TransportError("oracle returned HTTP " + std::to_string(res->status));
    return parse_oracle_reply(res->body);
  }
  throw TransportError("oracle unreachable after " + std::to_string(options_.max_retries + 1) +
                       " attempts; " + last_error);
}

struct MockOracleServer::Impl {
  httplib::Server server;
};

MockOracleServer::MockOracleServer(Oracle &backend, std::string host, int port)
    : impl_(std::make_unique<Impl>()), backend_(backend), host_(std::move(host)) {
  impl_->server.Post(".*", [this](const httplib::Request &req, httplib::Response &res) {
    ++requests_;
    if (const auto d = delay_ms_.load(); d > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(d));
    if (fail_remaining_.load() > 0) {
      fail_remaining_.fetch_sub(1);
      res.status = 503;
      res.set_content(R"({"error":"injected failure"})", "application/json");
      return;
    }
    {
      std::lock_guard lock(raw_mutex_);
      if (raw_reply_) {
        res.set_content(*raw_reply_, "application/json");
        return;
      }
    }
    try {
      const auto j = nlohmann::json::parse(req.body);
      const ImageTensor img = decode_png(base64_decode(j.at("image_png_base64").get<std::string>()));
      const Label l = backend_.query(img);
      res.set_content(nlohmann::json{{"label", static_cast<int>(l)}}.dump(), "application/json");
    } catch (const std::exception &e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  port_ = port == 0 ? impl_->server.bind_to_any_port(host_)
                    : (impl_->server.bind_to_port(host_, port) ? port : -1);
  if (port_ <= 0) throw std::runtime_error("mock oracle could not bind " + host_);
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockOracleServer::~MockOracleServer() {
  stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockOracleServer::endpoint() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/classify";
}

void MockOracleServer::set_raw_reply(std::optional<std::string> body) {
  std::lock_guard lock(raw_mutex_);
  raw_reply_ = std::move(body);
}

void MockOracleServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void MockOracleServer::stop() { impl_->server.stop(); }

} // namespace fba2d
