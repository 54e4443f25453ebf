#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "mpr/embedding_store.hpp"
#include "mpr/error.hpp"
#include "oracle.hpp"

namespace fixture {

/// Code of the mpr::Error thrown by fn, or nullopt when nothing is thrown.
template <typename Fn>
std::optional<mpr::ErrorCode> error_code(Fn&& fn) {
  try {
    fn();
  } catch (const mpr::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("mpr_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Gaussian rows scaled to unit norm.
inline std::vector<float> unit_rows(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> v(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double n2 = 0.0;
    std::vector<double> tmp(dim);
    for (auto& x : tmp) {
      x = g(rng);
      n2 += x * x;
    }
    const double n = std::sqrt(n2);
    for (std::size_t c = 0; c < dim; ++c) v[r * dim + c] = static_cast<float>(tmp[c] / n);
  }
  return v;
}

inline mpr::EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::mt19937_64& rng,
                                          mpr::Side side, const std::string& prefix) {
  return mpr::EmbeddingMatrix(ids(prefix, rows), dim, unit_rows(rows, dim, rng), side);
}

inline oracle::Dense dense(const mpr::EmbeddingMatrix& m) {
  oracle::Dense d;
  d.rows = m.rows();
  d.dim = m.dim();
  d.v.assign(m.values().begin(), m.values().end());
  return d;
}

inline mpr::ModelCard card(const std::string& name = "TestNet") {
  return {name, "TestFamily", 151.0, "SyntheticSet", 224, "TestNet"};
}

inline mpr::Manifest manifest(mpr::Side side, const std::string& name = "TestNet") {
  mpr::Manifest m;
  m.model = card(name);
  m.side = side;
  m.created_at = "2025-01-01T00:00:00Z";
  return m;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

/// Chat-completion stub on a loopback port. The handler receives the request
/// number (0-based) and returns the response body.
class StubEndpoint {
 public:
  using Handler = std::function<std::string(int call, const std::string& request_body)>;

  explicit StubEndpoint(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int call = 0;
      {
        std::lock_guard lock(mu_);
        call = calls_++;
        last_request_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      res.set_content(handler_(call, req.body), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }
  std::string last_request() const {
    std::lock_guard lock(mu_);
    return last_request_;
  }
  std::string last_auth() const {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

  /// Wraps a label in an OpenAI-style envelope.
  static std::string reply(const std::string& content) {
    nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
    return j.dump();
  }
  static std::string label(const std::string& caption) {
    return reply(nlohmann::json{{"label", caption}}.dump());
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  int calls_ = 0;
  std::string last_request_;
  std::string last_auth_;
};

/// A port nothing listens on: bind, record, close.
inline int closed_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  return port;
}

inline const char* kHersheyCaption =
    "The product is Hershey's Genuine Chocolate Syrup, a fat-free, 16 oz dark brown chocolate "
    "syrup in a bottle with a black cap.";

}  // namespace fixture
