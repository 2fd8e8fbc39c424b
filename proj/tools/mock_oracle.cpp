// fba2d-mock-oracle: serves a builtin detector over the HTTP oracle protocol.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "fba2d/http_oracle.hpp"
#include "fba2d/oracle.hpp"

namespace {
fba2d::MockOracleServer *g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
} // namespace

int main(int argc, char **argv) {
  CLI::App app{"HTTP mock of a real/fake detector"};
  std::string host = "127.0.0.1";
  int port = 8765;
  std::size_t height = 32, width = 32;
  double threshold = fba2d::FreqEnergyDefaults::threshold;
  double high_fraction = fba2d::FreqEnergyDefaults::high_fraction;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--height", height);
  app.add_option("--width", width);
  app.add_option("--threshold", threshold, "freq-energy threshold");
  app.add_option("--high-fraction", high_fraction, "freq-energy high band fraction");
  CLI11_PARSE(app, argc, argv);

  try {
    fba2d::FreqEnergyOracle oracle(fba2d::FrequencyMask::bands(height, width, 0.0, high_fraction),
                                   threshold);
    fba2d::MockOracleServer server(oracle, host, port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << server.endpoint() << std::endl;
    server.wait();
    g_server = nullptr;
    std::cerr << "served " << oracle.queries() << " verdicts\n";
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
