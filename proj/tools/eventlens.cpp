#include <iostream>
#include <string>
#include <vector>

#include "eventlens/cli.hpp"
#include "eventlens/http_transport.hpp"

int main(int argc, char** argv) {
  eventlens::HttpTransport transport;
  eventlens::SystemClock clock;
  std::vector<std::string> args(argv + 1, argv + argc);
  return eventlens::cli::run_cli(args, std::cout, std::cerr, {transport, clock});
}
