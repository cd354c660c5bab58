// Prints index_select(SHA-256(i), n, k) for i in [0, count), one set per line.
#include <cstdlib>
#include <iostream>
#include <string>

#include "blmchain/index_set.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: index_dump COUNT N K\n";
    return 2;
  }
  const unsigned long count = std::stoul(argv[1]);
  const auto n = static_cast<std::uint32_t>(std::stoul(argv[2]));
  const auto k = static_cast<std::uint32_t>(std::stoul(argv[3]));
  for (unsigned long i = 0; i < count; ++i) {
    const std::string label = std::to_string(i);
    const auto set = blmchain::index_select(blmchain::sha256(blmchain::as_bytes(label)), n, k);
    for (auto v : set) std::cout << v << ' ';
    std::cout << '\n';
  }
  return 0;
}
