// Writes a synthetic WHO-shaped CSV: make_synthetic <out.csv> [countries] [seed]
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "synthetic_who.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic <out.csv> [countries] [seed]\n";
    return 2;
  }
  const std::size_t n = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 60;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;
  std::ofstream(argv[1]) << lifexp::testing::synthetic_who_csv(lifexp::testing::bundled_countries(n), seed);
  return 0;
}
