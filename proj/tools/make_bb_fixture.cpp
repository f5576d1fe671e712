// Writes a dense mixed-sign N = 30 program and its exhaustive optimum.
// Usage: make_bb_fixture <out_dir> [seed]
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "ifbound/optimizer.hpp"

using namespace ifbound;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_bb_fixture <out_dir> [seed]\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 30;
  constexpr std::size_t n = 30;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uv(0.0, 3.0);
  std::uniform_real_distribution<double> uq(-2.0, 2.0);
  BinaryProgram prog;
  prog.v.resize(n);
  for (double& x : prog.v) x = uv(rng);
  prog.q = SymMatrix(n);
  for (std::size_t i = 0; i < n; ++i) {
    prog.q.set_diagonal(i, uq(rng) + 1.0);
    for (std::size_t j = i + 1; j < n; ++j) prog.q.add_pair(i, j, uq(rng));
  }
  prog.q.finalize();
  prog.z = 1.959963984540054;
  prog.variance_floor = 4.0;

  const SolveResult r = solve_exact(prog, n);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "program.txt") << [&] {
    std::ostringstream ss;
    write_program(ss, prog);
    return ss.str();
  }();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g\n", r.incumbent_value);
  std::ofstream(dir / "optimum.txt") << buf;
  std::cout << "optimum " << buf;
  return 0;
}
