#include "sparsemeter/random.hpp"

#include <numeric>

namespace sparsemeter {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  // FNV-1a over the key, then mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

Vector random_unit_vector(Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  double norm = 0.0;
  do {
    for (Index k = 0; k < d; ++k) v[k] = normal(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

std::vector<Index> sample_without_replacement(Index population, Index count, Rng& rng) {
  if (count > population) throw InvalidArgument("cannot sample more items than the population holds");
  // Partial Fisher-Yates.
  std::vector<Index> pool(static_cast<std::size_t>(population));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, population - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace sparsemeter
