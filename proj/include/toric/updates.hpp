#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "toric/worldline.hpp"

namespace toric {

// Update ids: 0 insert field pair, 1 remove field pair, 2 insert interaction
// kinks, 3 remove interaction kinks, 4 shift kink, 5 flip link line,
// 6 flip interaction-cell line. Updates 2 and 3 propose a pair with
// probability 1/2, a conversion (Worldline::apply_conversion) with 1/4 and a
// relation (Worldline::apply_relation) with 1/4.
inline constexpr int kNumUpdates = 7;

struct UpdateOutcome {
  int update_id = 0;
  bool proposed = false;
  bool accepted = false;
  double acceptance_probability = 0.0;
};

class ChainRng {
 public:
  // seed 0 draws a seed from std::random_device
  explicit ChainRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t resolve_seed(std::uint64_t seed);

UpdateOutcome update_insert_pair(Worldline& w, Species s, ChainRng& rng);
UpdateOutcome update_remove_pair(Worldline& w, Species s, ChainRng& rng);
UpdateOutcome update_insert_conversion(Worldline& w, ChainRng& rng);
UpdateOutcome update_remove_conversion(Worldline& w, ChainRng& rng);
UpdateOutcome update_insert_relation(Worldline& w, ChainRng& rng);
UpdateOutcome update_remove_relation(Worldline& w, ChainRng& rng);
UpdateOutcome update_shift_kink(Worldline& w, ChainRng& rng);
UpdateOutcome update_flip_line(Worldline& w, FlipScope scope, ChainRng& rng);

// Acceptance probabilities, exposed for tests.
double insert_acceptance(double g, double beta, std::size_t n, double delta_u);
double remove_acceptance(double g, double beta, std::size_t n, double delta_u);
// n_cell: interaction kinks on the target before the move; n_links: field
// kinks on each of its links before the move.
double insert_conversion_acceptance(double g_int, double g_field, double beta, std::size_t n_cell,
                                    const std::vector<std::size_t>& n_links, double delta_u);
double remove_conversion_acceptance(double g_int, double g_field, double beta, std::size_t n_cell,
                                    const std::vector<std::size_t>& n_links, double delta_u);

// g^m beta^m / prod(n_k + 1) over the m relation members, n_k counted before.
double insert_relation_acceptance(double g, double beta, const std::vector<std::size_t>& n_members,
                                  double delta_u);
double remove_relation_acceptance(double g, double beta, const std::vector<std::size_t>& n_members,
                                  double delta_u);

UpdateOutcome mc_step(Worldline& w, ChainRng& rng);

}  // namespace toric
