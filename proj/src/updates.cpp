#include "toric/updates.hpp"

#include <cmath>

#ifdef TORIC_DEBUG_CHECKS
#include <cstdio>
#endif

namespace toric {

std::uint64_t resolve_seed(std::uint64_t seed) {
  if (seed != 0) return seed;
  std::random_device rd;
  std::uint64_t s = 0;
  while (s == 0) s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return s;
}

ChainRng::ChainRng(std::uint64_t seed) : seed_(resolve_seed(seed)), engine_(seed_) {}

namespace {

double clamp_exp(double log_a) { return log_a >= 0.0 ? 1.0 : std::exp(log_a); }

UpdateOutcome decide(int id, double a, ChainRng& rng) {
  UpdateOutcome out;
  out.update_id = id;
  out.proposed = true;
  out.acceptance_probability = a;
  out.accepted = rng.uniform() < a;
  return out;
}

UpdateOutcome early_exit(int id) {
  UpdateOutcome out;
  out.update_id = id;
  return out;
}

}  // namespace

double insert_acceptance(double g, double beta, std::size_t n, double delta_u) {
  if (g <= 0.0) return 0.0;
  double nn = static_cast<double>(n);
  return clamp_exp(2.0 * std::log(g * beta) - delta_u - std::log((nn + 2.0) * (nn + 1.0)));
}

double remove_acceptance(double g, double beta, std::size_t n, double delta_u) {
  if (n < 2) return 0.0;
  // zero coupling: states with kinks carry zero weight, so leaving them is free
  if (g <= 0.0) return 1.0;
  double nn = static_cast<double>(n);
  return clamp_exp(std::log(nn * (nn - 1.0)) - delta_u - 2.0 * std::log(g * beta));
}

namespace {

// log of g_int g_field^k beta^(k+1) / ((n_cell + c) prod (n_i + c))
double log_conversion_ratio(double g_int, double g_field, double beta, std::size_t n_cell,
                            const std::vector<std::size_t>& n_links, double c) {
  const double k = static_cast<double>(n_links.size());
  double r = std::log(g_int) + k * std::log(g_field) + (k + 1.0) * std::log(beta) -
             std::log(static_cast<double>(n_cell) + c);
  for (std::size_t n : n_links) r -= std::log(static_cast<double>(n) + c);
  return r;
}

// A relation with m members is attempted with probability min(1, 4/m), the
// same for insertion and removal, so detailed balance is unaffected. Its
// action change costs O(kinks on all of its links), and global relations on
// large lattices are practically never accepted; this bounds their average
// cost per step.
constexpr double kRelationAttemptScale = 4.0;

bool skip_relation(std::size_t members, ChainRng& rng) {
  const double m = static_cast<double>(members);
  return m > kRelationAttemptScale && rng.uniform() * m >= kRelationAttemptScale;
}

}  // namespace

double insert_conversion_acceptance(double g_int, double g_field, double beta, std::size_t n_cell,
                                    const std::vector<std::size_t>& n_links, double delta_u) {
  if (g_int <= 0.0 || g_field <= 0.0) return 0.0;
  return clamp_exp(log_conversion_ratio(g_int, g_field, beta, n_cell, n_links, 1.0) - delta_u);
}

double remove_conversion_acceptance(double g_int, double g_field, double beta, std::size_t n_cell,
                                    const std::vector<std::size_t>& n_links, double delta_u) {
  if (n_cell == 0) return 0.0;
  for (std::size_t n : n_links)
    if (n == 0) return 0.0;
  if (g_int <= 0.0 || g_field <= 0.0) return 1.0;
  return clamp_exp(-log_conversion_ratio(g_int, g_field, beta, n_cell, n_links, 0.0) - delta_u);
}

namespace {

double log_relation_ratio(double g, double beta, const std::vector<std::size_t>& n, double c) {
  double r = static_cast<double>(n.size()) * std::log(g * beta);
  for (std::size_t k : n) r -= std::log(static_cast<double>(k) + c);
  return r;
}

}  // namespace

double insert_relation_acceptance(double g, double beta, const std::vector<std::size_t>& n_members,
                                  double delta_u) {
  if (g <= 0.0) return 0.0;
  return clamp_exp(log_relation_ratio(g, beta, n_members, 1.0) - delta_u);
}

double remove_relation_acceptance(double g, double beta, const std::vector<std::size_t>& n_members,
                                  double delta_u) {
  for (std::size_t n : n_members)
    if (n == 0) return 0.0;
  if (g <= 0.0) return 1.0;
  return clamp_exp(-log_relation_ratio(g, beta, n_members, 0.0) - delta_u);
}

UpdateOutcome update_insert_pair(Worldline& w, Species s, ChainRng& rng) {
  const int id = s == Species::field ? 0 : 2;
  const double g = s == Species::field ? w.field_coupling() : w.interaction_coupling();
  const int nt = w.n_targets(s);
  if (g <= 0.0 || nt == 0) return early_exit(id);
  const int target = static_cast<int>(rng.below(nt));
  const double t1 = rng.uniform(0.0, w.beta());
  const double t2 = rng.uniform(0.0, w.beta());
  auto d = w.pair_delta(s, target, t1, t2);
  if (!d) {
    UpdateOutcome out = early_exit(id);
    out.proposed = true;
    return out;
  }
  UpdateOutcome out = decide(id, insert_acceptance(g, w.beta(), w.n_kinks_on(s, target), *d), rng);
  if (out.accepted) w.apply_kink_pair(s, target, t1, t2);
  return out;
}

UpdateOutcome update_remove_pair(Worldline& w, Species s, ChainRng& rng) {
  const int id = s == Species::field ? 1 : 3;
  const int nt = w.n_targets(s);
  if (w.n_kinks(s) < 2 || nt == 0) return early_exit(id);
  const int target = static_cast<int>(rng.below(nt));
  const std::size_t n = w.n_kinks_on(s, target);
  if (n < 2) return early_exit(id);
  std::size_t i = rng.below(n);
  std::size_t j = rng.below(n - 1);
  if (j >= i) ++j;
  const auto times = w.kink_times(s, target);
  const double t1 = times[i], t2 = times[j];
  const double g = s == Species::field ? w.field_coupling() : w.interaction_coupling();
  const double d = w.remove_pair_delta(s, target, t1, t2);
  UpdateOutcome out = decide(id, remove_acceptance(g, w.beta(), n, d), rng);
  if (out.accepted) w.remove_kink_pair(s, target, t1, t2);
  return out;
}

UpdateOutcome update_insert_conversion(Worldline& w, ChainRng& rng) {
  const int id = 2;
  const double gi = w.interaction_coupling(), gf = w.field_coupling();
  const int nt = w.n_targets(Species::interaction);
  if (gi <= 0.0 || gf <= 0.0 || nt == 0) return early_exit(id);
  const int target = static_cast<int>(rng.below(nt));
  const auto& links = w.target_links(Species::interaction, target);
  const double t0 = rng.uniform(0.0, w.beta());
  std::vector<double> times(links.size());
  std::vector<std::size_t> counts(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    times[i] = rng.uniform(0.0, w.beta());
    counts[i] = w.n_kinks_on(Species::field, links[i]);
  }
  const std::size_t n_cell = w.n_kinks_on(Species::interaction, target);
  // Applied tentatively: the arcs of different links interact through shared
  // cells, so the action change is easiest to obtain by doing the move.
  auto d = w.apply_conversion(target, t0, times);
  if (!d) {
    UpdateOutcome out = early_exit(id);
    out.proposed = true;
    return out;
  }
  UpdateOutcome out =
      decide(id, insert_conversion_acceptance(gi, gf, w.beta(), n_cell, counts, *d), rng);
  if (!out.accepted) w.remove_conversion(target, t0, times);
  return out;
}

UpdateOutcome update_remove_conversion(Worldline& w, ChainRng& rng) {
  const int id = 3;
  const int nt = w.n_targets(Species::interaction);
  if (w.n_kinks(Species::interaction) == 0 || nt == 0) return early_exit(id);
  const int target = static_cast<int>(rng.below(nt));
  const std::size_t n_cell = w.n_kinks_on(Species::interaction, target);
  if (n_cell == 0) return early_exit(id);
  const auto& links = w.target_links(Species::interaction, target);
  std::vector<std::size_t> counts(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    counts[i] = w.n_kinks_on(Species::field, links[i]);
    if (counts[i] == 0) return early_exit(id);
  }
  const double t0 = w.kink_times(Species::interaction, target)[rng.below(n_cell)];
  std::vector<double> times(links.size());
  for (std::size_t i = 0; i < links.size(); ++i)
    times[i] = w.kink_times(Species::field, links[i])[rng.below(counts[i])];
  const double d = w.remove_conversion(target, t0, times);
  UpdateOutcome out = decide(id,
                             remove_conversion_acceptance(w.interaction_coupling(), w.field_coupling(),
                                                          w.beta(), n_cell, counts, d),
                             rng);
  if (!out.accepted) w.apply_conversion(target, t0, times);
  return out;
}

UpdateOutcome update_insert_relation(Worldline& w, ChainRng& rng) {
  const int id = 2;
  const double g = w.interaction_coupling();
  if (g <= 0.0 || w.n_relations() == 0) return early_exit(id);
  const std::size_t r = rng.below(w.n_relations());
  const auto& members = w.relation_targets(r);
  if (skip_relation(members.size(), rng)) return early_exit(id);
  std::vector<double> times(members.size());
  std::vector<std::size_t> counts(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    times[k] = rng.uniform(0.0, w.beta());
    counts[k] = w.n_kinks_on(Species::interaction, members[k]);
  }
  auto d = w.apply_relation(r, times);
  if (!d) {
    UpdateOutcome out = early_exit(id);
    out.proposed = true;
    return out;
  }
  UpdateOutcome out = decide(id, insert_relation_acceptance(g, w.beta(), counts, *d), rng);
  if (!out.accepted) w.remove_relation(r, times);
  return out;
}

UpdateOutcome update_remove_relation(Worldline& w, ChainRng& rng) {
  const int id = 3;
  if (w.n_relations() == 0 || w.n_kinks(Species::interaction) == 0) return early_exit(id);
  const std::size_t r = rng.below(w.n_relations());
  const auto& members = w.relation_targets(r);
  if (skip_relation(members.size(), rng)) return early_exit(id);
  std::vector<std::size_t> counts(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    counts[k] = w.n_kinks_on(Species::interaction, members[k]);
    if (counts[k] == 0) return early_exit(id);
  }
  std::vector<double> times(members.size());
  for (std::size_t k = 0; k < members.size(); ++k)
    times[k] = w.kink_times(Species::interaction, members[k])[rng.below(counts[k])];
  const double d = w.remove_relation(r, times);
  UpdateOutcome out =
      decide(id, remove_relation_acceptance(w.interaction_coupling(), w.beta(), counts, d), rng);
  if (!out.accepted) w.apply_relation(r, times);
  return out;
}

UpdateOutcome update_shift_kink(Worldline& w, ChainRng& rng) {
  const int id = 4;
  if (w.n_kinks() == 0) return early_exit(id);
  const std::size_t slot = rng.below(w.n_kinks());
  const auto win = w.shift_window(slot);
  const double t_new = win.lo + rng.uniform() * win.length;
  auto d = w.shift_delta(slot, t_new);
  if (!d) {
    UpdateOutcome out = early_exit(id);
    out.proposed = true;
    return out;
  }
  UpdateOutcome out = decide(id, clamp_exp(-*d), rng);
  if (out.accepted) w.shift_kink(slot, t_new);
  return out;
}

UpdateOutcome update_flip_line(Worldline& w, FlipScope scope, ChainRng& rng) {
  const int id = scope == FlipScope::single_link ? 5 : 6;
  const int n = w.n_flip_sets(scope);
  if (n == 0) return early_exit(id);
  const int target = static_cast<int>(rng.below(n));
  UpdateOutcome out = decide(id, clamp_exp(-w.flip_delta(scope, target)), rng);
  if (out.accepted) w.flip_whole_line(scope, target);
  return out;
}

UpdateOutcome mc_step(Worldline& w, ChainRng& rng) {
  UpdateOutcome out;
  switch (rng.below(kNumUpdates)) {
    case 0: out = update_insert_pair(w, Species::field, rng); break;
    case 1: out = update_remove_pair(w, Species::field, rng); break;
    case 2:
      switch (rng.below(4)) {
        case 0: out = update_insert_conversion(w, rng); break;
        case 1: out = update_insert_relation(w, rng); break;
        default: out = update_insert_pair(w, Species::interaction, rng);
      }
      break;
    case 3:
      switch (rng.below(4)) {
        case 0: out = update_remove_conversion(w, rng); break;
        case 1: out = update_remove_relation(w, rng); break;
        default: out = update_remove_pair(w, Species::interaction, rng);
      }
      break;
    case 4: out = update_shift_kink(w, rng); break;
    case 5: out = update_flip_line(w, FlipScope::single_link, rng); break;
    default: out = update_flip_line(w, FlipScope::interaction_cell, rng); break;
  }
#ifdef TORIC_DEBUG_CHECKS
  w.check_invariants();
  std::fprintf(stderr, "update %d proposed %d accepted %d A=%.6g\n", out.update_id, out.proposed,
               out.accepted, out.acceptance_probability);
#endif
  return out;
}

}  // namespace toric
