#include "toric/worldline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "toric/error.hpp"

namespace toric {

Basis parse_basis(std::string_view name) {
  if (name == "x") return Basis::x;
  if (name == "z") return Basis::z;
  throw ConfigError("unsupported basis '" + std::string(name) + "' (valid: x, z)");
}

char to_char(Basis b) { return b == Basis::x ? 'x' : 'z'; }

namespace {
constexpr double kScale = 18446744073709551616.0;  // 2^64
// Line integrals are kept in units of 2^-48; |integral| <= beta keeps them in 64 bits.
constexpr double kTimeUnit = 0x1p48;
constexpr double kMaxBeta = 0x1p14;

std::int64_t fixed_time(double t) { return static_cast<std::int64_t>(t * kTimeUnit); }
double from_fixed_time(std::int64_t v) { return static_cast<double>(v) / kTimeUnit; }
}  // namespace

int Worldline::Line::value_at(double t) const {
  auto n = std::upper_bound(times.begin(), times.end(), t) - times.begin();
  return (n & 1) ? -base : base;
}

std::int64_t Worldline::Line::integral_to(double t) const {
  const auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  if (k == 0) return base * fixed_time(t);
  const int s = (k & 1) ? -base : base;
  return prefix[k - 1] + s * (fixed_time(t) - fixed_time(times[k - 1]));
}

void Worldline::Line::rebuild_from(std::size_t pos) {
  prefix.resize(times.size());
  for (std::size_t i = pos; i < times.size(); ++i) {
    if (i == 0) {
      prefix[0] = base * fixed_time(times[0]);
    } else {
      const int s = (i & 1) ? -base : base;
      prefix[i] = prefix[i - 1] + s * (fixed_time(times[i]) - fixed_time(times[i - 1]));
    }
  }
}

// A flip at t reflects the running integral about its value at t, so every
// later prefix p becomes 2 F(t) - p; integer arithmetic makes this agree
// exactly with rebuild_from.
void Worldline::Line::toggle(double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  auto pos = static_cast<std::ptrdiff_t>(it - times.begin());
  std::int64_t at;
  if (it != times.end() && *it == t) {
    at = prefix[pos];
    times.erase(it);
    prefix.erase(prefix.begin() + pos);
  } else {
    at = integral_to(t);
    times.insert(it, t);
    prefix.insert(prefix.begin() + pos, at);
    ++pos;
  }
  const std::int64_t twice = 2 * at;
  for (auto p = prefix.begin() + pos; p != prefix.end(); ++p) *p = twice - *p;
}

void Worldline::Line::negate() {
  base = -base;
  for (auto& p : prefix) p = -p;
}

void ExactSum::reset(double value) { raw_ = static_cast<__int128>(value * kScale); }

void ExactSum::add(double delta) { raw_ += static_cast<__int128>(delta * kScale); }

double ExactSum::value() const {
  return static_cast<double>(static_cast<long double>(raw_) / static_cast<long double>(kScale));
}

void Worldline::check_signs(Basis basis, const Couplings& c) {
  for (double g : {c.mu, c.h, c.J, c.lmbda})
    if (!std::isfinite(g)) throw ConfigError("couplings must be finite");
  if (basis == Basis::x && (c.J < 0 || c.lmbda < 0))
    throw ConfigError("sign problem: basis x requires J >= 0 and lmbda >= 0");
  if (basis == Basis::z && (c.mu < 0 || c.h < 0))
    throw ConfigError("sign problem: basis z requires mu >= 0 and h >= 0");
}

Worldline::Worldline(const Lattice& lattice, Basis basis, double beta, Couplings couplings,
                     int default_spin)
    : lattice_(&lattice), basis_(basis), beta_(beta), couplings_(couplings) {
  if (!(beta > 0) || !std::isfinite(beta)) throw ConfigError("beta must be positive and finite");
  if (beta > kMaxBeta) throw ConfigError("beta exceeds the supported maximum of 16384");
  if (default_spin != 1 && default_spin != -1) throw ConfigError("default_spin must be +1 or -1");
  check_signs(basis, couplings);

  diag_cells_ = basis == Basis::x ? &lattice.stars : &lattice.plaquettes;
  targets_ = basis == Basis::x ? &lattice.plaquettes : &lattice.stars;

  const int nl = lattice.n_links();
  single_links_.resize(nl);
  for (int l = 0; l < nl; ++l) single_links_[l] = {l};

  link_cells_.assign(nl, {});
  for (int c = 0; c < static_cast<int>(diag_cells_->size()); ++c)
    for (int l : (*diag_cells_)[c]) link_cells_[l].push_back(c);

  target_odd_cells_.assign(targets_->size(), {});
  for (std::size_t k = 0; k < targets_->size(); ++k) {
    std::vector<int> hits;
    for (int l : (*targets_)[k]) hits.insert(hits.end(), link_cells_[l].begin(), link_cells_[l].end());
    std::sort(hits.begin(), hits.end());
    for (std::size_t i = 0; i < hits.size();) {
      std::size_t j = i;
      while (j < hits.size() && hits[j] == hits[i]) ++j;
      if ((j - i) % 2 == 1) target_odd_cells_[k].push_back(hits[i]);
      i = j;
    }
  }

  build_relations();

  auto candidates = basis == Basis::x ? winding_cycles(lattice) : layer_cuts(lattice);
  for (auto& set : candidates) {
    if (set.empty()) continue;
    std::vector<int> overlap(diag_cells_->size(), 0);
    for (int l : set)
      for (int c : link_cells_[l]) ++overlap[c];
    if (std::all_of(overlap.begin(), overlap.end(), [](int n) { return n % 2 == 0; }))
      sector_sets_.push_back(std::move(set));
  }

  link_lines_.assign(nl, Line{});
  for (auto& line : link_lines_) line.base = default_spin;
  cell_lines_.assign(diag_cells_->size(), Line{});
  for (std::size_t c = 0; c < cell_lines_.size(); ++c)
    for (std::size_t k = 0; k < (*diag_cells_)[c].size(); ++k) cell_lines_[c].base *= default_spin;
  by_target_[0].assign(nl, {});
  by_target_[1].assign(targets_->size(), {});
  action_.reset(recompute_action());
}

void Worldline::build_relations() {
  const Lattice& lat = *lattice_;
  std::vector<std::vector<int>> candidates;
  std::vector<int> all(targets_->size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  candidates.push_back(all);
  if (basis_ == Basis::x && lat.lattice_type == LatticeType::cubic) {
    // plaquette index by (anchor cell, orientation)
    std::map<std::pair<IVec, int>, int> face;
    for (int p = 0; p < lat.n_plaquettes(); ++p)
      face[{lat.plaquette_anchor[p], lat.plaquette_kind[p]}] = p;
    auto wrap = [&](IVec r) {
      if (lat.periodic())
        for (int& c : r) c = ((c % lat.L) + lat.L) % lat.L;
      return r;
    };
    for (const auto& [key, p] : face) {
      if (key.second != 0) continue;
      const IVec r = key.first;
      const std::pair<IVec, int> faces[6] = {
          {r, 0}, {wrap({r[0], r[1], r[2] + 1}), 0}, {r, 1}, {wrap({r[0] + 1, r[1], r[2]}), 1},
          {r, 2}, {wrap({r[0], r[1] + 1, r[2]}), 2}};
      std::vector<int> cube;
      for (const auto& f : faces) {
        auto it = face.find(f);
        if (it == face.end()) break;
        cube.push_back(it->second);
      }
      if (cube.size() == 6) candidates.push_back(cube);
    }
  }
  for (auto& members : candidates) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    std::map<int, std::vector<int>> per_link;
    for (std::size_t k = 0; k < members.size(); ++k)
      for (int l : (*targets_)[members[k]]) per_link[l].push_back(static_cast<int>(k));
    bool closed = !per_link.empty();
    for (const auto& [l, m] : per_link) closed = closed && m.size() % 2 == 0;
    if (!closed) continue;
    Relation rel;
    rel.targets = members;
    for (auto& [l, m] : per_link) {
      rel.links.push_back(l);
      rel.members.push_back(std::move(m));
    }
    relations_.push_back(std::move(rel));
  }
}

void Worldline::set_couplings(const Couplings& couplings) {
  check_signs(basis_, couplings);
  couplings_ = couplings;
  action_.reset(recompute_action());
}

double Worldline::field_coupling() const {
  return basis_ == Basis::x ? couplings_.lmbda : couplings_.h;
}
double Worldline::interaction_coupling() const {
  return basis_ == Basis::x ? couplings_.J : couplings_.mu;
}
double Worldline::diag_field_coupling() const {
  return basis_ == Basis::x ? couplings_.h : couplings_.lmbda;
}
double Worldline::diag_cell_coupling() const {
  return basis_ == Basis::x ? couplings_.mu : couplings_.J;
}

int Worldline::n_targets(Species s) const {
  return s == Species::field ? lattice_->n_links() : static_cast<int>(targets_->size());
}

const std::vector<int>& Worldline::target_links(Species s, int target) const {
  return s == Species::field ? single_links_[target] : (*targets_)[target];
}

const std::vector<int>& Worldline::odd_cells(Species s, int target) const {
  return s == Species::field ? link_cells_[target] : target_odd_cells_[target];
}

int Worldline::spin_at(int link, double tau) const { return link_lines_[link].value_at(tau); }

std::vector<double> Worldline::kink_times(Species s, int target) const {
  std::vector<double> out;
  for (const Timed& t : by_target_[static_cast<int>(s)][target]) out.push_back(t.time);
  return out;
}

double Worldline::segment_spin(int link, double x, double y) const {
  return from_fixed_time(link_lines_[link].integral(x, y));
}

double Worldline::segment_cell(int cell, double x, double y) const {
  return from_fixed_time(cell_lines_[cell].integral(x, y));
}

double Worldline::walk_spin(int link, double x, double y) const {
  const Line& line = link_lines_[link];
  const auto& f = line.times;
  auto it = std::upper_bound(f.begin(), f.end(), x);
  double s = ((it - f.begin()) & 1) ? -line.base : line.base;
  double acc = 0.0, cur = x;
  for (; it != f.end() && *it < y; ++it) {
    acc += s * (*it - cur);
    cur = *it;
    s = -s;
  }
  return acc + s * (y - cur);
}

double Worldline::walk_cell(int cell, double x, double y) const {
  scratch_.clear();
  double s = 1.0;
  for (int l : diag_cells()[cell]) {
    const auto& f = link_lines_[l].times;
    auto it = std::upper_bound(f.begin(), f.end(), x);
    if ((it - f.begin()) & 1) s = -s;
    if (link_lines_[l].base < 0) s = -s;
    for (; it != f.end() && *it < y; ++it) scratch_.push_back(*it);
  }
  std::sort(scratch_.begin(), scratch_.end());
  double acc = 0.0, cur = x;
  for (double t : scratch_) {
    acc += s * (t - cur);
    cur = t;
    s = -s;
  }
  return acc + s * (y - cur);
}

double Worldline::segment_delta(const std::vector<int>& links, const std::vector<int>& cells,
                                double x, double y) const {
  double d = 0.0;
  const double gd = diag_field_coupling();
  if (gd != 0.0)
    for (int l : links) d += 2.0 * gd * segment_spin(l, x, y);
  const double gc = diag_cell_coupling();
  if (gc != 0.0)
    for (int c : cells) d += 2.0 * gc * segment_cell(c, x, y);
  return d;
}

double Worldline::arc_delta(const std::vector<int>& links, const std::vector<int>& cells, double a,
                            double b) const {
  if (a < b) return segment_delta(links, cells, a, b);
  return segment_delta(links, cells, a, beta_) + segment_delta(links, cells, 0.0, b);
}

bool Worldline::collides(const std::vector<int>& links, double t) const {
  if (!(t > 0.0) || !(t < beta_)) return true;
  for (int l : links)
    if (std::binary_search(link_lines_[l].times.begin(), link_lines_[l].times.end(), t)) return true;
  return false;
}

std::optional<double> Worldline::pair_delta(Species s, int target, double t1, double t2) const {
  const auto& links = target_links(s, target);
  if (t1 == t2 || collides(links, t1) || collides(links, t2)) return std::nullopt;
  return arc_delta(links, odd_cells(s, target), t1, t2);
}

void Worldline::flip_base(const std::vector<int>& links) {
  for (int l : links) negate_link(l);
}

void Worldline::negate_link(int link) {
  link_lines_[link].negate();
  for (int c : link_cells_[link]) cell_lines_[c].negate();
}

void Worldline::toggle_flip(int link, double t) {
  link_lines_[link].toggle(t);
  for (int c : link_cells_[link]) cell_lines_[c].toggle(t);
}

void Worldline::register_kink(Species s, int target, double t) {
  auto& list = by_target_[static_cast<int>(s)][target];
  Timed rec{t, static_cast<std::uint32_t>(kinks_.size())};
  list.insert(std::upper_bound(list.begin(), list.end(), t,
                               [](double v, const Timed& e) { return v < e.time; }),
              rec);
  kinks_.push_back({t, s, target});
  ++count_[static_cast<int>(s)];
}

void Worldline::insert_kink(Species s, int target, double t) {
  register_kink(s, target, t);
  for (int l : target_links(s, target)) toggle_flip(l, t);
}

void Worldline::unregister_kink(Species s, int target, double t) {
  auto find_slot = [](std::vector<Timed>& list, double time) {
    auto it = std::lower_bound(list.begin(), list.end(), time,
                               [](const Timed& e, double v) { return e.time < v; });
    if (it == list.end() || it->time != time) throw std::logic_error("kink not found on target");
    return it;
  };
  auto& list = by_target_[static_cast<int>(s)][target];
  auto it = find_slot(list, t);
  const std::uint32_t slot = it->slot;
  list.erase(it);
  const std::uint32_t last = static_cast<std::uint32_t>(kinks_.size() - 1);
  if (slot != last) {
    const Kink moved = kinks_[last];
    kinks_[slot] = moved;
    find_slot(by_target_[static_cast<int>(moved.species)][moved.target], moved.time)->slot = slot;
  }
  kinks_.pop_back();
  --count_[static_cast<int>(s)];
}

void Worldline::erase_kink(Species s, int target, double t) {
  unregister_kink(s, target, t);
  for (int l : target_links(s, target)) {
    if (!std::binary_search(link_lines_[l].times.begin(), link_lines_[l].times.end(), t))
      throw std::logic_error("flip time not found");
    toggle_flip(l, t);
  }
}

// Flips one link on the wrapped arc [a, b): the flip times a and b are added
// when absent and removed when present.
double Worldline::toggle_link_arc(int link, double a, double b) {
  const double d = arc_delta(single_links_[link], link_cells_[link], a, b);
  toggle_flip(link, a);
  toggle_flip(link, b);
  if (b < a) negate_link(link);
  action_.add(d);
  return d;
}

std::optional<double> Worldline::apply_conversion(int target, double t0,
                                                  const std::vector<double>& field_times) {
  const auto& links = (*targets_)[target];
  if (field_times.size() != links.size()) throw std::logic_error("conversion needs one time per link");
  if (collides(links, t0)) return std::nullopt;
  for (std::size_t i = 0; i < links.size(); ++i)
    if (field_times[i] == t0 || collides(single_links_[links[i]], field_times[i]))
      return std::nullopt;
  double d = 0.0;
  for (std::size_t i = 0; i < links.size(); ++i) d += toggle_link_arc(links[i], t0, field_times[i]);
  register_kink(Species::interaction, target, t0);
  for (std::size_t i = 0; i < links.size(); ++i)
    register_kink(Species::field, links[i], field_times[i]);
  return d;
}

double Worldline::toggle_relation_links(const Relation& rel, const std::vector<double>& times,
                                        bool reverse) {
  double d = 0.0;
  std::vector<double> t;
  const std::size_t n = rel.links.size();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t idx = reverse ? n - 1 - j : j;
    t.clear();
    for (int k : rel.members[idx]) t.push_back(times[k]);
    std::sort(t.begin(), t.end());
    const std::size_t pairs = t.size() / 2;
    for (std::size_t q = 0; q < pairs; ++q) {
      const std::size_t qq = reverse ? pairs - 1 - q : q;
      d += toggle_link_arc(rel.links[idx], t[2 * qq], t[2 * qq + 1]);
    }
  }
  return d;
}

std::optional<double> Worldline::apply_relation(std::size_t r, const std::vector<double>& times) {
  const Relation& rel = relations_.at(r);
  if (times.size() != rel.targets.size()) throw std::logic_error("relation needs one time per target");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (collides((*targets_)[rel.targets[k]], times[k])) return std::nullopt;
  for (const auto& m : rel.members)
    for (std::size_t a = 0; a < m.size(); ++a)
      for (std::size_t b = a + 1; b < m.size(); ++b)
        if (times[m[a]] == times[m[b]]) return std::nullopt;
  const double d = toggle_relation_links(rel, times, false);
  for (std::size_t k = 0; k < times.size(); ++k)
    register_kink(Species::interaction, rel.targets[k], times[k]);
  return d;
}

double Worldline::remove_relation(std::size_t r, const std::vector<double>& times) {
  const Relation& rel = relations_.at(r);
  if (times.size() != rel.targets.size()) throw std::logic_error("relation needs one time per target");
  for (std::size_t k = times.size(); k-- > 0;)
    unregister_kink(Species::interaction, rel.targets[k], times[k]);
  return toggle_relation_links(rel, times, true);
}

double Worldline::remove_conversion(int target, double t0, const std::vector<double>& field_times) {
  const auto& links = (*targets_)[target];
  if (field_times.size() != links.size()) throw std::logic_error("conversion needs one time per link");
  for (std::size_t i = links.size(); i-- > 0;) unregister_kink(Species::field, links[i], field_times[i]);
  unregister_kink(Species::interaction, target, t0);
  double d = 0.0;
  for (std::size_t i = links.size(); i-- > 0;) d += toggle_link_arc(links[i], t0, field_times[i]);
  return d;
}

std::optional<double> Worldline::apply_kink_pair(Species s, int target, double t1, double t2) {
  auto d = pair_delta(s, target, t1, t2);
  if (!d) return std::nullopt;
  insert_kink(s, target, t1);
  insert_kink(s, target, t2);
  if (t2 < t1) flip_base(target_links(s, target));
  action_.add(*d);
  return d;
}

double Worldline::remove_pair_delta(Species s, int target, double t1, double t2) const {
  return arc_delta(target_links(s, target), odd_cells(s, target), t1, t2);
}

double Worldline::remove_kink_pair(Species s, int target, double t1, double t2) {
  double d = remove_pair_delta(s, target, t1, t2);
  erase_kink(s, target, t1);
  erase_kink(s, target, t2);
  if (t2 < t1) flip_base(target_links(s, target));
  action_.add(d);
  return d;
}

int Worldline::n_flip_sets(FlipScope scope) const {
  if (scope == FlipScope::single_link) return lattice_->n_links();
  return static_cast<int>(targets_->size() + sector_sets_.size());
}

const std::vector<int>& Worldline::flip_set(FlipScope scope, int id) const {
  if (scope == FlipScope::single_link) return single_links_[id];
  const int nt = static_cast<int>(targets_->size());
  return id < nt ? (*targets_)[id] : sector_sets_[id - nt];
}

double Worldline::flip_delta(FlipScope scope, int id) const {
  static const std::vector<int> none;
  const int nt = static_cast<int>(targets_->size());
  if (scope == FlipScope::single_link) return segment_delta(single_links_[id], link_cells_[id], 0.0, beta_);
  if (id < nt) return segment_delta((*targets_)[id], target_odd_cells_[id], 0.0, beta_);
  return segment_delta(sector_sets_[id - nt], none, 0.0, beta_);
}

double Worldline::flip_whole_line(FlipScope scope, int id) {
  double d = flip_delta(scope, id);
  flip_base(flip_set(scope, id));
  action_.add(d);
  return d;
}

Worldline::Window Worldline::shift_window(std::size_t slot) const {
  const Kink& k = kinks_[slot];
  double below = beta_, above = beta_;
  for (int l : target_links(k.species, k.target)) {
    const auto& f = link_lines_[l].times;
    auto pos = static_cast<std::size_t>(std::lower_bound(f.begin(), f.end(), k.time) - f.begin());
    double prev = pos == 0 ? f.back() - beta_ : f[pos - 1];
    double next = pos + 1 == f.size() ? f.front() + beta_ : f[pos + 1];
    below = std::min(below, k.time - prev);
    above = std::min(above, next - k.time);
  }
  return {k.time - below, below + above};
}

namespace {
struct Arc {
  double start, end, wrapped_time;
};
Arc shift_arc(double t, double new_time, double beta) {
  double w = new_time;
  if (w < 0.0) w += beta;
  if (w >= beta) w -= beta;
  return new_time > t ? Arc{t, w, w} : Arc{w, t, w};
}
}  // namespace

std::optional<double> Worldline::shift_delta(std::size_t slot, double new_time) const {
  const Kink& k = kinks_[slot];
  Arc arc = shift_arc(k.time, new_time, beta_);
  if (new_time == k.time || collides(target_links(k.species, k.target), arc.wrapped_time))
    return std::nullopt;
  return arc_delta(target_links(k.species, k.target), odd_cells(k.species, k.target), arc.start,
                   arc.end);
}

double Worldline::shift_kink(std::size_t slot, double new_time) {
  auto d = shift_delta(slot, new_time);
  if (!d) throw std::logic_error("invalid kink shift");
  const Kink k = kinks_[slot];
  Arc arc = shift_arc(k.time, new_time, beta_);
  const auto& links = target_links(k.species, k.target);
  auto& list = by_target_[static_cast<int>(k.species)][k.target];
  auto it = std::lower_bound(list.begin(), list.end(), k.time,
                             [](const Timed& e, double v) { return e.time < v; });
  list.erase(it);
  Timed rec{arc.wrapped_time, static_cast<std::uint32_t>(slot)};
  list.insert(std::upper_bound(list.begin(), list.end(), rec.time,
                               [](double v, const Timed& e) { return v < e.time; }),
              rec);
  kinks_[slot].time = arc.wrapped_time;
  for (int l : links) {
    toggle_flip(l, k.time);
    toggle_flip(l, arc.wrapped_time);
  }
  if (arc.end < arc.start) flip_base(links);
  action_.add(*d);
  return *d;
}

double Worldline::spin_integral(int link) const { return segment_spin(link, 0.0, beta_); }

double Worldline::cell_integral(int cell) const { return segment_cell(cell, 0.0, beta_); }

double Worldline::magnetization_integral() const {
  double m = 0.0;
  for (int l = 0; l < lattice_->n_links(); ++l) m += spin_integral(l);
  return m;
}

double Worldline::cell_sum_integral() const {
  double m = 0.0;
  for (int c = 0; c < static_cast<int>(diag_cells().size()); ++c) m += cell_integral(c);
  return m;
}

double Worldline::recompute_action() const {
  double m = 0.0, c = 0.0;
  for (int l = 0; l < lattice_->n_links(); ++l) m += walk_spin(l, 0.0, beta_);
  for (int k = 0; k < static_cast<int>(diag_cells().size()); ++k) c += walk_cell(k, 0.0, beta_);
  return -diag_field_coupling() * m - diag_cell_coupling() * c;
}

double Worldline::action_deviation() const {
  double u = action();
  return std::abs(u - recompute_action()) / std::max(1.0, std::abs(u));
}

void Worldline::check_invariants(double tolerance) const {
  auto fail = [](const std::string& msg) { throw std::logic_error("worldline invariant: " + msg); };
  const std::size_t nl = link_lines_.size();
  std::vector<std::vector<double>> expected(nl);
  for (const Kink& k : kinks_)
    for (int l : target_links(k.species, k.target)) expected[l].push_back(k.time);
  std::size_t counted[2] = {0, 0};
  for (int s = 0; s < 2; ++s)
    for (const auto& list : by_target_[s]) {
      counted[s] += list.size();
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i > 0 && !(list[i - 1].time < list[i].time)) fail("target list not strictly sorted");
        const Kink& k = kinks_.at(list[i].slot);
        if (k.time != list[i].time || static_cast<int>(k.species) != s) fail("slot mismatch");
      }
    }
  if (counted[0] != count_[0] || counted[1] != count_[1] || counted[0] + counted[1] != kinks_.size())
    fail("kink counts disagree");
  for (std::size_t l = 0; l < nl; ++l) {
    const auto& f = link_lines_[l].times;
    if (f.size() % 2 != 0) fail("odd flip count on link " + std::to_string(l));
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!(f[i] > 0.0 && f[i] < beta_)) fail("flip time outside (0, beta)");
      if (i > 0 && !(f[i - 1] < f[i])) fail("flip times not strictly increasing");
    }
    auto e = expected[l];
    std::sort(e.begin(), e.end());
    if (e != f) fail("flip list of link " + std::to_string(l) + " disagrees with kinks");
  }
  auto prefix_ok = [](const Line& line) {
    Line fresh = line;
    fresh.rebuild_from(0);
    return fresh.prefix == line.prefix;
  };
  for (const Line& line : link_lines_)
    if (!prefix_ok(line)) fail("stale link prefix integrals");
  for (std::size_t c = 0; c < cell_lines_.size(); ++c) {
    std::vector<double> xor_times;
    int base = 1;
    for (int l : diag_cells()[c]) {
      base *= link_lines_[l].base;
      for (double t : link_lines_[l].times) xor_times.push_back(t);
    }
    std::sort(xor_times.begin(), xor_times.end());
    std::vector<double> odd;
    for (std::size_t i = 0; i < xor_times.size();) {
      std::size_t j = i;
      while (j < xor_times.size() && xor_times[j] == xor_times[i]) ++j;
      if ((j - i) % 2 == 1) odd.push_back(xor_times[i]);
      i = j;
    }
    if (odd != cell_lines_[c].times || base != cell_lines_[c].base)
      fail("cell line " + std::to_string(c) + " disagrees with its links");
    if (!prefix_ok(cell_lines_[c])) fail("stale cell prefix integrals");
  }
  double dev = action_deviation();
  if (!(dev <= tolerance)) {
    std::ostringstream os;
    os << "cached action deviates from recomputation by " << dev;
    fail(os.str());
  }
}

}  // namespace toric
