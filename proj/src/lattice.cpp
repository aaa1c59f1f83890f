#include "toric/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "toric/error.hpp"

namespace toric {

namespace {

struct LinkType {
  int tail_sub;
  int head_sub;
  IVec disp;
};

struct PlaquetteEntry {
  IVec offset;  // tail cell of the link relative to the plaquette anchor
  int link_type;
};

struct UnitCell {
  int dim;
  int n_sub;
  std::vector<LinkType> link_types;
  std::vector<std::vector<PlaquetteEntry>> plaquette_types;
};

UnitCell unit_cell(LatticeType t) {
  switch (t) {
    case LatticeType::square:
      return {2, 1,
              {{0, 0, {1, 0, 0}}, {0, 0, {0, 1, 0}}},
              {{{{0, 0, 0}, 0}, {{1, 0, 0}, 1}, {{0, 1, 0}, 0}, {{0, 0, 0}, 1}}}};
    case LatticeType::triangular:
      // a1 = (1,0), a2 = (0,1), a3 = (1,-1)
      return {2, 1,
              {{0, 0, {1, 0, 0}}, {0, 0, {0, 1, 0}}, {0, 0, {1, -1, 0}}},
              {{{{0, 0, 0}, 0}, {{0, 1, 0}, 2}, {{0, 0, 0}, 1}},
               {{{1, 0, 0}, 1}, {{0, 1, 0}, 0}, {{0, 1, 0}, 2}}}};
    case LatticeType::honeycomb:
      // every link runs from sublattice A (0) to sublattice B (1)
      return {2, 2,
              {{0, 1, {0, 0, 0}}, {0, 1, {-1, 0, 0}}, {0, 1, {0, -1, 0}}},
              {{{{0, 1, 0}, 0},
                {{1, 1, 0}, 1},
                {{1, 1, 0}, 2},
                {{1, 0, 0}, 0},
                {{1, 0, 0}, 1},
                {{0, 1, 0}, 2}}}};
    case LatticeType::cubic:
      return {3, 1,
              {{0, 0, {1, 0, 0}}, {0, 0, {0, 1, 0}}, {0, 0, {0, 0, 1}}},
              {{{{0, 0, 0}, 0}, {{1, 0, 0}, 1}, {{0, 1, 0}, 0}, {{0, 0, 0}, 1}},
               {{{0, 0, 0}, 1}, {{0, 1, 0}, 2}, {{0, 0, 1}, 1}, {{0, 0, 0}, 2}},
               {{{0, 0, 0}, 2}, {{0, 0, 1}, 0}, {{1, 0, 0}, 2}, {{0, 0, 0}, 0}}}};
  }
  throw ConfigError("unsupported lattice type");
}

IVec add(const IVec& a, const IVec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

class CellIndexer {
 public:
  CellIndexer(int L, int dim) : L_(L), dim_(dim) {}

  int n_cells() const { return dim_ == 3 ? L_ * L_ * L_ : L_ * L_; }

  IVec cell(int index) const {
    return {index % L_, (index / L_) % L_, dim_ == 3 ? index / (L_ * L_) : 0};
  }

  bool inside(const IVec& c) const {
    for (int d = 0; d < 3; ++d) {
      int hi = d < dim_ ? L_ : 1;
      if (c[d] < 0 || c[d] >= hi) return false;
    }
    return true;
  }

  IVec wrap(const IVec& c) const {
    IVec w = c;
    for (int d = 0; d < dim_; ++d) w[d] = ((c[d] % L_) + L_) % L_;
    return w;
  }

  int index(const IVec& c) const { return c[0] + L_ * (c[1] + L_ * c[2]); }

 private:
  int L_;
  int dim_;
};

}  // namespace

std::array<double, 3> Lattice::position(int vertex) const {
  const Vertex& v = vertices.at(vertex);
  const double s3 = std::sqrt(3.0);
  double x = v.cell[0], y = v.cell[1], z = v.cell[2];
  switch (lattice_type) {
    case LatticeType::square:
    case LatticeType::cubic:
      return {x, y, z};
    case LatticeType::triangular:
      return {x + 0.5 * y, 0.5 * s3 * y, 0.0};
    case LatticeType::honeycomb:
      return {x + 0.5 * y + 0.5 * v.sublattice, 0.5 * s3 * y + s3 / 6.0 * v.sublattice, 0.0};
  }
  return {x, y, z};
}

Lattice build_lattice(LatticeType lattice_type, int L, Boundaries boundaries) {
  if (L < 2) throw ConfigError("system_size must be >= 2, got " + std::to_string(L));
  if (boundaries != Boundaries::periodic && boundaries != Boundaries::open)
    throw ConfigError("unsupported boundaries");
  const UnitCell uc = unit_cell(lattice_type);
  const bool periodic = boundaries == Boundaries::periodic;
  CellIndexer cells(L, uc.dim);

  Lattice lat;
  lat.lattice_type = lattice_type;
  lat.boundaries = boundaries;
  lat.L = L;
  lat.dim = uc.dim;

  const int n_cells = cells.n_cells();
  for (int c = 0; c < n_cells; ++c)
    for (int s = 0; s < uc.n_sub; ++s)
      lat.vertices.push_back({c * uc.n_sub + s, cells.cell(c), s});

  const int n_types = static_cast<int>(uc.link_types.size());
  std::vector<int> link_id(static_cast<size_t>(n_cells * n_types), -1);
  for (int c = 0; c < n_cells; ++c) {
    IVec tail = cells.cell(c);
    for (int t = 0; t < n_types; ++t) {
      const LinkType& lt = uc.link_types[t];
      IVec head = add(tail, lt.disp);
      if (!periodic && !cells.inside(head)) continue;
      head = cells.wrap(head);
      int id = lat.n_links();
      link_id[c * n_types + t] = id;
      lat.links.push_back({id, c * uc.n_sub + lt.tail_sub,
                           cells.index(head) * uc.n_sub + lt.head_sub, lt.disp});
    }
  }

  lat.stars.assign(lat.vertices.size(), {});
  for (const Link& l : lat.links) {
    lat.stars[l.tail].push_back(l.id);
    lat.stars[l.head].push_back(l.id);
  }
  for (auto& s : lat.stars) std::sort(s.begin(), s.end());

  const int n_ptypes = static_cast<int>(uc.plaquette_types.size());
  for (int c = 0; c < n_cells; ++c) {
    IVec anchor = cells.cell(c);
    for (int pt = 0; pt < n_ptypes; ++pt) {
      std::vector<int> ids;
      std::vector<IVec> offsets;
      bool complete = true;
      for (const PlaquetteEntry& e : uc.plaquette_types[pt]) {
        IVec tail = add(anchor, e.offset);
        if (!periodic && !cells.inside(tail)) {
          complete = false;
          break;
        }
        int id = link_id[cells.index(cells.wrap(tail)) * n_types + e.link_type];
        if (id < 0) {
          complete = false;
          break;
        }
        ids.push_back(id);
        offsets.push_back(e.offset);
      }
      if (!complete) continue;
      lat.plaquettes.push_back(std::move(ids));
      lat.plaquette_link_offset.push_back(std::move(offsets));
      lat.plaquette_anchor.push_back(anchor);
      lat.plaquette_kind.push_back(pt);
    }
  }

  lat.link_plaquettes.assign(lat.links.size(), {});
  for (int p = 0; p < lat.n_plaquettes(); ++p)
    for (int l : lat.plaquettes[p]) lat.link_plaquettes[l].push_back(p);

  if (periodic) {
    for (int d = 0; d < uc.dim; ++d) {
      IVec w{0, 0, 0};
      w[d] = L;
      lat.winding_directions.push_back(w);
    }
  }
  return lat;
}

std::vector<std::vector<int>> winding_cycles(const Lattice& lat) {
  std::vector<std::vector<int>> out;
  if (!lat.periodic()) return out;
  std::vector<std::vector<int>> incident(lat.vertices.size());
  for (const Link& l : lat.links) {
    incident[l.tail].push_back(l.id);
    incident[l.head].push_back(l.id);
  }
  using State = std::pair<int, IVec>;
  for (const IVec& w : lat.winding_directions) {
    // breadth-first search in the covering lattice from vertex 0 to its image
    // shifted by w
    const State start{0, lat.vertices[0].cell};
    const State goal{0, add(lat.vertices[0].cell, w)};
    std::map<State, std::pair<State, int>> parent;
    std::vector<State> frontier{start};
    parent[start] = {start, -1};
    auto in_box = [&](const IVec& c) {
      for (int d = 0; d < lat.dim; ++d)
        if (c[d] < -lat.L || c[d] > 2 * lat.L) return false;
      return true;
    };
    while (!frontier.empty() && !parent.count(goal)) {
      std::vector<State> next;
      for (const State& st : frontier)
        for (int id : incident[st.first]) {
          const Link& l = lat.links[id];
          const bool forward = l.tail == st.first;
          const int v = forward ? l.head : l.tail;
          IVec c = st.second;
          for (int d = 0; d < 3; ++d) c[d] += forward ? l.displacement[d] : -l.displacement[d];
          // tail and head may be the same vertex only for L = 1
          if (!in_box(c)) continue;
          State ns{v, c};
          if (parent.count(ns)) continue;
          parent[ns] = {st, id};
          next.push_back(ns);
        }
      frontier = std::move(next);
    }
    if (!parent.count(goal)) continue;
    std::vector<int> path;
    for (State st = goal; st != start; st = parent[st].first) {
      const int id = parent[st].second;
      auto it = std::find(path.begin(), path.end(), id);
      if (it != path.end())
        path.erase(it);
      else
        path.push_back(id);
    }
    std::sort(path.begin(), path.end());
    out.push_back(std::move(path));
  }
  return out;
}

std::vector<std::vector<int>> layer_cuts(const Lattice& lat) {
  std::vector<std::vector<int>> out;
  for (int d = 0; d < lat.dim; ++d) {
    std::vector<int> cut;
    for (const Link& l : lat.links) {
      const int disp = l.displacement[d];
      if (disp == 0) continue;
      const int lower = lat.vertices[l.tail].cell[d] + std::min(0, disp);
      if (((lower % lat.L) + lat.L) % lat.L == 0) cut.push_back(l.id);
    }
    out.push_back(std::move(cut));
  }
  return out;
}

FmLoopPair build_fm_loops(const Lattice& lat, int loop_scale) {
  if (loop_scale < 1 || 2 * loop_scale > lat.L)
    throw ConfigError("Fredenhagen-Marcu loop of scale " + std::to_string(loop_scale) +
                      " does not fit a lattice of size " + std::to_string(lat.L));

  std::map<std::pair<int, int>, int> by_anchor;  // (cell key, kind) -> plaquette
  for (int p = 0; p < lat.n_plaquettes(); ++p) {
    const IVec& a = lat.plaquette_anchor[p];
    if (a[2] != 0) continue;
    by_anchor[{a[0] + lat.L * a[1], lat.plaquette_kind[p]}] = p;
  }
  std::vector<int> block;
  for (int j = 0; j < loop_scale; ++j)
    for (int i = 0; i < loop_scale; ++i)
      for (int kind = 0; kind < 2; ++kind) {
        // cubic uses only xy faces (kind 0) on the z = 0 plane
        if (kind == 1 && lat.lattice_type != LatticeType::triangular) continue;
        auto it = by_anchor.find({i + lat.L * j, kind});
        if (it == by_anchor.end())
          throw ConfigError("Fredenhagen-Marcu loop does not fit the lattice");
        block.push_back(it->second);
      }

  std::vector<int> count(lat.links.size(), 0);
  for (int p : block)
    for (int l : lat.plaquettes[p]) ++count[l];

  std::vector<std::vector<int>> incident(lat.vertices.size());
  int n_boundary = 0;
  for (const Link& l : lat.links) {
    if (count[l.id] % 2 == 0) continue;
    ++n_boundary;
    incident[l.tail].push_back(l.id);
    incident[l.head].push_back(l.id);
  }
  for (const auto& inc : incident)
    if (!inc.empty() && inc.size() != 2)
      throw ConfigError("Fredenhagen-Marcu loop self-intersects on this lattice");

  int start = -1;
  for (int l : lat.plaquettes[block.front()])
    if (count[l] % 2 == 1) {
      start = l;
      break;
    }
  if (start < 0) throw ConfigError("Fredenhagen-Marcu loop does not fit the lattice");

  FmLoopPair loops;
  int link = start;
  int vertex = lat.links[start].head;
  do {
    loops.full_loop.push_back(link);
    const auto& inc = incident[vertex];
    int next = inc[0] == link ? inc[1] : inc[0];
    const Link& nl = lat.links[next];
    vertex = nl.tail == vertex ? nl.head : nl.tail;
    link = next;
  } while (link != start && static_cast<int>(loops.full_loop.size()) <= n_boundary);

  if (static_cast<int>(loops.full_loop.size()) != n_boundary)
    throw ConfigError("Fredenhagen-Marcu loop boundary is not a single cycle");
  loops.perimeter = n_boundary;
  loops.half_loop.assign(loops.full_loop.begin(), loops.full_loop.begin() + (n_boundary + 1) / 2);
  return loops;
}

LatticeType parse_lattice_type(std::string_view name) {
  if (name == "square") return LatticeType::square;
  if (name == "triangular") return LatticeType::triangular;
  if (name == "honeycomb") return LatticeType::honeycomb;
  if (name == "cubic") return LatticeType::cubic;
  throw ConfigError("unsupported lattice_type '" + std::string(name) +
                    "' (valid: square, triangular, honeycomb, cubic)");
}

Boundaries parse_boundaries(std::string_view name) {
  if (name == "periodic") return Boundaries::periodic;
  if (name == "open") return Boundaries::open;
  throw ConfigError("unsupported boundaries '" + std::string(name) + "' (valid: periodic, open)");
}

std::string to_string(LatticeType t) {
  switch (t) {
    case LatticeType::square: return "square";
    case LatticeType::triangular: return "triangular";
    case LatticeType::honeycomb: return "honeycomb";
    case LatticeType::cubic: return "cubic";
  }
  return "unknown";
}

std::string to_string(Boundaries b) { return b == Boundaries::periodic ? "periodic" : "open"; }

}  // namespace toric
