#include <capl/errors.hpp>
#include <capl/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <tuple>

namespace capl
{

SpatialGrid::SpatialGrid(std::span<Aabb2 const> boxes, double cell_size)
{
  if (boxes.empty())
    return;
  if (!(cell_size > 0.0))
    throw ValidationError("spatial grid cell size must be positive");

  Vec2 lo = boxes.front().lo;
  Vec2 hi = boxes.front().hi;
  for (auto const &b : boxes)
  {
    lo = {std::min(lo.x, b.lo.x), std::min(lo.y, b.lo.y)};
    hi = {std::max(hi.x, b.hi.x), std::max(hi.y, b.hi.y)};
  }
  // Keep the cell count proportional to the item count.
  double const max_cells = std::max<double>(1024.0, 4.0 * static_cast<double>(boxes.size()));
  _cell = cell_size;
  while (((hi.x - lo.x) / _cell + 1.0) * ((hi.y - lo.y) / _cell + 1.0) > max_cells)
    _cell *= 1.5;

  _origin = lo;
  _cells_x = static_cast<std::int64_t>((hi.x - lo.x) / _cell) + 1;
  _cells_y = static_cast<std::int64_t>((hi.y - lo.y) / _cell) + 1;

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(_cells_x * _cells_y) + 1, 0);
  auto for_cells = [&](Aabb2 const &b, auto &&fn) {
    auto [ix0, iy0] = cell_of(b.lo);
    auto [ix1, iy1] = cell_of(b.hi);
    for (std::int64_t iy = iy0; iy <= iy1; ++iy)
      for (std::int64_t ix = ix0; ix <= ix1; ++ix)
        fn(static_cast<std::size_t>(iy * _cells_x + ix));
  };
  for (auto const &b : boxes)
    for_cells(b, [&](std::size_t c) { ++counts[c + 1]; });
  for (std::size_t c = 1; c < counts.size(); ++c)
    counts[c] += counts[c - 1];
  _offsets = counts;
  _items.resize(_offsets.back());
  for (std::size_t k = 0; k < boxes.size(); ++k)
    for_cells(boxes[k], [&](std::size_t c) { _items[counts[c]++] = static_cast<std::uint32_t>(k); });
}

std::pair<std::int64_t, std::int64_t> SpatialGrid::cell_of(Vec2 p) const
{
  auto clamp_cell = [](double v, std::int64_t n) {
    if (!(v > 0.0))
      return std::int64_t{0};
    return std::min<std::int64_t>(static_cast<std::int64_t>(v), n - 1);
  };
  return {clamp_cell((p.x - _origin.x) / _cell, _cells_x), clamp_cell((p.y - _origin.y) / _cell, _cells_y)};
}

char const *to_string(EdgeKind kind)
{
  switch (kind)
  {
  case EdgeKind::in_path:
    return "in-path";
  case EdgeKind::side:
    return "side";
  case EdgeKind::inter_layer:
    return "inter-layer";
  case EdgeKind::platform:
    return "platform";
  }
  return "?";
}

ContactGraph::ContactGraph(std::vector<Element> elements, std::vector<ContactEdge> edges)
    : _elements(std::move(elements)), _edges(std::move(edges))
{
  _offsets.assign(_elements.size() + 1, 0);
  for (auto const &e : _edges)
  {
    ++_offsets[e.i + 1];
    if (e.j != kPlatformNode)
      ++_offsets[e.j + 1];
  }
  for (std::size_t k = 1; k < _offsets.size(); ++k)
    _offsets[k] += _offsets[k - 1];
  _incident.resize(_offsets.back());
  std::vector<std::uint32_t> fill(_offsets.begin(), _offsets.end() - 1);
  for (std::size_t k = 0; k < _edges.size(); ++k)
  {
    _incident[fill[_edges[k].i]++] = static_cast<int>(k);
    if (_edges[k].j != kPlatformNode)
      _incident[fill[_edges[k].j]++] = static_cast<int>(k);
  }
  for (auto const &e : _elements)
    _layers = std::max(_layers, e.depth + 1);
}

std::vector<Element> build_elements(std::span<SubPath const> sub_paths, double layer_height,
                                    double initial_width, int substrate_layers, int layer_index)
{
  if (!(layer_height > 0.0))
    throw ValidationError("layer height must be positive");
  if (!(initial_width > 0.0))
    throw ValidationError("initial element width must be positive");
  if (substrate_layers < 0)
    throw ValidationError("substrate layer count must be non-negative");

  std::size_t const n = sub_paths.size();
  std::vector<Element> out;
  out.reserve(n * static_cast<std::size_t>(substrate_layers + 1));
  for (int depth = 0; depth <= substrate_layers; ++depth)
  {
    for (std::size_t k = 0; k < n; ++k)
    {
      auto const &sp = sub_paths[k];
      Element e;
      e.id = static_cast<int>(out.size());
      e.sub_path = static_cast<int>(k);
      e.vector_id = sp.vector_id;
      e.source = static_cast<int>(k);
      Vec2 const mid = (sp.start + sp.end) * 0.5;
      e.centroid = {mid.x, mid.y, -(depth + 0.5) * layer_height};
      e.length = sp.length();
      e.width = initial_width;
      e.height = layer_height;
      e.direction = (sp.end - sp.start) * (1.0 / e.length);
      e.layer_index = layer_index - depth;
      e.depth = depth;
      e.fictitious = sp.fictitious || depth > 0;
      out.push_back(e);
    }
  }
  return out;
}

double overlap_area(Element const &a, Element const &b) { return intersection_area(a.top_face(), b.top_face()); }

namespace
{

void check_ids(std::span<Element const> elements)
{
  for (std::size_t k = 0; k < elements.size(); ++k)
    if (elements[k].id != static_cast<int>(k) || elements[k].source < 0 ||
        elements[k].source >= static_cast<int>(elements.size()))
      throw ValidationError("element ids must equal their list positions");
}

Aabb2 padded_bounds(Element const &e, double width, double pad)
{
  OrientedRect r = e.top_face();
  r.half_width = 0.5 * width;
  Aabb2 b = r.bounds();
  b.lo = b.lo - Vec2{pad, pad};
  b.hi = b.hi + Vec2{pad, pad};
  return b;
}

/// Unordered pairs (i < j) among `ids` whose boxes intersect.
std::vector<std::pair<int, int>> candidate_pairs(std::span<int const> ids, std::span<Aabb2 const> boxes,
                                                 NeighborSearch search)
{
  std::vector<std::pair<int, int>> pairs;
  if (search == NeighborSearch::brute_force)
  {
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        if (boxes[a].intersects(boxes[b]))
          pairs.emplace_back(std::min(ids[a], ids[b]), std::max(ids[a], ids[b]));
  }
  else
  {
    double cell = 0.0;
    for (auto const &b : boxes)
      cell = std::max({cell, b.hi.x - b.lo.x, b.hi.y - b.lo.y});
    SpatialGrid const grid(boxes, cell > 0.0 ? cell : 1.0);
    std::vector<std::uint32_t> seen(ids.size(), std::numeric_limits<std::uint32_t>::max());
    for (std::size_t a = 0; a < ids.size(); ++a)
    {
      grid.visit(boxes[a], [&](int b) {
        if (static_cast<std::size_t>(b) <= a || seen[b] == a)
          return;
        seen[b] = static_cast<std::uint32_t>(a);
        if (boxes[a].intersects(boxes[b]))
          pairs.emplace_back(std::min(ids[a], ids[b]), std::max(ids[a], ids[b]));
      });
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::vector<int> scanned_layer(std::span<Element const> elements)
{
  std::vector<int> ids;
  for (auto const &e : elements)
    if (e.source == e.id)
      ids.push_back(e.id);
  return ids;
}

} // namespace

void init_widths_voronoi(std::span<Element> elements, VoronoiParams const &params)
{
  if (!(params.growth_step > 0.0))
    throw ValidationError("growth step must be positive");
  if (!(params.overlap_threshold > 0.0))
    throw ValidationError("overlap threshold must be positive");
  if (!(params.max_width >= params.initial_width) || !(params.initial_width > 0.0))
    throw ValidationError("width cap must be at least the initial width");
  check_ids(elements);

  std::vector<int> const ids = scanned_layer(elements);
  std::vector<Aabb2> boxes;
  boxes.reserve(ids.size());
  for (int id : ids)
    boxes.push_back(padded_bounds(elements[id], params.max_width, 0.0));
  std::vector<std::pair<int, int>> pairs = candidate_pairs(ids, boxes, params.search);

  std::size_t const n = elements.size();
  std::vector<double> width(n);
  std::vector<double> proposed(n);
  std::vector<double> overlap(n);
  std::vector<char> growing(n, 0);
  for (int id : ids)
  {
    width[id] = elements[id].width;
    growing[id] = width[id] < params.max_width;
  }

  std::vector<OrientedRect> rects(n);
  bool any = true;
  while (any)
  {
    for (int id : ids)
    {
      proposed[id] = growing[id] ? std::min(width[id] + params.growth_step, params.max_width) : width[id];
      rects[id] = elements[id].top_face();
      rects[id].half_width = 0.5 * proposed[id];
      overlap[id] = 0.0;
    }
    for (auto const &[a, b] : pairs)
    {
      if (!growing[a] && !growing[b])
        continue;
      double const area = intersection_area(rects[a], rects[b]);
      overlap[a] += area;
      overlap[b] += area;
    }
    any = false;
    for (int id : ids)
    {
      if (!growing[id])
        continue;
      if (overlap[id] > params.overlap_threshold)
      {
        growing[id] = 0;
        continue;
      }
      width[id] = proposed[id];
      growing[id] = width[id] < params.max_width;
      any = any || growing[id];
    }
    // Drop pairs that can no longer change anyone's overlap.
    std::erase_if(pairs, [&](auto const &p) { return !growing[p.first] && !growing[p.second]; });
  }

  for (int id : ids)
    elements[id].width = width[id];
  for (auto &e : elements)
    e.width = elements[e.source].width;
}

double crossing_angle(Element const &a, Element const &b)
{
  double const c = std::min(1.0, std::abs(dot(a.direction, b.direction)));
  return std::acos(c);
}

namespace
{

// Length over which two near-parallel top faces face each other.
double shared_edge_length(Element const &a, Element const &b)
{
  Vec2 const db = dot(a.direction, b.direction) >= 0.0 ? b.direction : b.direction * -1.0;
  Vec2 d = a.direction + db;
  d = d * (1.0 / norm(d));
  auto extent = [&](Element const &e) {
    double const c = dot(e.centroid.xy(), d);
    double const r = 0.5 * e.length * std::abs(dot(e.direction, d));
    return std::pair{c - r, c + r};
  };
  auto const [alo, ahi] = extent(a);
  auto const [blo, bhi] = extent(b);
  return std::min(ahi, bhi) - std::max(alo, blo);
}

double side_area(Element const &a, Element const &b, double parallel_angle)
{
  double const theta = crossing_angle(a, b);
  if (theta >= parallel_angle)
    return std::min(a.cross_section(), b.cross_section()) / std::sin(theta);
  return std::max(0.0, shared_edge_length(a, b)) * std::min(a.height, b.height);
}

} // namespace

double contact_area(Element const &a, Element const &b, EdgeKind kind, double parallel_angle)
{
  double area = 0.0;
  switch (kind)
  {
  case EdgeKind::in_path:
    area = (b.sub_path > a.sub_path ? b : a).cross_section();
    break;
  case EdgeKind::side:
    area = side_area(a, b, parallel_angle);
    break;
  case EdgeKind::inter_layer:
    area = overlap_area(a, b);
    break;
  case EdgeKind::platform:
    area = a.footprint_area();
    break;
  }
  if (!(area > 0.0))
    throw ValidationError(std::string("elements share no ") + to_string(kind) + " contact geometry");
  return area;
}

ContactGraph build_contact_graph(std::vector<Element> elements, GraphParams const &params)
{
  check_ids(elements);
  std::vector<int> const top = scanned_layer(elements);
  int layers = 0;
  for (auto const &e : elements)
    layers = std::max(layers, e.depth + 1);
  std::size_t const per_layer = top.size();
  if (per_layer * static_cast<std::size_t>(layers) != elements.size())
    throw ValidationError("every substrate layer must copy the scanned layer");

  std::vector<ContactEdge> layer_edges;

  // In-path: consecutive sub-paths of one vector.
  for (std::size_t k = 0; k + 1 < top.size(); ++k)
  {
    Element const &a = elements[top[k]];
    Element const &b = elements[top[k + 1]];
    if (a.vector_id != b.vector_id || b.sub_path != a.sub_path + 1)
      continue;
    layer_edges.push_back({a.id, b.id, EdgeKind::in_path, contact_area(a, b, EdgeKind::in_path),
                           distance(a.centroid, b.centroid), crossing_angle(a, b)});
  }

  // Side: touching or overlapping top faces on other vectors.
  std::vector<Aabb2> boxes;
  boxes.reserve(top.size());
  for (int id : top)
    boxes.push_back(padded_bounds(elements[id], elements[id].width, 0.5 * params.contact_gap));
  for (auto const &[i, j] : candidate_pairs(top, boxes, params.search))
  {
    Element const &a = elements[i];
    Element const &b = elements[j];
    if (a.vector_id == b.vector_id)
      continue;
    if (separation(a.top_face(), b.top_face()) > params.contact_gap)
      continue;
    double const area = side_area(a, b, params.parallel_angle);
    if (!(area > 0.0))
      continue;
    layer_edges.push_back({i, j, EdgeKind::side, area, distance(a.centroid, b.centroid), crossing_angle(a, b)});
  }

  std::vector<ContactEdge> edges;
  edges.reserve(layer_edges.size() * layers + per_layer * layers);
  for (int depth = 0; depth < layers; ++depth)
  {
    int const offset = depth * static_cast<int>(per_layer);
    for (auto e : layer_edges)
    {
      e.i += offset;
      e.j += offset;
      edges.push_back(e);
    }
  }
  for (int depth = 0; depth + 1 < layers; ++depth)
  {
    for (std::size_t k = 0; k < per_layer; ++k)
    {
      Element const &a = elements[depth * per_layer + k];
      Element const &b = elements[(depth + 1) * per_layer + k];
      edges.push_back({a.id, b.id, EdgeKind::inter_layer, contact_area(a, b, EdgeKind::inter_layer),
                       distance(a.centroid, b.centroid), 0.0});
    }
  }
  if (params.platform && layers > 0)
  {
    for (std::size_t k = 0; k < per_layer; ++k)
    {
      Element const &a = elements[(layers - 1) * per_layer + k];
      edges.push_back({a.id, kPlatformNode, EdgeKind::platform, a.footprint_area(), 0.5 * a.height, 0.0});
    }
  }
  std::sort(edges.begin(), edges.end(), [](ContactEdge const &x, ContactEdge const &y) {
    return std::tie(x.kind, x.i, x.j) < std::tie(y.kind, y.i, y.j);
  });
  return ContactGraph(std::move(elements), std::move(edges));
}

void write_elements_csv(std::ostream &out, std::span<Element const> elements)
{
  out << "id,x,y,z,L,W,H,dir_x,dir_y,layer,fictitious\n" << std::setprecision(9);
  for (auto const &e : elements)
    out << e.id << ',' << e.centroid.x << ',' << e.centroid.y << ',' << e.centroid.z << ',' << e.length << ','
        << e.width << ',' << e.height << ',' << e.direction.x << ',' << e.direction.y << ',' << e.layer_index << ','
        << (e.fictitious ? 1 : 0) << '\n';
}

void write_edges_csv(std::ostream &out, std::span<ContactEdge const> edges)
{
  out << "i,j,kind,area,dist,theta\n" << std::setprecision(9);
  for (auto const &e : edges)
    out << e.i << ',' << e.j << ',' << to_string(e.kind) << ',' << e.area << ',' << e.distance << ',' << e.angle
        << '\n';
}

} // namespace capl
