#pragma once

#include <capl/geometry.hpp>
#include <capl/toolpath.hpp>

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace capl
{

/// Toolpath-aligned box of material swept by one sub-path.
struct Element
{
  int id = 0;
  int sub_path = 0;  // index into the discretized sub-path list
  int vector_id = 0;
  int source = 0;    // id of the top-layer element this one was copied from
  Vec3 centroid;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  Vec2 direction{1.0, 0.0};
  int layer_index = 0;
  int depth = 0;     // 0 for the scanned layer, k for the k-th substrate copy below
  bool fictitious = false;

  OrientedRect top_face() const { return {centroid.xy(), direction, 0.5 * length, 0.5 * width}; }
  double footprint_area() const { return length * width; }
  double volume() const { return length * width * height; }
  double cross_section() const { return width * height; }
};

/// Uniform grid hash over 2D points or boxes, cell size fixed at construction.
class SpatialGrid
{
public:
  SpatialGrid() = default;
  SpatialGrid(std::span<Aabb2 const> boxes, double cell_size);

  /// Calls `fn(id)` for every box whose cells overlap `query`. Ids may repeat
  /// when a box spans several cells.
  template <typename Fn>
  void visit(Aabb2 const &query, Fn &&fn) const
  {
    if (_cells_x == 0)
      return;
    auto [ix0, iy0] = cell_of(query.lo);
    auto [ix1, iy1] = cell_of(query.hi);
    for (std::int64_t iy = iy0; iy <= iy1; ++iy)
      for (std::int64_t ix = ix0; ix <= ix1; ++ix)
      {
        std::size_t const c = static_cast<std::size_t>(iy * _cells_x + ix);
        for (std::uint32_t k = _offsets[c]; k < _offsets[c + 1]; ++k)
          fn(static_cast<int>(_items[k]));
      }
  }

  double cell_size() const { return _cell; }

private:
  std::pair<std::int64_t, std::int64_t> cell_of(Vec2 p) const;

  double _cell = 1.0;
  Vec2 _origin;
  std::int64_t _cells_x = 0;
  std::int64_t _cells_y = 0;
  std::vector<std::uint32_t> _offsets;
  std::vector<std::uint32_t> _items;
};

enum class NeighborSearch
{
  grid,       // uniform grid hashing, linear expected cost
  brute_force // all pairs, the reference oracle
};

struct VoronoiParams
{
  double initial_width = 10e-6;       // W0
  double overlap_threshold = 3e-11;   // s, m^2, summed over all neighbours
  double growth_step = 1e-6;          // m per round
  double max_width = 200e-6;          // cap for cells without a neighbour
  NeighborSearch search = NeighborSearch::grid;
};

struct GraphParams
{
  bool platform = true;
  double parallel_angle = std::numbers::pi / 18.0; // below this, contacts are face to face
  double contact_gap = 1e-6;                   // top faces closer than this are in contact
  NeighborSearch search = NeighborSearch::grid;
};

enum class EdgeKind : std::uint8_t
{
  in_path,
  side,
  inter_layer,
  platform
};

char const *to_string(EdgeKind kind);

/// Node id used for the fixed-temperature build platform.
inline constexpr int kPlatformNode = -1;

struct ContactEdge
{
  int i = 0;
  int j = 0; // kPlatformNode for platform edges
  EdgeKind kind = EdgeKind::in_path;
  double area = 0.0;     // m^2
  double distance = 0.0; // m
  double angle = 0.0;    // rad in [0, pi/2]
};

class ContactGraph
{
public:
  ContactGraph() = default;
  ContactGraph(std::vector<Element> elements, std::vector<ContactEdge> edges);

  std::vector<Element> const &elements() const { return _elements; }
  std::vector<ContactEdge> const &edges() const { return _edges; }
  std::size_t size() const { return _elements.size(); }

  /// Indices into edges() incident to element `id`.
  std::span<int const> incident(int id) const
  {
    return {_incident.data() + _offsets[id], _incident.data() + _offsets[id + 1]};
  }

  /// The other endpoint of `edge` seen from `id` (kPlatformNode for the platform).
  static int other(ContactEdge const &edge, int id) { return edge.i == id ? edge.j : edge.i; }

  int layer_count() const { return _layers; }

private:
  std::vector<Element> _elements;
  std::vector<ContactEdge> _edges;
  std::vector<std::uint32_t> _offsets;
  std::vector<int> _incident;
  int _layers = 0;
};

/// One element per sub-path on the scanned layer followed by
/// `substrate_layers` fictitious copies stacked below it. Element id equals
/// depth * sub_paths.size() + sub-path index.
std::vector<Element> build_elements(std::span<SubPath const> sub_paths, double layer_height,
                                    double initial_width, int substrate_layers, int layer_index = 0);

/// Overlap area of the two top faces.
double overlap_area(Element const &a, Element const &b);

/// Simultaneous width growth on the scanned layer. An element stops at the
/// last width whose summed overlap with other elements does not exceed the
/// threshold, or at the cap. Substrate copies inherit their source's width.
void init_widths_voronoi(std::span<Element> elements, VoronoiParams const &params);

/// Contact area for an element pair of the given kind. Throws
/// ValidationError when the pair shares no geometry.
double contact_area(Element const &a, Element const &b, EdgeKind kind,
                    double parallel_angle = std::numbers::pi / 18.0);

/// Acute angle between the scan directions, in [0, pi/2].
double crossing_angle(Element const &a, Element const &b);

ContactGraph build_contact_graph(std::vector<Element> elements, GraphParams const &params);

void write_elements_csv(std::ostream &out, std::span<Element const> elements);
void write_edges_csv(std::ostream &out, std::span<ContactEdge const> edges);

} // namespace capl
