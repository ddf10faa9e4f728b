#include "namo/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "config_yaml.hpp"
#include "namo/map_io.hpp"

namespace namo
{

namespace
{

int line_of(const YAML::Node &n) { return n.Mark().line + 1; }

struct Reader
{
  const std::string &source;

  [[noreturn]] void fail(const YAML::Node &n, const std::string &field, const std::string &what) const
  {
    throw ParseError(source, line_of(n), field, what);
  }

  YAML::Node require(const YAML::Node &parent, const char *key, const std::string &field) const
  {
    const YAML::Node n = parent[key];
    if (!n) {
      fail(parent, field, "missing required field");
    }
    return n;
  }

  double number(const YAML::Node &n, const std::string &field) const
  {
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) {
        fail(n, field, "value must be finite");
      }
      return v;
    } catch (const YAML::Exception &) {
      fail(n, field, "expected a number");
    }
  }

  std::string text(const YAML::Node &n, const std::string &field) const
  {
    if (!n.IsScalar()) {
      fail(n, field, "expected a string");
    }
    return n.as<std::string>();
  }

  Point2 pair(const YAML::Node &n, const std::string &field) const
  {
    if (n.IsSequence() && n.size() == 2) {
      return {number(n[0], field + "[0]"), number(n[1], field + "[1]")};
    }
    if (n.IsMap()) {
      return {number(require(n, "x", field), field + ".x"), number(require(n, "y", field), field + ".y")};
    }
    fail(n, field, "expected [x, y] or {x, y}");
  }

  void only_keys(const YAML::Node &n, const std::string &field, std::initializer_list<std::string_view> keys) const
  {
    if (!n.IsMap()) {
      fail(n, field, "expected a mapping");
    }
    for (const auto &kv : n) {
      const std::string k = kv.first.as<std::string>();
      bool ok = false;
      for (auto allowed : keys) {
        ok = ok || k == allowed;
      }
      if (!ok) {
        fail(kv.first, field.empty() ? k : field + "." + k, "unknown field");
      }
    }
  }
};

Movability parse_class(const Reader &rd, const YAML::Node &n, const std::string &field)
{
  const std::string s = rd.text(n, field);
  if (s == "light") {
    return Movability::Light;
  }
  if (s == "heavy") {
    return Movability::Heavy;
  }
  if (s == "immovable") {
    return Movability::Immovable;
  }
  rd.fail(n, field, "expected light, heavy or immovable");
}

}  // namespace

CostGrid grid_from_ascii(const std::vector<std::string> &rows, double resolution, Point2 origin)
{
  if (rows.empty() || rows.front().empty()) {
    throw ValidationError("map rows are empty");
  }
  const int width = static_cast<int>(rows.front().size());
  const int height = static_cast<int>(rows.size());
  CostGrid grid(GridMeta{width, height, resolution, origin});
  for (int y = 0; y < height; ++y) {
    if (static_cast<int>(rows[y].size()) != width) {
      throw ValidationError("map row " + std::to_string(y + 1) + " has length " + std::to_string(rows[y].size()) +
                            ", expected " + std::to_string(width));
    }
    const int row = height - 1 - y;
    for (int x = 0; x < width; ++x) {
      const char ch = rows[y][x];
      std::uint8_t v = cost::kFree;
      if (ch == '#') {
        v = cost::kLethal;
      } else if (ch == '?') {
        v = cost::kUnknown;
      } else if (ch != '.' && ch != ' ') {
        throw ValidationError(std::string("map row ") + std::to_string(y + 1) + ": unexpected character '" + ch + "'");
      }
      grid.at({x, row}) = v;
    }
  }
  return grid;
}

Scenario parse_scenario(std::string_view yaml, const std::filesystem::path &base_dir, const std::string &source)
{
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException &e) {
    throw ParseError(source, e.mark.line + 1, "", e.msg);
  }
  const Reader rd{source};
  rd.only_keys(
    root, "",
    {"name", "description", "map", "start", "goal", "bodies", "params", "baseline_mode", "start_jitter"});

  Scenario sc;
  sc.name = rd.text(rd.require(root, "name", "name"), "name");
  if (root["description"]) {
    sc.description = rd.text(root["description"], "description");
  }

  const YAML::Node map = rd.require(root, "map", "map");
  rd.only_keys(map, "map", {"resolution", "origin", "rows", "pgm"});
  const double res = rd.number(rd.require(map, "resolution", "map"), "map.resolution");
  if (!(res > 0.0)) {
    rd.fail(map["resolution"], "map.resolution", "must be positive");
  }
  const Point2 origin = map["origin"] ? rd.pair(map["origin"], "map.origin") : Point2{};
  if (map["rows"] && map["pgm"]) {
    rd.fail(map, "map", "give either rows or pgm, not both");
  }
  if (map["rows"]) {
    std::vector<std::string> rows;
    const YAML::Node r = map["rows"];
    if (r.IsSequence()) {
      for (const auto &line : r) {
        rows.push_back(rd.text(line, "map.rows"));
      }
    } else {
      std::istringstream ss(rd.text(r, "map.rows"));
      for (std::string line; std::getline(ss, line);) {
        if (!line.empty()) {
          rows.push_back(line);
        }
      }
    }
    try {
      sc.static_map = grid_from_ascii(rows, res, origin);
    } catch (const ValidationError &e) {
      rd.fail(r, "map.rows", e.what());
    }
  } else if (map["pgm"]) {
    std::filesystem::path p = rd.text(map["pgm"], "map.pgm");
    if (p.is_relative()) {
      p = base_dir / p;
    }
    try {
      sc.static_map = read_pgm(p, res, origin);
    } catch (const MapIoError &e) {
      rd.fail(map["pgm"], "map.pgm", e.what());
    }
  } else {
    rd.fail(map, "map", "needs rows or pgm");
  }

  const YAML::Node start = rd.require(root, "start", "start");
  rd.only_keys(start, "start", {"x", "y", "theta"});
  sc.robot_start.x = rd.number(rd.require(start, "x", "start"), "start.x");
  sc.robot_start.y = rd.number(rd.require(start, "y", "start"), "start.y");
  sc.robot_start.theta = start["theta"] ? rd.number(start["theta"], "start.theta") : 0.0;
  sc.goal = rd.pair(rd.require(root, "goal", "goal"), "goal");

  if (const YAML::Node j = root["start_jitter"]) {
    rd.only_keys(j, "start_jitter", {"xy", "theta"});
    sc.start_jitter_xy = j["xy"] ? rd.number(j["xy"], "start_jitter.xy") : 0.0;
    sc.start_jitter_theta = j["theta"] ? rd.number(j["theta"], "start_jitter.theta") : 0.0;
    if (sc.start_jitter_xy < 0.0 || sc.start_jitter_theta < 0.0) {
      rd.fail(j, "start_jitter", "sigmas must be non-negative");
    }
  }
  if (const YAML::Node b = root["baseline_mode"]) {
    try {
      sc.baseline_mode = b.as<bool>();
    } catch (const YAML::Exception &) {
      rd.fail(b, "baseline_mode", "expected true or false");
    }
  }

  if (const YAML::Node bodies = root["bodies"]) {
    if (!bodies.IsSequence()) {
      rd.fail(bodies, "bodies", "expected a list");
    }
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      const YAML::Node b = bodies[i];
      const std::string f = "bodies[" + std::to_string(i) + "]";
      rd.only_keys(b, f, {"id", "center", "half_extents", "class"});
      MovableBody body;
      try {
        body.id = rd.require(b, "id", f).as<int>();
      } catch (const YAML::Exception &) {
        rd.fail(b["id"], f + ".id", "expected an integer");
      }
      body.shape.center = rd.pair(rd.require(b, "center", f), f + ".center");
      body.shape.half = rd.pair(rd.require(b, "half_extents", f), f + ".half_extents");
      body.movability = parse_class(rd, rd.require(b, "class", f), f + ".class");
      sc.bodies.push_back(body);
    }
  }

  if (const YAML::Node p = root["params"]) {
    detail::apply_config_node(sc.params, p, source);
  }

  validate(sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in) {
    throw ParseError(path.string(), 0, "", "cannot open scenario file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path(), path.string());
}

void validate(const Scenario &sc)
{
  const CostGrid &map = sc.static_map;
  const GridMeta &m = map.meta();
  if (!m.valid()) {
    throw ValidationError(sc.name + ": invalid map");
  }
  const double r = sc.params.robot.footprint_radius;
  if (!(r > 0.0)) {
    throw ValidationError(sc.name + ": footprint radius must be positive");
  }
  const auto free_cell = [&](Point2 p) {
    const auto c = world_to_cell(p, m);
    return c && map.at(*c) == cost::kFree;
  };
  if (!free_cell(sc.robot_start.position())) {
    throw ValidationError(sc.name + ": start is outside the map or not on a free cell");
  }
  if (!free_cell(sc.goal)) {
    throw ValidationError(sc.name + ": goal is outside the map or not on a free cell");
  }
  if (circle_hits_walls(map, sc.robot_start.position(), r)) {
    throw ValidationError(sc.name + ": robot footprint at start overlaps a wall");
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < sc.bodies.size(); ++i) {
    const MovableBody &b = sc.bodies[i];
    const std::string tag = sc.name + ": body " + std::to_string(b.id);
    if (!ids.insert(b.id).second) {
      throw ValidationError(tag + ": duplicate id");
    }
    if (!(b.shape.half.x > 0.0 && b.shape.half.y > 0.0)) {
      throw ValidationError(tag + ": half extents must be positive");
    }
    if (rect_hits_walls(map, b.shape)) {
      throw ValidationError(tag + ": overlaps a wall or leaves the map");
    }
    if (circle_hits_rect(sc.robot_start.position(), r, b.shape)) {
      throw ValidationError(tag + ": overlaps the robot start");
    }
    if (b.shape.contains(sc.goal)) {
      throw ValidationError(tag + ": covers the goal");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (rects_overlap(b.shape, sc.bodies[j].shape)) {
        throw ValidationError(tag + ": overlaps body " + std::to_string(sc.bodies[j].id));
      }
    }
  }
}

}  // namespace namo
