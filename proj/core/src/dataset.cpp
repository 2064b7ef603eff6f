#include "lumi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lumi/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lumi {

namespace {

json camera_to_json(const Camera& cam) {
  std::array<float, 16> w2c{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) w2c[r * 4 + c] = cam.rotation(r, c);
    w2c[r * 4 + 3] = cam.translation[r];
  }
  w2c[15] = 1.0f;
  return json{{"width", cam.width},   {"height", cam.height}, {"fx", cam.fx},
              {"fy", cam.fy},         {"cx", cam.cx},         {"cy", cam.cy},
              {"near", cam.near_clip}, {"far", cam.far_clip},  {"world_to_camera", w2c}};
}

Camera camera_from_json(const json& j) {
  Camera cam;
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.fx = j.at("fx").get<float>();
  cam.fy = j.at("fy").get<float>();
  cam.cx = j.at("cx").get<float>();
  cam.cy = j.at("cy").get<float>();
  cam.near_clip = j.value("near", 0.01f);
  cam.far_clip = j.value("far", 100.0f);
  const auto w2c = j.at("world_to_camera").get<std::vector<float>>();
  if (w2c.size() != 16) throw DataError("camera: world_to_camera must hold 16 values");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = w2c[r * 4 + c];
    cam.translation[r] = w2c[r * 4 + 3];
  }
  if (cam.width <= 0 || cam.height <= 0) throw DataError("camera: non-positive image size");
  if (!(cam.near_clip > 0) || !(cam.far_clip > cam.near_clip))
    throw DataError("camera: require 0 < near < far");
  if (!cam.orthonormal(1e-4f)) throw DataError("camera: rotation is not orthonormal");
  return cam;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  return j;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw DataError(std::string(what) + " file missing: " + p.string());
}

}  // namespace

Camera camera_from_json_file(const std::string& path) {
  return camera_from_json(parse_file(path));
}

SceneDataset SceneDataset::load(const std::string& manifest_path) {
  const json j = parse_file(manifest_path);
  SceneDataset ds;
  ds.root = fs::path(manifest_path).parent_path().string();
  const fs::path root(ds.root);

  if (!j.contains("views") || !j.at("views").is_array() || j.at("views").size() < 2)
    throw DataError("manifest: need at least 2 views");

  auto resolve = [&root](const std::string& rel) { return (root / rel).string(); };

  for (const auto& v : j.at("views")) {
    SceneView view;
    view.camera = camera_from_json(v.at("camera"));
    view.image_path = resolve(v.at("image").get<std::string>());
    require_file(view.image_path, "image");
    if (v.contains("prior") && !v.at("prior").get<std::string>().empty()) {
      view.prior_path = resolve(v.at("prior").get<std::string>());
      require_file(view.prior_path, "prior");
    }
    if (v.contains("depth") && !v.at("depth").get<std::string>().empty()) {
      view.depth_path = resolve(v.at("depth").get<std::string>());
      require_file(view.depth_path, "depth");
    }
    ds.views.push_back(std::move(view));
  }

  const std::string ply = resolve(j.at("points").get<std::string>());
  require_file(ply, "points");
  ds.init_points = load_ply(ply);
  if (ds.init_points.size() < 1) throw DataError("manifest: empty point cloud");

  if (j.contains("background")) {
    const auto bg = j.at("background").get<std::vector<float>>();
    if (bg.size() != 3) throw DataError("manifest: background must hold 3 values");
    std::copy(bg.begin(), bg.end(), ds.background.begin());
  }
  if (j.contains("references"))
    for (const auto& r : j.at("references")) {
      const std::string p = resolve(r.get<std::string>());
      require_file(p, "reference");
      ds.reference_paths.push_back(p);
    }
  return ds;
}

void SceneDataset::save_manifest(const std::string& manifest_path) const {
  const fs::path root = fs::path(manifest_path).parent_path();
  auto relativize = [&root](const std::string& p) {
    return p.empty() ? p : fs::relative(p, root).string();
  };

  json views = json::array();
  for (const auto& v : this->views) {
    json jv{{"camera", camera_to_json(v.camera)}, {"image", relativize(v.image_path)}};
    if (!v.prior_path.empty()) jv["prior"] = relativize(v.prior_path);
    if (!v.depth_path.empty()) jv["depth"] = relativize(v.depth_path);
    views.push_back(std::move(jv));
  }

  json j{{"views", std::move(views)},
         {"points", "points.ply"},
         {"background", background}};
  if (!reference_paths.empty()) {
    json refs = json::array();
    for (const auto& r : reference_paths) refs.push_back(relativize(r));
    j["references"] = std::move(refs);
  }

  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path);
  out << j.dump(2) << '\n';
}

PointCloud load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path + ": not a PLY file");

  long vertex_count = -1;
  std::vector<std::string> props;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (tok == "element") {
      std::string name;
      long count;
      ls >> name >> count;
      if (name == "vertex") vertex_count = count;
      else if (vertex_count >= 0) break;  // only vertex properties matter
    } else if (tok == "property" && vertex_count >= 0) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) throw IoError(path + ": only ascii PLY is supported");
  if (vertex_count < 0) throw IoError(path + ": no vertex element");

  auto index_of = [&props](const char* name) {
    const auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : int(it - props.begin());
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  if (ix < 0 || iy < 0 || iz < 0) throw IoError(path + ": missing xyz properties");

  PointCloud pc;
  pc.positions.reserve(vertex_count * 3);
  pc.colors.reserve(vertex_count * 3);
  std::vector<double> row(props.size());
  for (long v = 0; v < vertex_count; ++v) {
    for (std::size_t p = 0; p < props.size(); ++p)
      if (!(in >> row[p])) throw IoError(path + ": truncated vertex data");
    pc.positions.push_back(float(row[ix]));
    pc.positions.push_back(float(row[iy]));
    pc.positions.push_back(float(row[iz]));
    if (ir >= 0 && ig >= 0 && ib >= 0) {
      // uchar colors are 0..255; float colors are already normalized
      const double scale = row[ir] > 1.0 || row[ig] > 1.0 || row[ib] > 1.0 ? 255.0 : 1.0;
      pc.colors.push_back(float(row[ir] / scale));
      pc.colors.push_back(float(row[ig] / scale));
      pc.colors.push_back(float(row[ib] / scale));
    } else {
      pc.colors.insert(pc.colors.end(), {0.5f, 0.5f, 0.5f});
    }
  }
  return pc;
}

void save_ply(const PointCloud& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const int n = points.size();
  out << "ply\nformat ascii 1.0\nelement vertex " << n
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (int i = 0; i < n; ++i) {
    out << points.positions[3 * i] << ' ' << points.positions[3 * i + 1] << ' '
        << points.positions[3 * i + 2];
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(points.colors[3 * i + c], 0.0f, 1.0f);
      out << ' ' << int(std::lround(v * 255.0f));
    }
    out << '\n';
  }
}

}  // namespace lumi
