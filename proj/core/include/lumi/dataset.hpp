#pragma once

#include <array>
#include <string>
#include <vector>

#include "lumi/camera.hpp"

namespace lumi {

struct SceneView {
  Camera camera;
  std::string image_path;
  std::string prior_path;  // may be empty: trainer extracts the prior itself
  std::string depth_path;  // may be empty: trainer synthesizes the target
};

struct PointCloud {
  std::vector<float> positions;  // M*3
  std::vector<float> colors;     // M*3, in [0,1]
  int size() const { return static_cast<int>(positions.size() / 3); }
};

/// Multi-view training scene: per-view cameras and asset paths plus the sparse
/// initialization points. Poses and points are ingested from files, never
/// estimated here.
struct SceneDataset {
  std::vector<SceneView> views;
  PointCloud init_points;
  std::array<float, 3> background{0.f, 0.f, 0.f};
  std::vector<std::string> reference_paths;  // optional held-out clean views
  std::string root;                          // directory of the manifest

  /// Loads and validates a JSON manifest: >= 2 views, every referenced file
  /// present, orthonormal rotations. Throws IoError/DataError.
  static SceneDataset load(const std::string& manifest_path);

  void save_manifest(const std::string& manifest_path) const;
};

Camera camera_from_json_file(const std::string& path);

/// ASCII PLY with xyz + rgb vertex properties (uchar or float color).
PointCloud load_ply(const std::string& path);
void save_ply(const PointCloud& points, const std::string& path);

}  // namespace lumi
