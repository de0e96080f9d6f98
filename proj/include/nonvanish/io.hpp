#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "nonvanish/elliptic.hpp"
#include "nonvanish/geometry.hpp"

namespace nonvanish {

// Plain-text node/element format: one "x y" line per vertex, then one
// "i j k" line per triangle, 0-based.
void write_mesh_text(const Mesh& mesh, const std::string& path);

// Legacy ASCII VTK unstructured grid, with optional per-vertex scalar
// arrays.
void write_mesh_vtk(const Mesh& mesh, const std::string& path,
                    const std::map<std::string, Eigen::VectorXd>& point_data = {});

// CSV "x,y,u,ux,uy" with 17 significant digits, one row per sample point.
void write_field_csv(const std::string& path, const std::vector<Vec2>& points,
                     const std::vector<PointSample>& samples);

// CSV "x,y,margin".
void write_margin_csv(const std::string& path, const std::vector<Vec2>& points,
                      const Eigen::VectorXd& margins);

void write_text_file(const std::string& path, const std::string& content);

void ensure_directory(const std::string& path);

}  // namespace nonvanish
