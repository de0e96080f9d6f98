#include "nonvanish/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace nonvanish {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void check_stream(const std::ofstream& out, const std::string& path) {
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_mesh_text(const Mesh& mesh, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Vec2& v : mesh.vertices) out << fmt17(v.x()) << " " << fmt17(v.y()) << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  check_stream(out, path);
}

void write_mesh_vtk(const Mesh& mesh, const std::string& path,
                    const std::map<std::string, Eigen::VectorXd>& point_data) {
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "nonvanish " << to_string(mesh.domain_kind) << " mesh\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertex_count() << " double\n";
  for (const Vec2& v : mesh.vertices) out << fmt17(v.x()) << " " << fmt17(v.y()) << " 0\n";
  out << "CELLS " << mesh.triangle_count() << " " << 4 * mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t) out << "5\n";
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.vertex_count() << "\n";
    for (const auto& [name, values] : point_data) {
      out << "SCALARS " << name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (int i = 0; i < values.size(); ++i) out << fmt17(values[i]) << "\n";
    }
  }
  check_stream(out, path);
}

void write_field_csv(const std::string& path, const std::vector<Vec2>& points,
                     const std::vector<PointSample>& samples) {
  std::ofstream out = open_out(path);
  out << "x,y,u,ux,uy\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << fmt17(points[i].x()) << "," << fmt17(points[i].y()) << "," << fmt17(samples[i].u)
        << "," << fmt17(samples[i].grad.x()) << "," << fmt17(samples[i].grad.y()) << "\n";
  }
  check_stream(out, path);
}

void write_margin_csv(const std::string& path, const std::vector<Vec2>& points,
                      const Eigen::VectorXd& margins) {
  std::ofstream out = open_out(path);
  out << "x,y,margin\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << fmt17(points[i].x()) << "," << fmt17(points[i].y()) << ","
        << fmt17(margins[static_cast<int>(i)]) << "\n";
  }
  check_stream(out, path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out = open_out(path);
  out << content;
  check_stream(out, path);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create output directory '" + path + "': " + ec.message());
}

}  // namespace nonvanish
