#pragma once

#include "jumpflow/law.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace jumpflow {

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

/// Side of the bounding box a boundary face lies on.
enum class Side : int { None = -1, Left = 0, Right = 1, Bottom = 2, Top = 3 };

const char* side_name(Side side);

/// Interval or triangle mesh with unique oriented faces.
///
/// Faces are points in 1D and edges in 2D. Each face has one global unit
/// normal; local face k of a cell is the face opposite its local vertex k and
/// carries sign +1 when the global normal points out of the cell. 1D meshes
/// store coordinates in the first component and use the normal (1, 0).
class SimplicialMesh {
public:
    int dim() const { return dim_; }
    std::size_t n_vertices() const { return vertices_.size(); }
    std::size_t n_cells() const { return cell_volume_.size(); }
    std::size_t n_faces() const { return face_measure_.size(); }
    /// Vertices (and faces) per cell: dim + 1.
    std::size_t cell_size() const { return static_cast<std::size_t>(dim_) + 1; }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::span<const int> cell_vertices(std::size_t c) const { return {&cell_vertices_[c * cell_size()], cell_size()}; }
    std::span<const int> cell_faces(std::size_t c) const { return {&cell_faces_[c * cell_size()], cell_size()}; }
    std::span<const int> cell_signs(std::size_t c) const { return {&cell_signs_[c * cell_size()], cell_size()}; }

    double cell_volume(std::size_t c) const { return cell_volume_[c]; }
    const Vec2& cell_barycenter(std::size_t c) const { return cell_barycenter_[c]; }
    const std::vector<double>& cell_volumes() const { return cell_volume_; }

    double face_measure(std::size_t f) const { return face_measure_[f]; }
    const Vec2& face_normal(std::size_t f) const { return face_normal_[f]; }
    const Vec2& face_midpoint(std::size_t f) const { return face_midpoint_[f]; }
    /// Adjacent cells; the second entry is -1 on the boundary.
    const std::array<int, 2>& face_cells(std::size_t f) const { return face_cells_[f]; }
    bool is_boundary(std::size_t f) const { return face_cells_[f][1] < 0; }
    Side boundary_side(std::size_t f) const { return face_side_[f]; }
    /// Sign of the global normal relative to the outward normal of the (single) boundary cell.
    int boundary_sign(std::size_t f) const;

    /// Structured source quad of each cell (the cell itself in 1D).
    int quad_index(std::size_t c) const { return quad_index_[c]; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }

    double domain_measure() const;

    friend SimplicialMesh build_interval_mesh(double, double, std::size_t);
    friend SimplicialMesh build_structured_tri_mesh(std::size_t, std::size_t, double, double);

private:
    void finalize_geometry();

    int dim_ = 1;
    std::vector<Vec2> vertices_;
    std::vector<int> cell_vertices_;
    std::vector<int> cell_faces_;
    std::vector<int> cell_signs_;
    std::vector<double> cell_volume_;
    std::vector<Vec2> cell_barycenter_;
    std::vector<std::array<int, 2>> face_vertices_;
    std::vector<double> face_measure_;
    std::vector<Vec2> face_normal_;
    std::vector<Vec2> face_midpoint_;
    std::vector<std::array<int, 2>> face_cells_;
    std::vector<Side> face_side_;
    std::vector<int> quad_index_;
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
};

/// Uniform partition of [x_left, x_right]; faces are the n_cells + 1 nodes.
SimplicialMesh build_interval_mesh(double x_left, double x_right, std::size_t n_cells);

/// nx * ny rectangles on [0, lx] x [0, ly], each split along its
/// lower-left to upper-right diagonal. Quad (i, j) has index i + nx * j and
/// owns cells 2 (i + nx j) and 2 (i + nx j) + 1.
SimplicialMesh build_structured_tri_mesh(std::size_t nx, std::size_t ny, double lx, double ly);

enum class QuadFieldMode { InversePermeability, Permeability };

/// Read nx * ny positive values (x index fastest). In permeability mode each
/// value k is replaced by 1 / k.
std::vector<double> read_quad_field(const std::filesystem::path& path,
                                    std::size_t nx,
                                    std::size_t ny,
                                    QuadFieldMode mode);

/// Broadcast per-quad values to the cells of a structured mesh.
CellField broadcast_quad_field(const SimplicialMesh& mesh, std::span<const double> quad_values);

CellField load_quad_cell_field(const std::filesystem::path& path, const SimplicialMesh& mesh, QuadFieldMode mode);

} // namespace jumpflow
