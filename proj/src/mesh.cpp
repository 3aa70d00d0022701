#include "jumpflow/mesh.hpp"

#include "jumpflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

namespace jumpflow {

const char* side_name(Side side)
{
    switch (side) {
    case Side::Left:
        return "left";
    case Side::Right:
        return "right";
    case Side::Bottom:
        return "bottom";
    case Side::Top:
        return "top";
    case Side::None:
        break;
    }
    return "none";
}

int SimplicialMesh::boundary_sign(std::size_t f) const
{
    const auto c = static_cast<std::size_t>(face_cells_[f][0]);
    const auto faces = cell_faces(c);
    for (std::size_t k = 0; k < faces.size(); ++k) {
        if (static_cast<std::size_t>(faces[k]) == f) {
            return cell_signs(c)[k];
        }
    }
    return 0;
}

double SimplicialMesh::domain_measure() const
{
    double sum = 0.0;
    for (double v : cell_volume_) {
        sum += v;
    }
    return sum;
}

void SimplicialMesh::finalize_geometry()
{
    const std::size_t nc = cell_vertices_.size() / cell_size();
    cell_volume_.resize(nc);
    cell_barycenter_.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto v = cell_vertices(c);
        Vec2 bary{0.0, 0.0};
        for (int i : v) {
            bary[0] += vertices_[i][0];
            bary[1] += vertices_[i][1];
        }
        bary[0] /= static_cast<double>(v.size());
        bary[1] /= static_cast<double>(v.size());
        cell_barycenter_[c] = bary;
        if (dim_ == 1) {
            cell_volume_[c] = std::abs(vertices_[v[1]][0] - vertices_[v[0]][0]);
        } else {
            const auto& a = vertices_[v[0]];
            const auto& b = vertices_[v[1]];
            const auto& d = vertices_[v[2]];
            cell_volume_[c] = 0.5 * std::abs((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]));
        }
    }

    // orientation signs: +1 when the global normal leaves the cell
    cell_signs_.assign(cell_faces_.size(), 0);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto faces = cell_faces(c);
        const auto verts = cell_vertices(c);
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const auto f = static_cast<std::size_t>(faces[k]);
            const auto& opposite = vertices_[verts[k]];
            const Vec2 out{face_midpoint_[f][0] - opposite[0], face_midpoint_[f][1] - opposite[1]};
            cell_signs_[c * cell_size() + k] = dot(out, face_normal_[f]) > 0.0 ? 1 : -1;
        }
    }
}

SimplicialMesh build_interval_mesh(double x_left, double x_right, std::size_t n_cells)
{
    if (!(x_left < x_right) || !std::isfinite(x_left) || !std::isfinite(x_right)) {
        throw ValidationError("interval mesh: need finite x_left < x_right");
    }
    if (n_cells < 1) {
        throw ValidationError("interval mesh: need at least one cell");
    }
    SimplicialMesh mesh;
    mesh.dim_ = 1;
    const double h = (x_right - x_left) / static_cast<double>(n_cells);
    for (std::size_t k = 0; k <= n_cells; ++k) {
        const double x = k == n_cells ? x_right : x_left + h * static_cast<double>(k);
        mesh.vertices_.push_back({x, 0.0});
        mesh.face_vertices_.push_back({static_cast<int>(k), -1});
        mesh.face_measure_.push_back(1.0);
        mesh.face_normal_.push_back({1.0, 0.0});
        mesh.face_midpoint_.push_back({x, 0.0});
        mesh.face_cells_.push_back({-1, -1});
        mesh.face_side_.push_back(Side::None);
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        const int l = static_cast<int>(c);
        const int r = static_cast<int>(c + 1);
        mesh.cell_vertices_.insert(mesh.cell_vertices_.end(), {l, r});
        // face opposite the left vertex is the right node and vice versa
        mesh.cell_faces_.insert(mesh.cell_faces_.end(), {r, l});
        mesh.quad_index_.push_back(static_cast<int>(c));
    }
    for (std::size_t f = 0; f <= n_cells; ++f) {
        auto& fc = mesh.face_cells_[f];
        if (f > 0) {
            fc[0] = static_cast<int>(f - 1);
        }
        if (f < n_cells) {
            if (fc[0] < 0) {
                fc[0] = static_cast<int>(f);
            } else {
                fc[1] = static_cast<int>(f);
            }
        }
    }
    mesh.face_side_.front() = Side::Left;
    mesh.face_side_.back() = Side::Right;
    mesh.nx_ = n_cells;
    mesh.ny_ = 1;
    mesh.finalize_geometry();
    return mesh;
}

SimplicialMesh build_structured_tri_mesh(std::size_t nx, std::size_t ny, double lx, double ly)
{
    if (nx < 1 || ny < 1) {
        throw ValidationError("structured mesh: nx and ny must be at least 1");
    }
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
        throw ValidationError("structured mesh: lx and ly must be positive");
    }
    SimplicialMesh mesh;
    mesh.dim_ = 2;
    mesh.nx_ = nx;
    mesh.ny_ = ny;
    const double hx = lx / static_cast<double>(nx);
    const double hy = ly / static_cast<double>(ny);
    for (std::size_t j = 0; j <= ny; ++j) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const double x = i == nx ? lx : hx * static_cast<double>(i);
            const double y = j == ny ? ly : hy * static_cast<double>(j);
            mesh.vertices_.push_back({x, y});
        }
    }
    auto vid = [nx](std::size_t i, std::size_t j) { return static_cast<int>(i + (nx + 1) * j); };

    std::map<std::pair<int, int>, int> edge_ids;
    auto edge = [&](int a, int b, int cell) {
        const auto key = std::minmax(a, b);
        auto [it, inserted] = edge_ids.try_emplace({key.first, key.second}, static_cast<int>(mesh.face_vertices_.size()));
        if (inserted) {
            mesh.face_vertices_.push_back({key.first, key.second});
            mesh.face_cells_.push_back({cell, -1});
        } else {
            mesh.face_cells_[it->second][1] = cell;
        }
        return it->second;
    };

    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const int v00 = vid(i, j);
            const int v10 = vid(i + 1, j);
            const int v11 = vid(i + 1, j + 1);
            const int v01 = vid(i, j + 1);
            const int quad = static_cast<int>(i + nx * j);
            const std::array<std::array<int, 3>, 2> tris{{{v00, v10, v11}, {v00, v11, v01}}};
            for (const auto& t : tris) {
                const int cell = static_cast<int>(mesh.quad_index_.size());
                mesh.cell_vertices_.insert(mesh.cell_vertices_.end(), t.begin(), t.end());
                for (int k = 0; k < 3; ++k) {
                    mesh.cell_faces_.push_back(edge(t[(k + 1) % 3], t[(k + 2) % 3], cell));
                }
                mesh.quad_index_.push_back(quad);
            }
        }
    }

    const std::size_t nf = mesh.face_vertices_.size();
    mesh.face_measure_.resize(nf);
    mesh.face_normal_.resize(nf);
    mesh.face_midpoint_.resize(nf);
    mesh.face_side_.assign(nf, Side::None);
    const double tol_x = 1e-12 * lx;
    const double tol_y = 1e-12 * ly;
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& a = mesh.vertices_[mesh.face_vertices_[f][0]];
        const auto& b = mesh.vertices_[mesh.face_vertices_[f][1]];
        const Vec2 t{b[0] - a[0], b[1] - a[1]};
        const double len = std::hypot(t[0], t[1]);
        mesh.face_measure_[f] = len;
        mesh.face_normal_[f] = {t[1] / len, -t[0] / len};
        mesh.face_midpoint_[f] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        if (mesh.face_cells_[f][1] < 0) {
            const auto& m = mesh.face_midpoint_[f];
            if (std::abs(m[0]) <= tol_x) {
                mesh.face_side_[f] = Side::Left;
            } else if (std::abs(m[0] - lx) <= tol_x) {
                mesh.face_side_[f] = Side::Right;
            } else if (std::abs(m[1]) <= tol_y) {
                mesh.face_side_[f] = Side::Bottom;
            } else if (std::abs(m[1] - ly) <= tol_y) {
                mesh.face_side_[f] = Side::Top;
            }
        }
    }
    mesh.finalize_geometry();
    return mesh;
}

std::vector<double> read_quad_field(const std::filesystem::path& path,
                                    std::size_t nx,
                                    std::size_t ny,
                                    QuadFieldMode mode)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open cell field file '" + path.string() + "'");
    }
    std::vector<double> values;
    values.reserve(nx * ny);
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) {
            throw FormatError("cell field '" + path.string() + "': not a number: '" + token + "'");
        }
        values.push_back(v);
    }
    if (values.size() != nx * ny) {
        throw FormatError("cell field '" + path.string() + "': expected " + std::to_string(nx * ny)
                          + " values, found " + std::to_string(values.size()));
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
            throw ValidationError("cell field '" + path.string() + "': value " + std::to_string(k)
                                  + " is not positive");
        }
        if (mode == QuadFieldMode::Permeability) {
            values[k] = 1.0 / values[k];
        }
    }
    return values;
}

CellField broadcast_quad_field(const SimplicialMesh& mesh, std::span<const double> quad_values)
{
    if (quad_values.size() != mesh.nx() * mesh.ny()) {
        throw ValidationError("quad field size does not match the mesh");
    }
    CellField out(mesh.n_cells());
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        out[c] = quad_values[static_cast<std::size_t>(mesh.quad_index(c))];
    }
    return out;
}

CellField load_quad_cell_field(const std::filesystem::path& path, const SimplicialMesh& mesh, QuadFieldMode mode)
{
    const auto quads = read_quad_field(path, mesh.nx(), mesh.ny(), mode);
    return broadcast_quad_field(mesh, quads);
}

} // namespace jumpflow
