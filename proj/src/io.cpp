#include "jumpflow/io.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace jumpflow {

std::string format_double(double value)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), res.ptr};
}

std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return out;
}

void write_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh, const std::vector<CellArray>& cell_data)
{
    auto out = open_output(path);
    out << "# vtk DataFile Version 3.0\n"
        << "jumpflow solution\n"
        << "ASCII\n"
        << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices()) {
        out << format_double(v[0]) << ' ' << format_double(v[1]) << " 0\n";
    }
    const std::size_t per_cell = mesh.cell_size();
    out << "CELLS " << mesh.n_cells() << ' ' << mesh.n_cells() * (per_cell + 1) << '\n';
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        out << per_cell;
        for (int v : mesh.cell_vertices(c)) {
            out << ' ' << v;
        }
        out << '\n';
    }
    // VTK_LINE = 3, VTK_TRIANGLE = 5
    const int cell_type = mesh.dim() == 1 ? 3 : 5;
    out << "CELL_TYPES " << mesh.n_cells() << '\n';
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        out << cell_type << '\n';
    }
    out << "CELL_DATA " << mesh.n_cells() << '\n';
    for (const auto& array : cell_data) {
        if (array.values.size() != mesh.n_cells()) {
            throw std::invalid_argument("write_vtk: array '" + array.name + "' does not match the cell count");
        }
        out << "SCALARS " << array.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : array.values) {
            out << format_double(v) << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

void write_solution_csv(const std::filesystem::path& path,
                        const SimplicialMesh& mesh,
                        const std::vector<double>& pressure,
                        const std::vector<double>& velocity,
                        const std::vector<int>& regimes)
{
    auto out = open_output(path);
    out << "x_center,pressure,u,regime\n";
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        out << format_double(mesh.cell_barycenter(c)[0]) << ',' << format_double(pressure[c]) << ','
            << format_double(velocity[c]) << ',' << regimes[c] << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

} // namespace jumpflow
