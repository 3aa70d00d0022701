#pragma once

#include "jumpflow/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jumpflow {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Open for writing; throws std::runtime_error naming the path on failure.
std::ofstream open_output(const std::filesystem::path& path);

struct CellArray {
    std::string name;
    std::vector<double> values;
};

/// Legacy VTK ASCII unstructured grid of a 2D mesh with scalar cell data.
void write_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh, const std::vector<CellArray>& cell_data);

/// 1D solution rows `x_center,pressure,u,regime`.
void write_solution_csv(const std::filesystem::path& path,
                        const SimplicialMesh& mesh,
                        const std::vector<double>& pressure,
                        const std::vector<double>& velocity,
                        const std::vector<int>& regimes);

} // namespace jumpflow
