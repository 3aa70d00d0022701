#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/mesh.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace jumpflow;

namespace {

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("jumpflow_test_mesh_" + name);
}

void check_orientation(const SimplicialMesh& mesh)
{
    std::vector<int> count(mesh.n_faces(), 0);
    std::vector<int> sign_sum(mesh.n_faces(), 0);
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        for (std::size_t k = 0; k < faces.size(); ++k) {
            ++count[faces[k]];
            sign_sum[faces[k]] += signs[k];
            CHECK(std::abs(signs[k]) == 1);
        }
    }
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        if (mesh.is_boundary(f)) {
            CHECK(count[f] == 1);
            CHECK(mesh.boundary_side(f) != Side::None);
        } else {
            CHECK(count[f] == 2);
            CHECK(sign_sum[f] == 0);
        }
        CHECK(mesh.face_measure(f) > 0.0);
    }
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        CHECK(mesh.cell_volume(c) > 0.0);
    }
}

} // namespace

TEST_CASE("build_interval_mesh")
{
    const auto mesh = build_interval_mesh(0.0, 1.0, 4);
    CHECK(mesh.dim() == 1);
    CHECK(mesh.n_cells() == 4);
    CHECK(mesh.n_faces() == 5);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(mesh.cell_volume(c) == doctest::Approx(0.25).epsilon(1e-15));
    }
    CHECK(mesh.boundary_side(0) == Side::Left);
    CHECK(mesh.boundary_side(4) == Side::Right);
    CHECK(mesh.boundary_sign(0) == -1);
    CHECK(mesh.boundary_sign(4) == 1);
    CHECK(mesh.cell_barycenter(1)[0] == doctest::Approx(0.375));
    check_orientation(mesh);

    const auto fine = build_interval_mesh(0.0, 1.0, 1000);
    CHECK(fine.cell_volume(17) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(std::abs(fine.domain_measure() - 1.0) <= 1e-15);

    CHECK_THROWS_AS(build_interval_mesh(1.0, 0.0, 4), ValidationError);
    CHECK_THROWS_AS(build_interval_mesh(0.0, 1.0, 0), ValidationError);
}

TEST_CASE("build_structured_tri_mesh: single quad")
{
    const auto mesh = build_structured_tri_mesh(1, 1, 1.0, 1.0);
    CHECK(mesh.n_cells() == 2);
    CHECK(mesh.n_faces() == 5);
    CHECK(mesh.cell_volume(0) == doctest::Approx(0.5));
    CHECK(mesh.cell_volume(1) == doctest::Approx(0.5));
    CHECK(mesh.quad_index(0) == 0);
    CHECK(mesh.quad_index(1) == 0);
    // lower-right triangle below the diagonal
    CHECK(mesh.cell_barycenter(0)[0] > mesh.cell_barycenter(0)[1]);
    check_orientation(mesh);
}

TEST_CASE("build_structured_tri_mesh: SPE10 layer size")
{
    const double lx = 365.76;
    const double ly = 670.56;
    const auto mesh = build_structured_tri_mesh(60, 220, lx, ly);
    CHECK(mesh.n_cells() == 26400);
    CHECK(std::abs(mesh.domain_measure() - lx * ly) <= 1e-9 * lx * ly);
    // Euler characteristic of a disk
    const auto euler = static_cast<long>(mesh.n_vertices()) - static_cast<long>(mesh.n_faces())
                     + static_cast<long>(mesh.n_cells());
    CHECK(euler == 1);
    check_orientation(mesh);

    std::size_t n_left = 0;
    std::size_t n_top = 0;
    double left_len = 0.0;
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        if (mesh.boundary_side(f) == Side::Left) {
            ++n_left;
            left_len += mesh.face_measure(f);
        }
        n_top += mesh.boundary_side(f) == Side::Top ? 1 : 0;
    }
    CHECK(n_left == 220);
    CHECK(n_top == 60);
    CHECK(left_len == doctest::Approx(ly).epsilon(1e-12));

    // quad (i, j) owns cells 2 (i + nx j) and 2 (i + nx j) + 1
    CHECK(mesh.quad_index(2 * (7 + 60 * 11)) == 7 + 60 * 11);
    CHECK(mesh.quad_index(2 * (7 + 60 * 11) + 1) == 7 + 60 * 11);

    CHECK_THROWS_AS(build_structured_tri_mesh(0, 3, 1.0, 1.0), ValidationError);
    CHECK_THROWS_AS(build_structured_tri_mesh(3, 3, -1.0, 1.0), ValidationError);
}

TEST_CASE("outward normals agree with signs")
{
    const auto mesh = build_structured_tri_mesh(3, 2, 2.0, 1.0);
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const auto& m = mesh.face_midpoint(faces[k]);
            const auto& b = mesh.cell_barycenter(c);
            const Vec2 out{m[0] - b[0], m[1] - b[1]};
            CHECK(signs[k] * dot(out, mesh.face_normal(faces[k])) > 0.0);
        }
    }
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        if (!mesh.is_boundary(f)) {
            continue;
        }
        const Vec2 n = mesh.face_normal(f);
        const int s = mesh.boundary_sign(f);
        const Vec2 out{s * n[0], s * n[1]};
        switch (mesh.boundary_side(f)) {
        case Side::Left:
            CHECK(out[0] == doctest::Approx(-1.0));
            break;
        case Side::Right:
            CHECK(out[0] == doctest::Approx(1.0));
            break;
        case Side::Bottom:
            CHECK(out[1] == doctest::Approx(-1.0));
            break;
        case Side::Top:
            CHECK(out[1] == doctest::Approx(1.0));
            break;
        case Side::None:
            CHECK(false);
        }
    }
}

TEST_CASE("property: oriented flux sums telescope to the boundary")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (const auto& mesh : {build_interval_mesh(0.0, 1.0, 37), build_structured_tri_mesh(7, 5, 1.3, 0.7)}) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> flux(mesh.n_faces());
            for (auto& u : flux) {
                u = dist(rng);
            }
            double interior_sum = 0.0;
            for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
                const auto faces = mesh.cell_faces(c);
                const auto signs = mesh.cell_signs(c);
                for (std::size_t k = 0; k < faces.size(); ++k) {
                    interior_sum += signs[k] * flux[faces[k]];
                }
            }
            double boundary_sum = 0.0;
            for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
                if (mesh.is_boundary(f)) {
                    boundary_sum += mesh.boundary_sign(f) * flux[f];
                }
            }
            CHECK(interior_sum == doctest::Approx(boundary_sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("load_quad_cell_field")
{
    const auto mesh = build_structured_tri_mesh(3, 2, 1.0, 1.0);
    const auto path = temp_file("field.txt");

    SUBCASE("inverse permeability broadcast")
    {
        {
            std::ofstream out(path);
            out << "1 2 3\n4 5 6\n";
        }
        const auto field = load_quad_cell_field(path, mesh, QuadFieldMode::InversePermeability);
        REQUIRE(field.size() == 12);
        CHECK(field[0] == 1.0);
        CHECK(field[1] == 1.0);
        CHECK(field[2 * 4] == 5.0);
        CHECK(field[2 * 4 + 1] == 5.0);
    }
    SUBCASE("permeability inverts")
    {
        {
            std::ofstream out(path);
            for (int k = 0; k < 6; ++k) {
                out << "4.0 ";
            }
        }
        const auto field = load_quad_cell_field(path, mesh, QuadFieldMode::Permeability);
        for (double v : field) {
            CHECK(v == 0.25);
        }
    }
    SUBCASE("wrong count")
    {
        {
            std::ofstream out(path);
            out << "1 2 3 4 5\n";
        }
        try {
            load_quad_cell_field(path, mesh, QuadFieldMode::Permeability);
            CHECK(false);
        } catch (const FormatError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("expected 6") != std::string::npos);
            CHECK(msg.find("found 5") != std::string::npos);
        }
    }
    SUBCASE("nonpositive value")
    {
        {
            std::ofstream out(path);
            out << "1 2 3 0 5 6\n";
        }
        CHECK_THROWS_AS(load_quad_cell_field(path, mesh, QuadFieldMode::Permeability), ValidationError);
    }
    SUBCASE("garbage token")
    {
        {
            std::ofstream out(path);
            out << "1 2 3 x 5 6\n";
        }
        CHECK_THROWS_AS(load_quad_cell_field(path, mesh, QuadFieldMode::Permeability), FormatError);
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(load_quad_cell_field(temp_file("missing.txt"), mesh, QuadFieldMode::Permeability),
                        FormatError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("constant field on the SPE10 layer")
{
    const auto mesh = build_structured_tri_mesh(60, 220, 365.76, 670.56);
    const auto path = temp_file("ones.txt");
    {
        std::ofstream out(path);
        for (int k = 0; k < 60 * 220; ++k) {
            out << "1.0\n";
        }
    }
    const auto field = load_quad_cell_field(path, mesh, QuadFieldMode::InversePermeability);
    CHECK(field.size() == 26400);
    CHECK(std::set<double>(field.begin(), field.end()) == std::set<double>{1.0});
    std::filesystem::remove(path);
}
