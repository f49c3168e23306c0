#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "invfem/errors.hpp"
#include "invfem/tensor.hpp"

namespace invfem {

struct BoundaryFacet {
    std::array<int, 3> vertices;
    int tag = 0;
};

// Tetrahedral mesh. Immutable by convention after construction; the geometric
// substrate for both the undeformed and the deformed configuration.
struct Mesh {
    std::vector<Vec3d> vertices;
    std::vector<std::array<int, 4>> cells;
    std::vector<BoundaryFacet> boundary_facets;
    std::vector<int> region_tags;  // optional, empty or one per cell
};

inline double cell_signed_volume(const Mesh& mesh, std::size_t c) {
    const auto& t = mesh.cells[c];
    const Vec3d e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
    const Vec3d e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
    const Vec3d e3 = mesh.vertices[t[3]] - mesh.vertices[t[0]];
    return dot(e1, cross(e2, e3)) / 6.0;
}

inline double mesh_volume(const Mesh& mesh) {
    double v = 0;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) v += cell_signed_volume(mesh, c);
    return v;
}

namespace detail {

inline std::array<int, 3> sorted_tri(int a, int b, int c) {
    std::array<int, 3> t{a, b, c};
    std::sort(t.begin(), t.end());
    return t;
}

// The four faces of a cell, each opposite one local vertex.
inline std::array<std::array<int, 3>, 4> cell_faces(const std::array<int, 4>& t) {
    return {{{t[1], t[2], t[3]}, {t[0], t[2], t[3]}, {t[0], t[1], t[3]}, {t[0], t[1], t[2]}}};
}

// Faces that occur in exactly one cell, in deterministic (cell, face) order.
inline std::vector<std::array<int, 3>> topological_boundary(const Mesh& mesh) {
    std::map<std::array<int, 3>, int> count;
    for (const auto& cell : mesh.cells)
        for (const auto& f : cell_faces(cell))
            ++count[sorted_tri(f[0], f[1], f[2])];
    std::vector<std::array<int, 3>> out;
    for (const auto& cell : mesh.cells)
        for (const auto& f : cell_faces(cell))
            if (count[sorted_tri(f[0], f[1], f[2])] == 1) out.push_back(f);
    return out;
}

template <class TagFn>
void tag_topological_boundary(Mesh& mesh, TagFn&& tag_of) {
    mesh.boundary_facets.clear();
    for (const auto& f : topological_boundary(mesh))
        mesh.boundary_facets.push_back({f, tag_of(f)});
}

}  // namespace detail

// Checks the structural invariants. `require_closed` additionally demands
// that the stored facets cover the whole topological boundary (true for all
// generated meshes; Gmsh files may tag only part of it).
inline void validate_mesh(const Mesh& mesh, bool require_closed = true) {
    const int n = static_cast<int>(mesh.vertices.size());
    for (const auto& cell : mesh.cells)
        for (int v : cell)
            if (v < 0 || v >= n) throw InvalidArgument("cell vertex index out of range");
    for (const auto& f : mesh.boundary_facets)
        for (int v : f.vertices)
            if (v < 0 || v >= n) throw InvalidArgument("facet vertex index out of range");
    for (std::size_t c = 0; c < mesh.cells.size(); ++c)
        if (cell_signed_volume(mesh, c) <= 0.0)
            throw InvalidArgument("cell " + std::to_string(c) + " has non-positive volume");

    std::map<std::array<int, 3>, int> count;
    for (const auto& cell : mesh.cells)
        for (const auto& f : detail::cell_faces(cell))
            ++count[detail::sorted_tri(f[0], f[1], f[2])];
    for (const auto& f : mesh.boundary_facets) {
        auto it = count.find(detail::sorted_tri(f.vertices[0], f.vertices[1], f.vertices[2]));
        if (it == count.end()) throw InvalidArgument("boundary facet is not a cell face");
        if (it->second != 1) throw InvalidArgument("boundary facet belongs to more than one cell");
    }
    if (require_closed) {
        std::size_t nb = 0;
        for (const auto& [tri, c] : count)
            if (c == 1) ++nb;
        if (nb != mesh.boundary_facets.size())
            throw InvalidArgument("boundary facets do not cover the topological boundary");
    }
}

// Structured box split into 6 tetrahedra per hexahedron (Kuhn subdivision):
// conforming and orientation-consistent without case analysis. Facet tags
// 1..6 map to x-min, x-max, y-min, y-max, z-min, z-max.
inline Mesh generate_box_mesh(const Vec3d& extents, const std::array<int, 3>& divisions) {
    for (int d = 0; d < 3; ++d) {
        if (!(extents[d] > 0.0)) throw InvalidArgument("box extent must be positive");
        if (divisions[d] < 1) throw InvalidArgument("box divisions must be >= 1");
    }
    const int nx = divisions[0], ny = divisions[1], nz = divisions[2];
    Mesh mesh;
    std::vector<std::array<int, 3>> grid;  // vertex id -> (i,j,k)
    auto vid = [&](int i, int j, int k) { return (i * (ny + 1) + j) * (nz + 1) + k; };
    for (int i = 0; i <= nx; ++i)
        for (int j = 0; j <= ny; ++j)
            for (int k = 0; k <= nz; ++k) {
                mesh.vertices.push_back(Vec3d{extents[0] * (double(i) / nx),
                                              extents[1] * (double(j) / ny),
                                              extents[2] * (double(k) / nz)});
                grid.push_back({i, j, k});
            }

    static const std::array<std::array<int, 3>, 6> perms = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k)
                for (const auto& p : perms) {
                    std::array<std::array<int, 3>, 4> off{};
                    off[0] = {0, 0, 0};
                    for (int l = 1; l <= 2; ++l) {
                        off[l] = off[l - 1];
                        off[l][p[l - 1]] += 1;
                    }
                    off[3] = {1, 1, 1};
                    std::array<int, 4> tet{};
                    for (int l = 0; l < 4; ++l)
                        tet[l] = vid(i + off[l][0], j + off[l][1], k + off[l][2]);
                    mesh.cells.push_back(tet);
                    if (cell_signed_volume(mesh, mesh.cells.size() - 1) < 0.0)
                        std::swap(mesh.cells.back()[2], mesh.cells.back()[3]);
                }

    detail::tag_topological_boundary(mesh, [&](const std::array<int, 3>& f) {
        for (int d = 0; d < 3; ++d) {
            const int hi = divisions[d];
            if (grid[f[0]][d] == 0 && grid[f[1]][d] == 0 && grid[f[2]][d] == 0)
                return 2 * d + 1;
            if (grid[f[0]][d] == hi && grid[f[1]][d] == hi && grid[f[2]][d] == hi)
                return 2 * d + 2;
        }
        return 0;  // unreachable for a box
    });
    return mesh;
}

inline Mesh generate_unit_cube_mesh(int divisions) {
    return generate_box_mesh(Vec3d{1, 1, 1}, {divisions, divisions, divisions});
}

// Beam-shaped cylinder along the x axis, meshed as an extruded triangulated
// disc (each prism split into 3 tets). Tag 1 is the x = 0 end cap (the
// clamped face); tag 2 covers the lateral surface and the far cap.
inline Mesh generate_cylinder_mesh(double length, double diameter, int axial_divisions,
                                   int radial_layers) {
    if (!(length > 0.0) || !(diameter > 0.0))
        throw InvalidArgument("cylinder dimensions must be positive");
    if (axial_divisions < 1 || radial_layers < 1)
        throw InvalidArgument("cylinder divisions must be >= 1");

    const double radius = 0.5 * diameter;
    const int m = radial_layers;

    // Disc in the (y,z) plane: center node, then rings of 6*l nodes.
    std::vector<std::array<double, 2>> disc;
    disc.push_back({0.0, 0.0});
    std::vector<int> ring_start{0};  // index of first node of ring l (ring 0 = center)
    for (int l = 1; l <= m; ++l) {
        ring_start.push_back(static_cast<int>(disc.size()));
        const int count = 6 * l;
        const double r = radius * double(l) / m;
        for (int t = 0; t < count; ++t) {
            const double a = 2.0 * M_PI * double(t) / count;
            disc.push_back({r * std::cos(a), r * std::sin(a)});
        }
    }

    std::vector<std::array<int, 3>> tris;
    for (int s = 0; s < 6; ++s)
        tris.push_back({0, ring_start[1] + s, ring_start[1] + (s + 1) % 6});
    for (int l = 2; l <= m; ++l) {
        const int no = 6 * l, ni = 6 * (l - 1);
        auto outer_id = [&](int t) { return ring_start[l] + (t % no); };
        auto inner_id = [&](int t) { return ring_start[l - 1] + (t % ni); };
        for (int s = 0; s < 6; ++s) {
            const int ob = s * l, ib = s * (l - 1);
            for (int t = 0; t < l; ++t)
                tris.push_back({outer_id(ob + t), outer_id(ob + t + 1), inner_id(ib + t)});
            for (int t = 0; t + 1 <= l - 1; ++t)
                tris.push_back({outer_id(ob + t + 1), inner_id(ib + t + 1), inner_id(ib + t)});
        }
    }

    const int nd = static_cast<int>(disc.size());
    Mesh mesh;
    std::vector<int> station;  // vertex id -> axial slab index
    for (int s = 0; s <= axial_divisions; ++s) {
        const double x = length * (double(s) / axial_divisions);
        for (const auto& p : disc) {
            mesh.vertices.push_back(Vec3d{x, p[0], p[1]});
            station.push_back(s);
        }
    }

    // Prism split with quad diagonals running from the bottom copy of the
    // smaller disc id to the top copy of the larger: conforming across both
    // neighbouring prisms and layers.
    for (int s = 0; s < axial_divisions; ++s) {
        const int lo = s * nd, hi = (s + 1) * nd;
        for (const auto& tri : tris) {
            std::array<int, 3> v{tri[0], tri[1], tri[2]};
            std::sort(v.begin(), v.end());
            const int i = v[0], j = v[1], k = v[2];
            const std::array<std::array<int, 4>, 3> tets = {{
                {lo + i, lo + j, lo + k, hi + k},
                {lo + i, lo + j, hi + k, hi + j},
                {lo + i, hi + j, hi + k, hi + i},
            }};
            for (const auto& t : tets) {
                mesh.cells.push_back(t);
                if (cell_signed_volume(mesh, mesh.cells.size() - 1) < 0.0)
                    std::swap(mesh.cells.back()[2], mesh.cells.back()[3]);
            }
        }
    }

    detail::tag_topological_boundary(mesh, [&](const std::array<int, 3>& f) {
        return (station[f[0]] == 0 && station[f[1]] == 0 && station[f[2]] == 0) ? 1 : 2;
    });
    return mesh;
}

// The single-tetrahedron benchmark geometry. The facet lying in the y = 0
// plane carries tag 1 (the fixed face), the rest tag 2.
inline Mesh generate_unit_tetrahedron() {
    Mesh mesh;
    mesh.vertices = {Vec3d{0, 0, 0}, Vec3d{1, 0, 0}, Vec3d{0, 1, 0}, Vec3d{0, 0, 1}};
    mesh.cells = {{0, 1, 2, 3}};
    detail::tag_topological_boundary(mesh, [&](const std::array<int, 3>& f) {
        for (int v : f)
            if (mesh.vertices[v][1] != 0.0) return 2;
        return 1;
    });
    return mesh;
}

struct GmshReadResult {
    Mesh mesh;
    int skipped_elements = 0;
};

// Reads MSH 2.2 ASCII: 4-node tetrahedra (type 4) become cells, 3-node
// triangles (type 2) become tagged boundary facets (first physical tag).
// Other element types are skipped and counted. Inverted tetrahedra are
// reoriented by swapping two vertices.
inline GmshReadResult read_gmsh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    GmshReadResult result;
    std::map<long, int> node_index;
    std::string line;
    long lineno = 0;
    bool saw_elements = false;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(std::string("unexpected end of file in ") + what, lineno);
        ++lineno;
        return line;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] != '$') continue;
        const std::string section = line.substr(1);
        if (section == "MeshFormat") {
            std::istringstream ss(next_line("$MeshFormat"));
            std::string version;
            int file_type = -1, data_size = 0;
            ss >> version >> file_type >> data_size;
            if (version.rfind("2.2", 0) != 0 || file_type != 0)
                throw ParseError("unsupported mesh format '" + version + "' (need MSH 2.2 ASCII)", lineno);
            if (next_line("$MeshFormat") != "$EndMeshFormat")
                throw ParseError("expected $EndMeshFormat", lineno);
        } else if (section == "Nodes") {
            std::istringstream count_ss(next_line("$Nodes"));
            long count = -1;
            count_ss >> count;
            if (count < 0) throw ParseError("malformed node count", lineno);
            for (long n = 0; n < count; ++n) {
                std::istringstream ss(next_line("$Nodes"));
                long id;
                double x, y, z;
                if (!(ss >> id >> x >> y >> z)) throw ParseError("malformed node line", lineno);
                node_index[id] = static_cast<int>(result.mesh.vertices.size());
                result.mesh.vertices.push_back(Vec3d{x, y, z});
            }
            if (next_line("$Nodes") != "$EndNodes") throw ParseError("expected $EndNodes", lineno);
        } else if (section == "Elements") {
            saw_elements = true;
            std::istringstream count_ss(next_line("$Elements"));
            long count = -1;
            count_ss >> count;
            if (count < 0) throw ParseError("malformed element count", lineno);
            for (long n = 0; n < count; ++n) {
                std::istringstream ss(next_line("$Elements"));
                long id;
                int type, ntags;
                if (!(ss >> id >> type >> ntags)) throw ParseError("malformed element line", lineno);
                std::vector<int> tags(ntags);
                for (int& t : tags)
                    if (!(ss >> t)) throw ParseError("malformed element tags", lineno);
                const int nnodes = (type == 4) ? 4 : (type == 2) ? 3 : -1;
                if (nnodes < 0) {
                    ++result.skipped_elements;
                    continue;
                }
                std::array<int, 4> nodes{};
                for (int v = 0; v < nnodes; ++v) {
                    long nid;
                    if (!(ss >> nid)) throw ParseError("malformed element connectivity", lineno);
                    auto it = node_index.find(nid);
                    if (it == node_index.end())
                        throw ParseError("element references unknown node " + std::to_string(nid), lineno);
                    nodes[v] = it->second;
                }
                if (type == 4) {
                    result.mesh.cells.push_back({nodes[0], nodes[1], nodes[2], nodes[3]});
                } else {
                    result.mesh.boundary_facets.push_back(
                        {{nodes[0], nodes[1], nodes[2]}, tags.empty() ? 0 : tags[0]});
                }
            }
            if (next_line("$Elements") != "$EndElements") throw ParseError("expected $EndElements", lineno);
        } else if (section.rfind("End", 0) != 0) {
            // Unknown section: skip to its terminator.
            const std::string terminator = "$End" + section;
            while (next_line(section.c_str()) != terminator) {}
        }
    }

    if (!saw_elements) throw ParseError("file has no $Elements section", lineno);
    if (result.mesh.cells.empty()) throw ParseError("mesh has no tetrahedra", lineno);
    for (std::size_t c = 0; c < result.mesh.cells.size(); ++c)
        if (cell_signed_volume(result.mesh, c) < 0.0)
            std::swap(result.mesh.cells[c][2], result.mesh.cells[c][3]);
    return result;
}

struct VtkPointField {
    std::string name;
    int value_dim = 1;            // 1 or 3
    std::vector<double> values;   // per vertex, components interleaved
};

// VTK legacy ASCII 3.0 UNSTRUCTURED_GRID writer. Fields are sampled at mesh
// vertices (for P2 spaces the caller passes the vertex subset of the DOFs).
inline void write_vtk(const Mesh& mesh, const std::vector<VtkPointField>& fields,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << std::setprecision(17);
    const std::size_t n = mesh.vertices.size();

    out << "# vtk DataFile Version 3.0\n";
    out << "invfem\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (const auto& v : mesh.vertices) out << v[0] << " " << v[1] << " " << v[2] << "\n";
    out << "CELLS " << mesh.cells.size() << " " << 5 * mesh.cells.size() << "\n";
    for (const auto& c : mesh.cells)
        out << "4 " << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
    out << "CELL_TYPES " << mesh.cells.size() << "\n";
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) out << "10\n";

    if (!fields.empty()) {
        out << "POINT_DATA " << n << "\n";
        for (const auto& f : fields) {
            if (f.values.size() != n * static_cast<std::size_t>(f.value_dim))
                throw InvalidArgument("field '" + f.name + "' does not match mesh vertex count");
            if (f.value_dim == 3) {
                out << "VECTORS " << f.name << " double\n";
                for (std::size_t i = 0; i < n; ++i)
                    out << f.values[3 * i] << " " << f.values[3 * i + 1] << " "
                        << f.values[3 * i + 2] << "\n";
            } else {
                out << "SCALARS " << f.name << " double 1\n";
                out << "LOOKUP_TABLE default\n";
                for (std::size_t i = 0; i < n; ++i) out << f.values[i] << "\n";
            }
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace invfem
