#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "degenlab/errors.hpp"

namespace degenlab {

/// Strictly increasing node sequence of a 1D piecewise-linear discretization.
struct RadialMesh {
    std::vector<double> nodes;
    double grading = 1.0;

    int cells() const { return static_cast<int>(nodes.size()) - 1; }
    double left() const { return nodes.front(); }
    double right() const { return nodes.back(); }
    bool touches_origin() const { return nodes.front() == 0.0; }
};

inline void check_mesh(const RadialMesh& mesh) {
    if (mesh.nodes.size() < 3) fail(ErrorCode::InvalidMeshSpec, "mesh needs at least two cells");
    for (std::size_t j = 1; j < mesh.nodes.size(); ++j)
        if (!(mesh.nodes[j] > mesh.nodes[j - 1]))
            fail(ErrorCode::InvalidMeshSpec, "mesh nodes must be strictly increasing");
}

/// nodes r_j = (j/N)^g on [0, 1]
inline RadialMesh build_graded_mesh(int cells, double grading) {
    if (cells < 2) fail(ErrorCode::InvalidMeshSpec, "need N >= 2 cells, got " + std::to_string(cells));
    if (!(grading >= 1.0)) fail(ErrorCode::InvalidMeshSpec, "grading exponent must be >= 1");
    RadialMesh mesh;
    mesh.grading = grading;
    mesh.nodes.resize(static_cast<std::size_t>(cells) + 1);
    for (int j = 0; j <= cells; ++j) mesh.nodes[j] = std::pow(static_cast<double>(j) / cells, grading);
    mesh.nodes.front() = 0.0;
    mesh.nodes.back() = 1.0;
    return mesh;
}

inline RadialMesh build_uniform_mesh(double a, double b, int cells) {
    if (cells < 2) fail(ErrorCode::InvalidMeshSpec, "need N >= 2 cells");
    if (!(b > a)) fail(ErrorCode::InvalidMeshSpec, "empty interval");
    RadialMesh mesh;
    mesh.nodes.resize(static_cast<std::size_t>(cells) + 1);
    for (int j = 0; j <= cells; ++j) mesh.nodes[j] = a + (b - a) * static_cast<double>(j) / cells;
    mesh.nodes.back() = b;
    return mesh;
}

/// Nodes uniform in ln r on [delta, 1]: r_j = delta^{1 - j/N}.
inline RadialMesh build_geometric_mesh(double delta, int cells) {
    if (cells < 2) fail(ErrorCode::InvalidMeshSpec, "need N >= 2 cells");
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::DeltaOutOfRange, "delta must lie in (0,1)");
    RadialMesh mesh;
    mesh.nodes.resize(static_cast<std::size_t>(cells) + 1);
    const double log_delta = std::log(delta);
    for (int j = 0; j <= cells; ++j)
        mesh.nodes[j] = std::exp(log_delta * (1.0 - static_cast<double>(j) / cells));
    mesh.nodes.front() = delta;
    mesh.nodes.back() = 1.0;
    return mesh;
}

}  // namespace degenlab
