#include "sketchreg/linalg.hpp"

#include <algorithm>
#include <vector>

namespace sketchreg {

std::optional<Matrix> column_basis(const Matrix& m, double rel_tol, Index max_rank) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    const Index cap = std::min(max_rank < 0 ? std::min(rows, cols) : max_rank,
                               std::min(rows, cols));

    Vector residual = m.colwise().squaredNorm().transpose();
    const double ref = cols > 0 ? residual.maxCoeff() : 0.0;
    const double floor = rel_tol * rel_tol * ref;

    Matrix q(rows, std::max<Index>(cap, 0));
    std::vector<char> picked(static_cast<std::size_t>(cols), 0);
    Index rank = 0;
    if (ref == 0.0) return Matrix(rows, 0);

    for (;;) {
        Index pivot = -1;
        double best = floor;
        for (Index j = 0; j < cols; ++j) {
            if (!picked[j] && residual[j] > best) {
                best = residual[j];
                pivot = j;
            }
        }
        if (pivot < 0) break;
        if (rank == cap) return std::nullopt;
        picked[pivot] = 1;

        Vector v = m.col(pivot);
        for (int pass = 0; pass < 2; ++pass) {
            if (rank > 0) v -= q.leftCols(rank) * (q.leftCols(rank).transpose() * v);
        }
        const double nv = v.norm();
        if (nv * nv <= floor) {
            residual[pivot] = 0.0;
            continue;
        }
        q.col(rank) = v / nv;
        const Vector proj = m.transpose() * q.col(rank);
        residual -= proj.cwiseAbs2();
        residual = residual.cwiseMax(0.0);
        residual[pivot] = 0.0;
        ++rank;
    }
    return Matrix(q.leftCols(rank));
}

double lipschitz_estimate(const Matrix& a, const PowerIterationOptions& opts) {
    return power_iteration([&](const Vector& v) -> Vector { return a * v; }, a.cols(), opts);
}

double lipschitz_estimate_factor(const Matrix& m, const PowerIterationOptions& opts) {
    return power_iteration(
        [&](const Vector& v) -> Vector { return m.transpose() * (m * v); }, m.cols(), opts);
}

} // namespace sketchreg
