#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace cola::linalg {

// Symmetric vectorization with sqrt(2)-scaled off-diagonals, so that
// svec(A).dot(svec(B)) == trace(A*B) for symmetric A, B.
//
// Ordering is column-major over the lower triangle:
//   (0,0), (1,0), ..., (p-1,0), (1,1), (2,1), ..., (p-1,p-1)
// svec index of entry (i,j), i >= j:  j*p - j*(j-1)/2 + (i-j).

inline constexpr double kSqrt2 = 1.4142135623730951;

inline int svec_dim(int order) { return order * (order + 1) / 2; }

inline int svec_index(int order, int i, int j) {
    if (i < j) std::swap(i, j);
    return j * order - j * (j - 1) / 2 + (i - j);
}

inline Eigen::VectorXd svec(const Eigen::MatrixXd& a) {
    const int p = static_cast<int>(a.rows());
    Eigen::VectorXd v(svec_dim(p));
    int k = 0;
    for (int j = 0; j < p; ++j) {
        v[k++] = a(j, j);
        for (int i = j + 1; i < p; ++i) v[k++] = kSqrt2 * a(i, j);
    }
    return v;
}

inline Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int order) {
    Eigen::MatrixXd a(order, order);
    int k = 0;
    for (int j = 0; j < order; ++j) {
        a(j, j) = v[k++];
        for (int i = j + 1; i < order; ++i) {
            const double x = v[k++] / kSqrt2;
            a(i, j) = x;
            a(j, i) = x;
        }
    }
    return a;
}

// Matrix of the linear map svec(X) -> svec(R * X * R^T), i.e. the symmetric
// Kronecker-style congruence operator in svec coordinates.
inline Eigen::MatrixXd congruence_operator(const Eigen::MatrixXd& r) {
    const int p = static_cast<int>(r.rows());
    const int d = svec_dim(p);
    Eigen::MatrixXd op(d, d);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(p, p);
    int col = 0;
    for (int j = 0; j < p; ++j) {
        for (int i = j; i < p; ++i) {
            const double w = (i == j) ? 1.0 : 1.0 / kSqrt2;
            basis(i, j) = w;
            basis(j, i) = w;
            op.col(col++) = svec(r * basis * r.transpose());
            basis(i, j) = 0.0;
            basis(j, i) = 0.0;
        }
    }
    return op;
}

} // namespace cola::linalg
