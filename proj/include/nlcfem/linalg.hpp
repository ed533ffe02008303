#ifndef NLCFEM_LINALG_HPP
#define NLCFEM_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <vector>

namespace nlcfem {

using Vector = Eigen::VectorXd;
/// Row-major compressed storage (row offsets, column indices, values).
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// Column-major variant needed by direct factorizations.
using SparseMatCol = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Triplet = Eigen::Triplet<double>;

struct SolverError : std::runtime_error {
    SolverError(const std::string& msg, double residual_, long iterations_)
        : std::runtime_error(msg + " (residual " + std::to_string(residual_) + " after " +
                             std::to_string(iterations_) + " iterations)"),
          residual(residual_),
          iterations(iterations_) {}
    double residual;
    long iterations;
};

struct NumericalError : std::runtime_error {
    NumericalError(const std::string& msg, int element_)
        : std::runtime_error(msg + " (element " + std::to_string(element_) + ")"),
          element(element_) {}
    int element;
};

struct SolveResult {
    Vector x;
    long iterations = 0;
    double residual = 0.0;
};

/// Conjugate gradients with diagonal (Jacobi) preconditioning for symmetric
/// positive definite systems. Relative residual tolerance, iteration cap
/// 10 * n unless overridden. Non-convergence raises SolverError.
inline SolveResult sparse_solve_spd(const SparseMat& A, const Vector& b, double tol = 1e-10,
                                    long max_iter = -1) {
    Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(max_iter > 0 ? max_iter : 10 * A.rows());
    cg.compute(A);
    SolveResult r;
    r.x = cg.solve(b);
    r.iterations = cg.iterations();
    r.residual = cg.error();
    if (cg.info() != Eigen::Success)
        throw SolverError("sparse_solve_spd: conjugate gradients did not converge", r.residual,
                          r.iterations);
    return r;
}

/// General sparse solve: dense LU with full pivoting for small systems,
/// BiCGStab with diagonal preconditioning otherwise. Singular or
/// non-convergent systems raise SolverError.
inline SolveResult sparse_solve_general(const SparseMat& A, const Vector& b, double tol = 1e-10,
                                        long max_iter = -1) {
    constexpr int kDenseCutoff = 64;
    SolveResult r;
    if (A.rows() <= kDenseCutoff) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu((Eigen::MatrixXd(A)));
        if (!lu.isInvertible())
            throw SolverError("sparse_solve_general: matrix is singular", 0.0, 0);
        r.x = lu.solve(b);
        const double bnorm = b.norm();
        r.residual = bnorm > 0.0 ? (A * r.x - b).norm() / bnorm : 0.0;
        r.iterations = 0;
        return r;
    }
    Eigen::BiCGSTAB<SparseMat, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setTolerance(tol);
    solver.setMaxIterations(max_iter > 0 ? max_iter : 10 * A.rows());
    solver.compute(A);
    r.x = solver.solve(b);
    r.iterations = solver.iterations();
    r.residual = solver.error();
    if (solver.info() != Eigen::Success)
        throw SolverError("sparse_solve_general: BiCGStab did not converge", r.residual,
                          r.iterations);
    return r;
}

/// Per-element small dense blocks (at most 3x3, kept on the stack).
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// Block-diagonal matrix with one square block per mesh element, used for
/// operators on piecewise-constant vector fields.
class BlockDiagMatrix {
  public:
    BlockDiagMatrix(int num_blocks, int block_dim)
        : dim_(block_dim), blocks_(num_blocks, SmallMat::Zero(block_dim, block_dim)) {}

    int block_dim() const { return dim_; }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    long rows() const { return static_cast<long>(blocks_.size()) * dim_; }

    SmallMat& block(int i) { return blocks_[i]; }
    const SmallMat& block(int i) const { return blocks_[i]; }

    Vector apply(const Vector& x) const {
        Vector y(rows());
        for (int i = 0; i < num_blocks(); ++i)
            y.segment(static_cast<long>(i) * dim_, dim_) =
                blocks_[i] * x.segment(static_cast<long>(i) * dim_, dim_);
        return y;
    }

    /// Dense expansion, for oracle comparisons on tiny meshes.
    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows(), rows());
        for (int i = 0; i < num_blocks(); ++i)
            D.block(static_cast<long>(i) * dim_, static_cast<long>(i) * dim_, dim_, dim_) =
                blocks_[i];
        return D;
    }

  private:
    int dim_;
    std::vector<SmallMat> blocks_;
};

/// Blockwise inverse. A singular block raises NumericalError carrying the
/// element index.
inline BlockDiagMatrix invert_blockdiag(const BlockDiagMatrix& E) {
    BlockDiagMatrix inv(E.num_blocks(), E.block_dim());
    for (int i = 0; i < E.num_blocks(); ++i) {
        Eigen::FullPivLU<SmallMat> lu(E.block(i));
        if (!lu.isInvertible())
            throw NumericalError("invert_blockdiag: singular block", i);
        inv.block(i) = lu.inverse();
    }
    return inv;
}

} // namespace nlcfem

#endif
