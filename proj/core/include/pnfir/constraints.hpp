#pragma once

#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace pnfir {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Two-sided linear inequality rows l <= Cx <= u over a stacked decision
/// vector. Rows come in two flavors kept apart for scale: dense blocks that
/// touch a contiguous variable span (several blocks may share one coefficient
/// matrix, e.g. the frequency sampling matrix reused across branches), and
/// per-variable bounds. Row order is blocks in insertion order followed by
/// bounds in insertion order.
class LinearConstraintSet {
public:
    struct Block {
        Eigen::Index col_start = 0;
        std::shared_ptr<const Eigen::MatrixXd> coeffs;
        Eigen::VectorXd lower;
        Eigen::VectorXd upper;
    };
    struct Bound {
        Eigen::Index var = 0;
        double lower = -kInf;
        double upper = kInf;
    };

    LinearConstraintSet() = default;
    explicit LinearConstraintSet(Eigen::Index num_vars) : num_vars_(num_vars) {}

    void add_block(Block block);
    /// Intersects with any bound already present on the same variable.
    void add_bound(Eigen::Index var, double lower, double upper);
    /// Concatenates rows of another set over the same decision vector.
    void append(const LinearConstraintSet& other);

    Eigen::Index num_vars() const { return num_vars_; }
    Eigen::Index num_rows() const { return block_rows_ + static_cast<Eigen::Index>(bounds_.size()); }
    Eigen::Index num_block_rows() const { return block_rows_; }
    bool empty() const { return num_rows() == 0; }

    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Bound>& bounds() const { return bounds_; }

    /// Stacked row bounds in row order.
    void row_bounds(Eigen::VectorXd& lower, Eigen::VectorXd& upper) const;
    /// out = C x
    void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
    /// out = C^T y
    void multiply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& out) const;

    struct Dense {
        Eigen::MatrixXd coeffs;
        Eigen::VectorXd lower;
        Eigen::VectorXd upper;
    };
    /// Materializes the full row matrix. Intended for small scale inspection
    /// in tests; large sets are consumed through the structured accessors.
    Dense materialize_dense() const;

private:
    Eigen::Index num_vars_ = 0;
    Eigen::Index block_rows_ = 0;
    std::vector<Block> blocks_;
    std::vector<Bound> bounds_;
};

}  // namespace pnfir
