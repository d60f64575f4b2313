#include "pnfir/constraints.hpp"

#include <algorithm>
#include <stdexcept>

namespace pnfir {

void LinearConstraintSet::add_block(Block block) {
    if (!block.coeffs) throw std::invalid_argument("constraint block has no coefficient matrix");
    const Eigen::Index rows = block.coeffs->rows();
    const Eigen::Index width = block.coeffs->cols();
    if (block.lower.size() != rows || block.upper.size() != rows) {
        throw std::invalid_argument("constraint block bound size mismatch");
    }
    if (block.col_start < 0 || block.col_start + width > num_vars_) {
        throw std::invalid_argument("constraint block outside decision vector");
    }
    block_rows_ += rows;
    blocks_.push_back(std::move(block));
}

void LinearConstraintSet::add_bound(Eigen::Index var, double lower, double upper) {
    if (var < 0 || var >= num_vars_) throw std::invalid_argument("bound variable outside decision vector");
    if (lower > upper) throw std::invalid_argument("bound with lower > upper");
    for (auto& b : bounds_) {
        if (b.var == var) {
            b.lower = std::max(b.lower, lower);
            b.upper = std::min(b.upper, upper);
            if (b.lower > b.upper) throw std::invalid_argument("intersected bounds are empty");
            return;
        }
    }
    bounds_.push_back(Bound{var, lower, upper});
}

void LinearConstraintSet::append(const LinearConstraintSet& other) {
    if (other.num_vars_ != num_vars_) {
        throw std::invalid_argument("append: constraint sets cover different decision vectors");
    }
    for (const auto& b : other.blocks_) add_block(b);
    for (const auto& b : other.bounds_) add_bound(b.var, b.lower, b.upper);
}

void LinearConstraintSet::row_bounds(Eigen::VectorXd& lower, Eigen::VectorXd& upper) const {
    lower.resize(num_rows());
    upper.resize(num_rows());
    Eigen::Index r = 0;
    for (const auto& b : blocks_) {
        lower.segment(r, b.lower.size()) = b.lower;
        upper.segment(r, b.upper.size()) = b.upper;
        r += b.lower.size();
    }
    for (const auto& b : bounds_) {
        lower[r] = b.lower;
        upper[r] = b.upper;
        ++r;
    }
}

// Runs of adjacent blocks sharing one coefficient matrix (the frequency
// sampling rows repeated across branches) are multiplied as a single
// multi-column product so the matrix is streamed through memory once.
void LinearConstraintSet::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    if (x.size() != num_vars_) throw std::invalid_argument("multiply: size mismatch");
    out.resize(num_rows());
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < blocks_.size();) {
        const Block& b0 = blocks_[i];
        const Eigen::Index rows = b0.coeffs->rows();
        const Eigen::Index cols = b0.coeffs->cols();
        std::size_t j = i + 1;
        while (j < blocks_.size() && blocks_[j].coeffs == b0.coeffs) ++j;
        const Eigen::Index k = static_cast<Eigen::Index>(j - i);
        if (k == 1) {
            out.segment(r, rows).noalias() = (*b0.coeffs) * x.segment(b0.col_start, cols);
            r += rows;
        } else {
            Eigen::MatrixXd rhs(cols, k);
            for (Eigen::Index c = 0; c < k; ++c) {
                rhs.col(c) = x.segment(blocks_[i + static_cast<std::size_t>(c)].col_start, cols);
            }
            const Eigen::MatrixXd prod = (*b0.coeffs) * rhs;
            for (Eigen::Index c = 0; c < k; ++c) {
                out.segment(r, rows) = prod.col(c);
                r += rows;
            }
        }
        i = j;
    }
    for (const auto& b : bounds_) out[r++] = x[b.var];
}

void LinearConstraintSet::multiply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
    if (y.size() != num_rows()) throw std::invalid_argument("multiply_transpose: size mismatch");
    out = Eigen::VectorXd::Zero(num_vars_);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < blocks_.size();) {
        const Block& b0 = blocks_[i];
        const Eigen::Index rows = b0.coeffs->rows();
        const Eigen::Index cols = b0.coeffs->cols();
        std::size_t j = i + 1;
        while (j < blocks_.size() && blocks_[j].coeffs == b0.coeffs) ++j;
        const Eigen::Index k = static_cast<Eigen::Index>(j - i);
        if (k == 1) {
            out.segment(b0.col_start, cols).noalias() += b0.coeffs->transpose() * y.segment(r, rows);
            r += rows;
        } else {
            Eigen::MatrixXd lhs(rows, k);
            for (Eigen::Index c = 0; c < k; ++c) {
                lhs.col(c) = y.segment(r + c * rows, rows);
            }
            const Eigen::MatrixXd prod = b0.coeffs->transpose() * lhs;
            for (Eigen::Index c = 0; c < k; ++c) {
                out.segment(blocks_[i + static_cast<std::size_t>(c)].col_start, cols) += prod.col(c);
            }
            r += rows * k;
        }
        i = j;
    }
    for (const auto& b : bounds_) out[b.var] += y[r++];
}

LinearConstraintSet::Dense LinearConstraintSet::materialize_dense() const {
    Dense d;
    d.coeffs = Eigen::MatrixXd::Zero(num_rows(), num_vars_);
    row_bounds(d.lower, d.upper);
    Eigen::Index r = 0;
    for (const auto& b : blocks_) {
        d.coeffs.block(r, b.col_start, b.coeffs->rows(), b.coeffs->cols()) = *b.coeffs;
        r += b.coeffs->rows();
    }
    for (const auto& b : bounds_) d.coeffs(r++, b.var) = 1.0;
    return d;
}

}  // namespace pnfir
