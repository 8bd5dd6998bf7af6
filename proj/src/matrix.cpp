#include "spnas/matrix.hpp"

#include "spnas/error.hpp"
#include "spnas/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace spnas {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + spnas::shape_string(rows, cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw DimensionError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            t(c, r) = (*this)(r, c);
    return t;
}

std::string Matrix::shape_string() const { return spnas::shape_string(rows_, cols_); }

std::string shape_string(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
    Matrix c(a.rows(), b.cols());
    kernels::active().gemm_nn({a.rows(), b.cols(), a.cols()}, a.data().data(), b.data().data(),
                              c.data().data());
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: " + a.shape_string() + " * (" + b.shape_string() + ")^T");
    Matrix c(a.rows(), b.rows());
    kernels::active().gemm_nt({a.rows(), b.rows(), a.cols()}, a.data().data(), b.data().data(),
                              c.data().data());
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: (" + a.shape_string() + ")^T * " + b.shape_string());
    Matrix c(a.cols(), b.cols());
    kernels::active().gemm_tn({a.cols(), b.cols(), a.rows()}, a.data().data(), b.data().data(),
                              c.data().data());
    return c;
}

} // namespace spnas
