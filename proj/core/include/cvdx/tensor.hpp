// tensor.hpp - dense row-major double tensors used throughout the pipeline
#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvdx {

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::initializer_list<int> shape, double fill = 0.0)
        : Tensor(std::vector<int>(shape), fill) {}

    static Tensor scalar(double v);
    static Tensor from(std::vector<int> shape, std::vector<double> data);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // indexed access, rank-specific
    double& at2(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double at2(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double& at3(int c, int y, int x) {
        return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at3(int c, int y, int x) const {
        return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double& at4(int c, int t, int y, int x) {
        return data_[((static_cast<size_t>(c) * shape_[1] + t) * shape_[2] + y) * shape_[3] + x];
    }
    double at4(int c, int t, int y, int x) const {
        return data_[((static_cast<size_t>(c) * shape_[1] + t) * shape_[2] + y) * shape_[3] + x];
    }

    // row pointers
    double* ptr3(int c, int y, int x) { return &at3(c, y, x); }
    const double* ptr3(int c, int y, int x) const {
        return data_.data() + (static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x;
    }
    double* ptr4(int c, int t, int y, int x) { return &at4(c, t, y, x); }
    const double* ptr4(int c, int t, int y, int x) const {
        return data_.data() +
               ((static_cast<size_t>(c) * shape_[1] + t) * shape_[2] + y) * shape_[3] + x;
    }

    void fill(double v);
    void zero() { fill(0.0); }
    Tensor reshaped(std::vector<int> new_shape) const;

    double sum() const;
    double mean() const;
    double max_abs() const;
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace cvdx
