#ifndef MTCN_TENSOR_HPP
#define MTCN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mtcn/error.hpp"

namespace mtcn {

// Dense row-major tensor. For shape [a,b,c] the flat index of (i,j,k)
// is (i*b + j)*c + k. Extents must all be >= 1.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    TensorT(std::vector<std::size_t> shape, T fill = T(0))
        : shape_(std::move(shape)) {
        std::size_t n = 1;
        for (std::size_t e : shape_) {
            if (e < 1) throw ShapeError("tensor extent must be >= 1");
            n *= e;
        }
        if (shape_.empty()) throw ShapeError("tensor shape must be nonempty");
        data_.assign(n, fill);
    }

    TensorT(std::initializer_list<std::size_t> shape, T fill = T(0))
        : TensorT(std::vector<std::size_t>(shape), fill) {}

    static TensorT from_data(std::vector<std::size_t> shape, std::vector<T> data) {
        TensorT t(std::move(shape));
        if (data.size() != t.size())
            throw ShapeError("data length does not match shape product");
        t.data_ = std::move(data);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t d) const { return shape_[d]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 2-d and 3-d accessors for the common image/weight layouts.
    T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    const T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < shape_.size(); ++d)
            f = f * shape_[d] + idx[d];
        return f;
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    bool operator==(const TensorT&) const = default;

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t d = 0; d < shape_.size(); ++d)
            os << shape_[d] << (d + 1 < shape_.size() ? "," : "");
        os << "]";
        return os.str();
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;   // training precision
using DTensor = TensorT<double>; // gradient-checking precision

template <typename T>
TensorT<T> tensor_new(std::vector<std::size_t> shape, T fill) {
    return TensorT<T>(std::move(shape), fill);
}

} // namespace mtcn

#endif
