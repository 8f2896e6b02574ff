#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "banet/error.hpp"

namespace banet {

/// Extents of a 4-axis tensor in (batch, channel, row, col) order.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const noexcept {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }

    bool spatially_equal(const Shape& o) const noexcept {
        return n == o.n && h == o.h && w == o.w;
    }

    friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << '(' << s.n << ',' << s.c << ',' << s.h << ',' << s.w << ')';
    return os.str();
}

/// Dense NCHW array, row-major with w fastest-varying.
///
/// `BasicTensor<float>` is the working type of the whole pipeline. The
/// double instantiation exists so gradient checks can run the same
/// operator code in 64-bit precision.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T(0)) : shape_(shape) {
        validate(shape_);
        data_.assign(shape_.numel(), fill);
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        validate(shape_);
        if (data_.size() != shape_.numel()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + to_string(shape_));
        }
    }

    static BasicTensor zeros(Shape s) { return BasicTensor(s, T(0)); }
    static BasicTensor full(Shape s, T v) { return BasicTensor(s, v); }

    const Shape& shape() const noexcept { return shape_; }
    int n() const noexcept { return shape_.n; }
    int c() const noexcept { return shape_.c; }
    int h() const noexcept { return shape_.h; }
    int w() const noexcept { return shape_.w; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& vec() const noexcept { return data_; }

    std::size_t index(int b, int ch, int y, int x) const noexcept {
        return ((static_cast<std::size_t>(b) * shape_.c + ch) * shape_.h + y) * shape_.w + x;
    }

    T& operator()(int b, int ch, int y, int x) noexcept { return data_[index(b, ch, y, x)]; }
    T operator()(int b, int ch, int y, int x) const noexcept { return data_[index(b, ch, y, x)]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    T operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Pointer to the first element of plane (b, ch).
    T* plane(int b, int ch) noexcept { return data_.data() + index(b, ch, 0, 0); }
    const T* plane(int b, int ch) const noexcept { return data_.data() + index(b, ch, 0, 0); }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(),
                       [](T v) { return static_cast<U>(v); });
        return BasicTensor<U>(shape_, std::move(out));
    }

    bool bitwise_equal(const BasicTensor& o) const noexcept {
        return shape_ == o.shape_ && data_ == o.data_;
    }

private:
    static void validate(const Shape& s) {
        if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
            throw ShapeError("tensor dimensions must be >= 1, got " + to_string(s));
        }
    }

    Shape shape_{};
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("max_abs_diff: shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()) + " differ");
    }
    T m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, static_cast<T>(a[i] > b[i] ? a[i] - b[i] : b[i] - a[i]));
    }
    return m;
}

} // namespace banet
