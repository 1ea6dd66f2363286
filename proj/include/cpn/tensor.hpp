#pragma once

#include <array>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cpn {

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense 4-d array in batch x channels x height x width layout,
/// contiguous row-major (width fastest). Carries activations, kernels
/// and gradients alike.
template <typename S>
struct Tensor {
    std::array<int, 4> dims{1, 1, 1, 1};
    std::vector<S> data;

    Tensor() = default;

    Tensor(int n, int c, int h, int w) : dims{n, c, h, w} {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw std::invalid_argument("Tensor: all extents must be >= 1, got " +
                                        shape_string(*this));
        }
        data.assign(static_cast<std::size_t>(n) * c * h * w, S(0));
    }

    int batch() const { return dims[0]; }
    int channels() const { return dims[1]; }
    int height() const { return dims[2]; }
    int width() const { return dims[3]; }

    std::size_t size() const { return data.size(); }

    S& at(int n, int c, int h, int w) {
        return data[offset(n, c, h, w)];
    }
    S at(int n, int c, int h, int w) const {
        return data[offset(n, c, h, w)];
    }

    std::size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * dims[1] + c) * dims[2] + h) * dims[3] + w;
    }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    /// Flat view of the whole buffer as an Eigen column vector.
    Eigen::Map<Vec<S>> vec() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
    Eigen::Map<const Vec<S>> vec() const {
        return {data.data(), static_cast<Eigen::Index>(data.size())};
    }

    template <typename T>
    Tensor<T> cast() const {
        Tensor<T> out(dims[0], dims[1], dims[2], dims[3]);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        return out;
    }

    static std::string shape_string(const Tensor& t) {
        std::ostringstream os;
        os << t.dims[0] << "x" << t.dims[1] << "x" << t.dims[2] << "x" << t.dims[3];
        return os.str();
    }
};

template <typename S>
std::string shape_string(const Tensor<S>& t) {
    return Tensor<S>::shape_string(t);
}

}  // namespace cpn
