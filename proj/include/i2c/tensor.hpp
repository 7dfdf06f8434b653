#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "i2c/errors.hpp"

namespace i2c {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (int e : s) {
        if (e <= 0) throw InputError("non-positive extent in shape " + shape_str(s));
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

// Dense N-d array of doubles, row-major, rank 1-4, with an optional gradient
// slot of identical shape. The single value type of the engine.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // same size as data iff requires_grad

    Tensor() = default;

    Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
        check_rank();
        if (shape_numel(shape) != data.size())
            throw InputError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    static Tensor zeros(Shape s) {
        Tensor t;
        t.shape = std::move(s);
        t.check_rank();
        t.data.assign(shape_numel(t.shape), 0.0);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }

    void set_requires_grad(bool on) {
        requires_grad = on;
        if (on)
            grad.assign(data.size(), 0.0);
        else
            grad.clear();
    }

    void zero_grad() {
        if (requires_grad) grad.assign(data.size(), 0.0);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Row-major flat offsets.
    std::size_t at2(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape[1]) +
               static_cast<std::size_t>(j);
    }
    std::size_t at3(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape[1]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(shape[2]) +
               static_cast<std::size_t>(x);
    }
    std::size_t at4(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * static_cast<std::size_t>(shape[1]) +
                 static_cast<std::size_t>(c)) *
                    static_cast<std::size_t>(shape[2]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(shape[3]) +
               static_cast<std::size_t>(x);
    }

private:
    void check_rank() const {
        if (shape.empty() || shape.size() > 4)
            throw InputError("tensor rank must be 1-4, got shape " + shape_str(shape));
    }
};

inline bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace i2c
