#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/rng.hpp"

namespace i2c {

// Class-specific decaying update rate eta = exp(-alpha * t), in (0, 1].
inline double update_rate(std::uint64_t t, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("update_rate alpha must lie in (0,1), got " + std::to_string(alpha));
    return std::exp(-alpha * static_cast<double>(t));
}

// Global class-center memory W in R^{Y x D} with per-class update counters.
// Each update moves a center toward the batch representation with the
// class-specific decaying rate eta = exp(-alpha * t); t starts at 0, so the
// first update replaces the random initialization outright (eta = 1).
class CenterBank {
public:
    CenterBank(int num_classes, int dim, double alpha)
        : y_(num_classes), d_(dim), alpha_(alpha), counters_(static_cast<std::size_t>(num_classes), 0),
          centers_(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(dim), 0.0) {
        if (num_classes < 1 || dim < 1)
            throw ConfigError("bank dims must be positive, got Y=" + std::to_string(num_classes) +
                              " D=" + std::to_string(dim));
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ConfigError("bank alpha must lie in (0,1), got " + std::to_string(alpha));
    }

    int num_classes() const { return y_; }
    int dim() const { return d_; }
    double alpha() const { return alpha_; }
    std::uint64_t counter(int y) const { return counters_[check_class(y)]; }

    const double* center(int y) const {
        return centers_.data() + check_class(y) * static_cast<std::size_t>(d_);
    }

    std::vector<double> center_copy(int y) const {
        const double* c = center(y);
        return std::vector<double>(c, c + d_);
    }

    void update(int y, const std::vector<double>& rep) {
        const std::size_t row = check_class(y);
        if (static_cast<int>(rep.size()) != d_)
            throw InputError("bank update: representation size " + std::to_string(rep.size()) +
                             " != D " + std::to_string(d_));
        const double eta = update_rate(counters_[row], alpha_);
        double* c = centers_.data() + row * static_cast<std::size_t>(d_);
        for (int i = 0; i < d_; ++i)
            c[i] = (1.0 - eta) * c[i] + eta * rep[static_cast<std::size_t>(i)];
        counters_[row] += 1;
    }

    // Checkpoint section layout (all little-endian):
    //   u32 Y, u32 D, f64 alpha, then per class: D * f32 center, u64 counter.
    std::vector<std::uint8_t> snapshot() const {
        std::vector<std::uint8_t> out;
        out.reserve(8 + 8 + static_cast<std::size_t>(y_) * (4u * d_ + 8u));
        put_u32(out, static_cast<std::uint32_t>(y_));
        put_u32(out, static_cast<std::uint32_t>(d_));
        std::uint64_t abits;
        std::memcpy(&abits, &alpha_, 8);
        put_u64(out, abits);
        for (int y = 0; y < y_; ++y) {
            const double* c = center(y);
            for (int i = 0; i < d_; ++i) {
                const float f = static_cast<float>(c[i]);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                put_u32(out, bits);
            }
            put_u64(out, counters_[static_cast<std::size_t>(y)]);
        }
        return out;
    }

    // Parses a snapshot; throws FormatError (with the byte offset) on any
    // truncation or inconsistency, constructing no partial bank.
    static CenterBank restore(const std::vector<std::uint8_t>& bytes) {
        std::size_t off = 0;
        const std::uint32_t y = take_u32(bytes, off);
        const std::uint32_t d = take_u32(bytes, off);
        std::uint64_t abits = take_u64(bytes, off);
        double alpha;
        std::memcpy(&alpha, &abits, 8);
        if (y == 0 || d == 0 || !(alpha > 0.0 && alpha < 1.0))
            throw FormatError("bank snapshot header invalid at offset 0");
        CenterBank bank(static_cast<int>(y), static_cast<int>(d), alpha);
        for (std::uint32_t row = 0; row < y; ++row) {
            double* c = bank.centers_.data() + static_cast<std::size_t>(row) * d;
            for (std::uint32_t i = 0; i < d; ++i) {
                const std::uint32_t bits = take_u32(bytes, off);
                float f;
                std::memcpy(&f, &bits, 4);
                c[i] = static_cast<double>(f);
            }
            bank.counters_[row] = take_u64(bytes, off);
        }
        if (off != bytes.size())
            throw FormatError("bank snapshot has " + std::to_string(bytes.size() - off) +
                              " trailing bytes at offset " + std::to_string(off));
        return bank;
    }

private:
    std::size_t check_class(int y) const {
        if (y < 0 || y >= y_)
            throw InputError("unknown class id " + std::to_string(y) + " (bank holds " +
                             std::to_string(y_) + ")");
        return static_cast<std::size_t>(y);
    }

    static void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    static void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    static std::uint32_t take_u32(const std::vector<std::uint8_t>& b, std::size_t& off) {
        if (off + 4 > b.size())
            throw FormatError("bank snapshot truncated at offset " + std::to_string(off));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
        off += 4;
        return v;
    }
    static std::uint64_t take_u64(const std::vector<std::uint8_t>& b, std::size_t& off) {
        if (off + 8 > b.size())
            throw FormatError("bank snapshot truncated at offset " + std::to_string(off));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
        off += 8;
        return v;
    }

    int y_;
    int d_;
    double alpha_;
    std::vector<std::uint64_t> counters_;
    std::vector<double> centers_;

    friend CenterBank init_bank(int, int, double, std::uint64_t);
};

// Centers start uniform in [-0.01, 0.01]; the first per-class update
// overwrites them (eta at t=0 is exactly 1).
inline CenterBank init_bank(int num_classes, int dim, double alpha, std::uint64_t seed) {
    CenterBank bank(num_classes, dim, alpha);
    Rng rng = Rng::derive(seed, {0x42414eull});  // "BAN"
    for (double& v : bank.centers_) v = rng.uniform(-0.01, 0.01);
    return bank;
}

}  // namespace i2c
