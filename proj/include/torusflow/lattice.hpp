#pragma once

// Integer frequency vectors indexing Fourier modes of Z^d-periodic data.

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace torusflow {

struct LatticeVector {
    std::vector<long long> n;

    LatticeVector() = default;
    explicit LatticeVector(std::vector<long long> v) : n(std::move(v)) {}
    LatticeVector(std::initializer_list<long long> v) : n(v) {}

    int dim() const { return static_cast<int>(n.size()); }
    long long operator[](int i) const { return n[static_cast<std::size_t>(i)]; }
    long long& operator[](int i) { return n[static_cast<std::size_t>(i)]; }

    bool is_zero() const {
        for (long long v : n)
            if (v != 0) return false;
        return true;
    }

    LatticeVector negated() const {
        LatticeVector r(*this);
        for (long long& v : r.n) v = -v;
        return r;
    }

    // Canonical representative of the {n, -n} pair: first nonzero entry > 0.
    bool is_canonical() const {
        for (long long v : n) {
            if (v > 0) return true;
            if (v < 0) return false;
        }
        return true; // zero mode
    }

    long long norm_inf() const {
        long long m = 0;
        for (long long v : n) m = std::max(m, std::llabs(v));
        return m;
    }

    double norm2() const {
        double s = 0;
        for (long long v : n) s += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(s);
    }

    double dot(const std::vector<double>& x) const {
        double s = 0;
        for (std::size_t i = 0; i < n.size(); ++i) s += static_cast<double>(n[i]) * x[i];
        return s;
    }

    long long dot_int(const std::vector<long long>& k) const {
        long long s = 0;
        for (std::size_t i = 0; i < n.size(); ++i) s += n[i] * k[i];
        return s;
    }

    auto operator<=>(const LatticeVector&) const = default;

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < n.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(n[i]);
        }
        return s + ")";
    }
};

} // namespace torusflow
