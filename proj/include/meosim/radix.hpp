#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace meosim {

inline long long factorial(int n) {
    long long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// One-line permutation over {0,...,n-1}: map[i] is the image of position i.
struct Permutation {
    std::vector<int> map;

    int size() const { return static_cast<int>(map.size()); }

    static Permutation identity(int n) {
        Permutation p;
        p.map.resize(n);
        std::iota(p.map.begin(), p.map.end(), 0);
        return p;
    }

    bool is_valid() const {
        std::vector<char> seen(map.size(), 0);
        for (int v : map) {
            if (v < 0 || v >= size() || seen[v]) return false;
            seen[v] = 1;
        }
        return true;
    }

    bool operator==(const Permutation& o) const { return map == o.map; }
};

// Mixed-radix code C[1..n]: digits[i-1] counts the elements smaller than i
// that sit to the left of i in the one-line list. digits[0] is always 0 and
// is kept as an explicit slot.
struct RadixCode {
    std::vector<int> digits;

    int size() const { return static_cast<int>(digits.size()); }

    bool is_valid() const {
        for (int i = 0; i < size(); ++i)
            if (digits[i] < 0 || digits[i] > i) return false;
        return true;
    }

    // rendering used in logs and fixtures, e.g. "002143"
    std::string to_string() const {
        std::string s;
        for (int d : digits) s += static_cast<char>('0' + d);
        return s;
    }

    static RadixCode from_string(const std::string& s) {
        RadixCode c;
        for (char ch : s) {
            if (ch < '0' || ch > '9') throw std::invalid_argument("radix code: bad digit");
            c.digits.push_back(ch - '0');
        }
        if (!c.is_valid()) throw std::invalid_argument("radix code: digit out of bounds");
        return c;
    }

    bool operator==(const RadixCode& o) const { return digits == o.digits; }
    bool operator<(const RadixCode& o) const { return digits < o.digits; }
};

inline RadixCode radix_encode(const Permutation& sigma) {
    if (!sigma.is_valid()) throw std::invalid_argument("radix_encode: not a permutation");
    const int n = sigma.size();
    RadixCode code;
    code.digits.assign(n, 0);
    for (int value = 0; value < n; ++value) {
        int pos = 0;
        while (sigma.map[pos] != value) ++pos;
        int smaller_left = 0;
        for (int q = 0; q < pos; ++q)
            if (sigma.map[q] < value) ++smaller_left;
        code.digits[value] = smaller_left;
    }
    return code;
}

// Inverse of radix_encode by direct construction: inserting values in
// increasing order, value v must end up with exactly digits[v] elements to
// its left (all current entries are smaller), i.e. at index digits[v].
inline Permutation radix_decode(const RadixCode& code) {
    if (!code.is_valid()) throw std::invalid_argument("radix_decode: digit out of bounds");
    const int n = code.size();
    Permutation p;
    p.map.reserve(n);
    for (int value = 0; value < n; ++value)
        p.map.insert(p.map.begin() + code.digits[value], value);
    return p;
}

// 1-based rank under the mixed-radix ordering: increasing value of the digit
// string with C[n] least significant. The all-zero code has rank 1.
inline long long radix_index(const RadixCode& code) {
    if (!code.is_valid()) throw std::invalid_argument("radix_index: digit out of bounds");
    const int n = code.size();
    long long rank = 0;
    long long weight = 1;  // n!/i! for i = n down to 2
    for (int i = n; i >= 2; --i) {
        rank += code.digits[i - 1] * weight;
        weight *= i;
    }
    return rank + 1;
}

// Action of a single P_i block for digit value j: the element at 0-based
// position i-1 of the list moves down to position j, shifting the entries in
// between up by one. Digit j >= i-1 selects the identity.
inline void hall_block_apply(std::vector<int>& list, int i, int j) {
    if (j <= i - 2)
        std::rotate(list.begin() + j, list.begin() + (i - 1), list.begin() + i);
}

inline void hall_block_unapply(std::vector<int>& list, int i, int j) {
    if (j <= i - 2)
        std::rotate(list.begin() + j, list.begin() + j + 1, list.begin() + i);
}

// Classical reference of the controlled P_2..P_n cascade applied to the
// list (1,...,n), 0-indexed here. Must agree with radix_decode everywhere.
inline Permutation hall_apply(const RadixCode& code) {
    if (!code.is_valid()) throw std::invalid_argument("hall_apply: digit out of bounds");
    const int n = code.size();
    Permutation p = Permutation::identity(n);
    for (int i = 2; i <= n; ++i)
        hall_block_apply(p.map, i, code.digits[i - 1]);
    return p;
}

// Full cascade trace: the list before any block and after each P_i
// (including the no-op steps), for fixtures against the worked example.
inline std::vector<std::vector<int>> hall_apply_trace(const RadixCode& code) {
    if (!code.is_valid()) throw std::invalid_argument("hall_apply_trace: digit out of bounds");
    const int n = code.size();
    std::vector<std::vector<int>> trace;
    std::vector<int> list(n);
    std::iota(list.begin(), list.end(), 0);
    trace.push_back(list);
    for (int i = 2; i <= n; ++i) {
        hall_block_apply(list, i, code.digits[i - 1]);
        trace.push_back(list);
    }
    return trace;
}

// Enumerates all valid codes for S_n in radix order (odometer with C[n]
// fastest).
template <typename F>
void for_each_code(int n, F&& f) {
    RadixCode code;
    code.digits.assign(n, 0);
    while (true) {
        f(const_cast<const RadixCode&>(code));
        int i = n - 1;
        while (i >= 0 && code.digits[i] == i) {
            code.digits[i] = 0;
            --i;
        }
        if (i < 0) return;
        ++code.digits[i];
    }
}

}  // namespace meosim
