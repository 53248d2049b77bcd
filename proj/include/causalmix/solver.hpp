#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "causalmix/errors.hpp"
#include "causalmix/scalar.hpp"

namespace causalmix {

// The special linear system (c*I - a*1^T) x = b with a > 0 and c = sum(a).
// The matrix has rank k-1 and its null space is spanned by a, so a solution
// becomes unique once one coordinate is pinned to zero and the rest are
// required nonnegative.
template <typename T>
struct StructuredSystem {
    std::vector<T> a;
    std::vector<T> b;
    T c{};

    StructuredSystem(std::vector<T> a_in, std::vector<T> b_in, T c_in)
        : a(std::move(a_in)), b(std::move(b_in)), c(std::move(c_in)) {
        if (a.empty() || a.size() != b.size()) {
            raise(ErrorCode::Degenerate, "system vectors must be nonempty and equal-sized");
        }
        T sum{};
        for (const T& aj : a) {
            if (!(aj > 0)) {
                raise(ErrorCode::Degenerate, "system requires strictly positive a");
            }
            sum += aj;
        }
        if constexpr (kExactScalar<T>) {
            if (sum != c) {
                raise(ErrorCode::Degenerate, "c must equal the sum of a exactly");
            }
        } else {
            if (std::fabs(to_double(sum) - to_double(c)) > 1e-9 * to_double(c)) {
                raise(ErrorCode::Degenerate, "c must equal the sum of a within 1e-9");
            }
        }
    }

    std::size_t size() const { return a.size(); }
};

template <typename T>
struct ConstrainedSolution {
    std::vector<T> x;
    std::size_t zero_index = 0;
    T residual{}; // ||Ax - b||^2 against the original system
};

namespace detail {

// Closed-form candidate solve with x[zero] pinned to 0, using the row
// transform R_i -> R_i - (a_i/a_k) R_k: row i < k-1 becomes
// c*x_i - (a_i/a_{k-1})*c*x_{k-1} = b_i - (a_i/a_{k-1})*b_{k-1}.
template <typename T>
std::vector<T> candidate_solution(const StructuredSystem<T>& sys, std::size_t zero) {
    const std::size_t k = sys.size();
    const std::size_t piv = k - 1;
    std::vector<T> x(k);
    const auto b_tilde = [&](std::size_t i) {
        return sys.b[i] - (sys.a[i] / sys.a[piv]) * sys.b[piv];
    };
    if (zero == piv) {
        x[piv] = T{};
    } else {
        // row `zero` with x[zero] = 0 determines x[k-1]
        x[piv] = -(b_tilde(zero) * sys.a[piv]) / (sys.a[zero] * sys.c);
    }
    for (std::size_t i = 0; i < piv; ++i) {
        x[i] = i == zero ? T{}
                         : (b_tilde(i) + (sys.a[i] / sys.a[piv]) * sys.c * x[piv]) / sys.c;
    }
    x[zero] = T{};
    return x;
}

template <typename T>
T system_residual(const StructuredSystem<T>& sys, const std::vector<T>& x) {
    T total{};
    for (const T& xi : x) total += xi;
    T residual{};
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const T r = sys.c * x[i] - sys.a[i] * total - sys.b[i];
        residual += r * r;
    }
    return residual;
}

} // namespace detail

// Unique nonnegative solve under the one-zero-coordinate constraint, assuming
// the system is consistent. Tries each zero index, keeps the candidate whose
// coordinates are all nonnegative and whose residual vanishes; returns the
// one with the smallest zero index. Float mode tolerates coordinates down to
// -1e-9*c (clamped to 0) and residuals up to (1e-9 * scale)^2 per row.
template <typename T>
ConstrainedSolution<T> solve_exact(const StructuredSystem<T>& sys) {
    const std::size_t k = sys.size();
    double neg_tol = 0.0;
    double res_tol = 0.0;
    if constexpr (!kExactScalar<T>) {
        double scale = to_double(sys.c);
        for (const T& bi : sys.b) scale = std::max(scale, std::fabs(to_double(bi)));
        neg_tol = 1e-9 * to_double(sys.c);
        res_tol = static_cast<double>(k) * (1e-9 * scale) * (1e-9 * scale);
    }
    for (std::size_t zero = 0; zero < k; ++zero) {
        auto x = detail::candidate_solution(sys, zero);
        bool feasible = true;
        for (auto& xi : x) {
            if (xi < 0) {
                if constexpr (kExactScalar<T>) {
                    feasible = false;
                    break;
                } else {
                    if (to_double(xi) < -neg_tol) {
                        feasible = false;
                        break;
                    }
                    xi = T{};
                }
            }
        }
        if (!feasible) continue;
        const T residual = detail::system_residual(sys, x);
        if constexpr (kExactScalar<T>) {
            if (residual != 0) continue;
        } else {
            if (to_double(residual) > res_tol) continue;
        }
        return {std::move(x), zero, residual};
    }
    raise(ErrorCode::Inconsistent, "no zero-constrained nonnegative solution exists");
}

// Finite-sample variant: every zero index yields a candidate, negative
// coordinates are clamped to 0, and the candidate with the smallest residual
// ||Ax - b||^2 wins (ties: smallest zero index).
template <typename T>
ConstrainedSolution<T> solve_scored(const StructuredSystem<T>& sys) {
    const std::size_t k = sys.size();
    std::optional<ConstrainedSolution<T>> best;
    for (std::size_t zero = 0; zero < k; ++zero) {
        auto x = detail::candidate_solution(sys, zero);
        for (auto& xi : x) {
            if (xi < 0) xi = T{};
        }
        T residual = detail::system_residual(sys, x);
        if (!best || residual < best->residual) {
            best = ConstrainedSolution<T>{std::move(x), zero, std::move(residual)};
        }
    }
    return std::move(*best);
}

} // namespace causalmix
