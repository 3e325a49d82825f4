#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "prdiag/objectives.hpp"

namespace prdiag {

// Degenerate results (zero variance, zero norm) are flagged rather than
// collapsed to 0/NaN so reports can tell "uninformative" from "uncorrelated".
template <typename Scalar>
struct Correlation {
    Scalar r = Scalar(0);
    bool degenerate = false;
};

template <typename Scalar>
Correlation<Scalar> pearson(const ArrayX<Scalar>& xs, const ArrayX<Scalar>& ys,
                            Scalar epsilon = Scalar(1e-12)) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    ArrayX<Scalar> cx = xs - xs.mean();
    ArrayX<Scalar> cy = ys - ys.mean();
    Scalar n = static_cast<Scalar>(xs.size());
    Scalar var_x = cx.square().sum() / n;
    Scalar var_y = cy.square().sum() / n;
    if (var_x < epsilon || var_y < epsilon) return {Scalar(0), true};
    Scalar cov = (cx * cy).sum() / n;
    return {cov / std::sqrt(var_x * var_y), false};
}

template <typename Scalar>
Correlation<Scalar> cosine_similarity(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    Scalar na = a.norm(), nb = b.norm();
    if (na == Scalar(0) || nb == Scalar(0)) return {Scalar(0), true};
    return {a.dot(b) / (na * nb), false};
}

}  // namespace prdiag
