#include "msdybo/gpc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <iostream>
#include <utility>

namespace msdybo {

Vector LegendreFamily::evaluate(int degree, double x) const
{
    Vector h(degree + 1);
    double p_prev = 1.0;
    double p_cur = x;
    h[0] = 1.0;
    if (degree >= 1) h[1] = std::sqrt(3.0) * x;
    for (int n = 1; n < degree; ++n) {
        const double p_next = ((2.0 * n + 1.0) * x * p_cur - n * p_prev) / (n + 1.0);
        p_prev = p_cur;
        p_cur = p_next;
        h[n + 1] = std::sqrt(2.0 * (n + 1) + 1.0) * p_cur;
    }
    return h;
}

namespace {

/// (P_n(x), P_{n-1}(x)) for the unnormalised Legendre polynomials, n >= 1.
std::pair<double, double> legendre_pair(int n, double x)
{
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return {p1, p0};
}

}  // namespace

QuadratureRule LegendreFamily::gauss_rule(int points) const
{
    require(points >= 1, "gauss_rule: need at least one point");
    // Golub-Welsch on the Jacobi matrix of the Legendre recurrence
    Matrix jacobi = Matrix::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
    QuadratureRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(points);
    // Newton polish of the roots of P_n, then w = 1 / ((1 - x^2) P_n'(x)^2) for the density 1/2
    for (int k = 0; k < points; ++k) {
        double x = rule.nodes[k];
        for (int it = 0; it < 2; ++it) {
            const auto [pn, pm] = legendre_pair(points, x);
            const double dp = points * (x * pn - pm) / (x * x - 1.0);
            x -= pn / dp;
        }
        const auto [pn, pm] = legendre_pair(points, x);
        const double dp = points * (x * pn - pm) / (x * x - 1.0);
        rule.nodes[k] = x;
        rule.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

Index gpc_dimension(int r, int p)
{
    require(r >= 1 && p >= 1, "gpc_dimension: r and p must be positive");
    // C(p + r, r) − 1 evaluated incrementally to stay exact
    Index c = 1;
    for (int k = 1; k <= r; ++k) {
        c = c * (p + k) / k;
    }
    return c - 1;
}

std::vector<MultiIndex> multi_index_set(int r, int p)
{
    require(r >= 1, "multi_index_set: r must be >= 1, got " + std::to_string(r));
    require(p >= 1, "multi_index_set: p must be >= 1, got " + std::to_string(p));
    std::vector<MultiIndex> out;
    for (int degree = 1; degree <= p; ++degree) {
        MultiIndex alpha(static_cast<std::size_t>(r), 0);
        // lexicographically descending enumeration of compositions of `degree`
        std::function<void(int, int)> fill = [&](int pos, int remaining) {
            if (pos == r - 1) {
                alpha[static_cast<std::size_t>(pos)] = remaining;
                out.push_back(alpha);
                return;
            }
            for (int v = remaining; v >= 0; --v) {
                alpha[static_cast<std::size_t>(pos)] = v;
                fill(pos + 1, remaining - v);
            }
        };
        fill(0, degree);
    }
    return out;
}

MomentTensors moment_tensors(const std::vector<MultiIndex>& indices, int r, int p, const UnivariateFamily& family)
{
    // univariate tables E[H_a H_b] and E[x H_a H_b], a, b ≤ p
    const QuadratureRule rule = family.gauss_rule(p + 2);
    Matrix m0 = Matrix::Zero(p + 1, p + 1);
    Matrix m1 = Matrix::Zero(p + 1, p + 1);
    for (Index q = 0; q < rule.nodes.size(); ++q) {
        const Vector h = family.evaluate(p, rule.nodes[q]);
        m0 += rule.weights[q] * h * h.transpose();
        m1 += rule.weights[q] * rule.nodes[q] * h * h.transpose();
    }
    m0 = 0.5 * (m0 + m0.transpose());
    m1 = 0.5 * (m1 + m1.transpose());

    const Index n = static_cast<Index>(indices.size());
    MomentTensors t;
    t.first.assign(static_cast<std::size_t>(r), RowVector::Zero(n));
    t.second.assign(static_cast<std::size_t>(r), Matrix::Zero(n, n));
    for (int i = 0; i < r; ++i) {
        auto& first = t.first[static_cast<std::size_t>(i)];
        auto& second = t.second[static_cast<std::size_t>(i)];
        for (Index a = 0; a < n; ++a) {
            const auto& alpha = indices[static_cast<std::size_t>(a)];
            double v = m1(alpha[static_cast<std::size_t>(i)], 0);
            for (int k = 0; k < r; ++k) {
                if (k != i) v *= m0(alpha[static_cast<std::size_t>(k)], 0);
            }
            first[a] = v;
            for (Index b = 0; b <= a; ++b) {
                const auto& beta = indices[static_cast<std::size_t>(b)];
                double w = m1(alpha[static_cast<std::size_t>(i)], beta[static_cast<std::size_t>(i)]);
                for (int k = 0; k < r && w != 0.0; ++k) {
                    if (k != i) w *= m0(alpha[static_cast<std::size_t>(k)], beta[static_cast<std::size_t>(k)]);
                }
                second(a, b) = w;
                second(b, a) = w;
            }
        }
    }
    return t;
}

GpcSpace::GpcSpace(int r, int p)
    : r_(r), p_(p), indices_(multi_index_set(r, p)), family_(std::make_shared<LegendreFamily>())
{
    assert(static_cast<Index>(indices_.size()) == gpc_dimension(r, p));
    moments_ = moment_tensors(indices_, r_, p_, *family_);
}

RowVector GpcSpace::evaluate(std::span<const double> xi) const
{
    require(static_cast<int>(xi.size()) == r_, "GpcSpace::evaluate: expected " + std::to_string(r_) + " variables");
#ifndef NDEBUG
    for (const double x : xi) {
        if (x < -1.0 || x > 1.0) std::cerr << "warning: gPC evaluation point " << x << " outside [-1, 1]\n";
    }
#endif
    std::vector<Vector> uni;
    uni.reserve(xi.size());
    for (const double x : xi) uni.push_back(family_->evaluate(p_, x));
    RowVector h(size());
    for (Index a = 0; a < size(); ++a) {
        double v = 1.0;
        const auto& alpha = indices_[static_cast<std::size_t>(a)];
        for (int k = 0; k < r_; ++k) v *= uni[static_cast<std::size_t>(k)][alpha[static_cast<std::size_t>(k)]];
        h[a] = v;
    }
    return h;
}

Index GpcSpace::position(const MultiIndex& alpha) const
{
    const auto it = std::find(indices_.begin(), indices_.end(), alpha);
    return it == indices_.end() ? -1 : static_cast<Index>(it - indices_.begin());
}

}  // namespace msdybo
