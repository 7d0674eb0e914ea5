#pragma once

#include "msdybo/common.hpp"

#include <memory>
#include <span>
#include <vector>

namespace msdybo {

using MultiIndex = std::vector<int>;
using RowVector = Eigen::RowVectorXd;

/// Quadrature rule for a probability density on the real line (weights sum to 1).
struct QuadratureRule {
    Vector nodes;
    Vector weights;
};

/// One-dimensional family of polynomials orthonormal under a density ρ.
class UnivariateFamily {
public:
    virtual ~UnivariateFamily() = default;
    /// Values H_0(x) .. H_degree(x).
    [[nodiscard]] virtual Vector evaluate(int degree, double x) const = 0;
    /// Gauss rule with `points` nodes for ρ (exact up to degree 2*points-1).
    [[nodiscard]] virtual QuadratureRule gauss_rule(int points) const = 0;
};

/// Legendre polynomials normalised for the uniform density 1/2 on [-1, 1]: H_n = sqrt(2n+1) P_n.
class LegendreFamily final : public UnivariateFamily {
public:
    [[nodiscard]] Vector evaluate(int degree, double x) const override;
    [[nodiscard]] QuadratureRule gauss_rule(int points) const override;
};

/// Nonzero multi-indices α ∈ N^r with |α| ≤ p in graded-lex order:
/// total degree ascending, then lexicographically descending, so the
/// degree-one block reads e_1, e_2, ..., e_r.
[[nodiscard]] std::vector<MultiIndex> multi_index_set(int r, int p);

/// E[ξ_i H] and E[ξ_i Hᵀ H] for i = 1..r (stored 0-based).
struct MomentTensors {
    std::vector<RowVector> first;   ///< first[i](α) = E[ξ_i H_α]
    std::vector<Matrix> second;     ///< second[i](α, β) = E[ξ_i H_α H_β]
};

/// Total-degree gPC space for r i.i.d. uniform variables on [-1, 1].
///
/// The zero multi-index is excluded, so E[H_α] = 0 for every basis function.
/// Moment tensors are computed once at construction; the object is immutable.
class GpcSpace {
public:
    GpcSpace(int r, int p);

    [[nodiscard]] int r() const { return r_; }
    [[nodiscard]] int p() const { return p_; }
    [[nodiscard]] Index size() const { return static_cast<Index>(indices_.size()); }
    [[nodiscard]] const std::vector<MultiIndex>& indices() const { return indices_; }
    [[nodiscard]] const UnivariateFamily& family() const { return *family_; }

    /// Row vector H(ξ) ∈ R^{1×N_p}.
    [[nodiscard]] RowVector evaluate(std::span<const double> xi) const;

    [[nodiscard]] const MomentTensors& moments() const { return moments_; }
    [[nodiscard]] const RowVector& first_moment(int i) const { return moments_.first[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const Matrix& second_moment(int i) const { return moments_.second[static_cast<std::size_t>(i)]; }

    /// Position of a multi-index in the ordered set, or -1.
    [[nodiscard]] Index position(const MultiIndex& alpha) const;

private:
    int r_;
    int p_;
    std::vector<MultiIndex> indices_;
    std::shared_ptr<const UnivariateFamily> family_;
    MomentTensors moments_;
};

/// Moment tensors of a space, by tensorised Gauss quadrature of the univariate family.
[[nodiscard]] MomentTensors moment_tensors(const std::vector<MultiIndex>& indices, int r, int p,
                                           const UnivariateFamily& family);

/// N_p = (p+r)!/(p! r!) − 1.
[[nodiscard]] Index gpc_dimension(int r, int p);

}  // namespace msdybo
