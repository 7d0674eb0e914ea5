#include "msdybo/gpc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace msdybo;

namespace {

// Monomial coefficients of sqrt(2n+1) P_n from the three-term recurrence.
std::vector<std::vector<double>> legendre_coefficients(int degree)
{
    std::vector<std::vector<double>> p(static_cast<std::size_t>(degree + 1));
    p[0] = {1.0};
    if (degree >= 1) p[1] = {0.0, 1.0};
    for (int n = 1; n < degree; ++n) {
        std::vector<double> next(static_cast<std::size_t>(n + 2), 0.0);
        for (int k = 0; k <= n; ++k) next[static_cast<std::size_t>(k + 1)] += (2.0 * n + 1) / (n + 1) * p[n][k];
        for (int k = 0; k < n; ++k) next[static_cast<std::size_t>(k)] -= static_cast<double>(n) / (n + 1) * p[n - 1][k];
        p[static_cast<std::size_t>(n + 1)] = next;
    }
    for (int n = 0; n <= degree; ++n) {
        for (double& c : p[static_cast<std::size_t>(n)]) c *= std::sqrt(2.0 * n + 1);
    }
    return p;
}

// E[ξ^e H_a H_b] for ξ uniform on [-1, 1], via E[ξ^k] = 1/(k+1) for even k.
double univariate(int e, int a, int b, const std::vector<std::vector<double>>& h)
{
    double s = 0.0;
    for (std::size_t i = 0; i < h[a].size(); ++i) {
        for (std::size_t j = 0; j < h[b].size(); ++j) {
            const std::size_t k = i + j + static_cast<std::size_t>(e);
            if (k % 2 == 0) s += h[a][i] * h[b][j] / static_cast<double>(k + 1);
        }
    }
    return s;
}

double oracle_second(const MultiIndex& a, const MultiIndex& b, int i, const std::vector<std::vector<double>>& h)
{
    double v = 1.0;
    for (std::size_t j = 0; j < a.size(); ++j) v *= univariate(static_cast<int>(j) == i ? 1 : 0, a[j], b[j], h);
    return v;
}

}  // namespace

TEST(Gpc, Dimension)
{
    EXPECT_EQ(gpc_dimension(1, 2), 2);
    EXPECT_EQ(gpc_dimension(3, 2), 9);
    EXPECT_EQ(gpc_dimension(4, 2), 14);
    EXPECT_EQ(gpc_dimension(3, 3), 19);
    EXPECT_EQ(GpcSpace(3, 2).size(), 9);
}

TEST(Gpc, IndexOrder)
{
    const auto idx = multi_index_set(3, 2);
    ASSERT_EQ(idx.size(), 9u);
    EXPECT_EQ(idx[0], (MultiIndex{1, 0, 0}));
    EXPECT_EQ(idx[1], (MultiIndex{0, 1, 0}));
    EXPECT_EQ(idx[2], (MultiIndex{0, 0, 1}));
    EXPECT_EQ(idx[3], (MultiIndex{2, 0, 0}));
    EXPECT_EQ(idx[4], (MultiIndex{1, 1, 0}));
    EXPECT_EQ(idx[8], (MultiIndex{0, 0, 2}));
    const GpcSpace s(3, 2);
    EXPECT_EQ(s.position({0, 1, 1}), 7);
    EXPECT_EQ(s.position({0, 0, 0}), -1);
}

TEST(Gpc, LegendreValues)
{
    const LegendreFamily f;
    const Vector v = f.evaluate(2, 0.5);
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1], std::sqrt(3.0) * 0.5, 1e-15);
    EXPECT_NEAR(v[2], std::sqrt(5.0) * (3 * 0.25 - 1) / 2, 1e-15);
}

TEST(Gpc, GaussRuleExactness)
{
    const LegendreFamily f;
    const QuadratureRule q = f.gauss_rule(4);
    EXPECT_NEAR(q.weights.sum(), 1.0, 1e-15);
    for (int k = 0; k <= 7; ++k) {
        const double exact = k % 2 == 0 ? 1.0 / (k + 1) : 0.0;
        double s = 0.0;
        for (Index j = 0; j < q.nodes.size(); ++j) s += q.weights[j] * std::pow(q.nodes[j], k);
        EXPECT_NEAR(s, exact, 1e-14) << k;
    }
}

TEST(Gpc, SpotMoments)
{
    const GpcSpace s(3, 2);
    EXPECT_NEAR(s.first_moment(0)[0], 1.0 / std::sqrt(3.0), 1e-12);
    const Index h1 = s.position({1, 0, 0});
    const Index h2 = s.position({2, 0, 0});
    EXPECT_NEAR(s.second_moment(0)(h1, h2), 2.0 / std::sqrt(15.0), 1e-12);
    EXPECT_NEAR(s.second_moment(0)(h2, h1), 2.0 / std::sqrt(15.0), 1e-12);
}

TEST(Gpc, MomentsMatchExactPolynomialIntegration)
{
    for (const auto [r, p] : {std::pair{1, 1}, {3, 2}, {4, 2}, {2, 4}}) {
        const GpcSpace s(r, p);
        const auto h = legendre_coefficients(p);
        const MultiIndex zero(static_cast<std::size_t>(r), 0);
        for (int i = 0; i < r; ++i) {
            for (Index a = 0; a < s.size(); ++a) {
                const auto& ia = s.indices()[static_cast<std::size_t>(a)];
                EXPECT_NEAR(s.first_moment(i)[a], oracle_second(zero, ia, i, h), 1e-13);
                for (Index b = 0; b < s.size(); ++b) {
                    EXPECT_NEAR(s.second_moment(i)(a, b), oracle_second(ia, s.indices()[static_cast<std::size_t>(b)], i, h),
                                1e-13);
                }
            }
        }
    }
}

TEST(Gpc, ParityForbiddenEntriesVanish)
{
    const GpcSpace s(4, 3);
    for (int i = 0; i < s.r(); ++i) {
        for (Index a = 0; a < s.size(); ++a) {
            const auto& ia = s.indices()[static_cast<std::size_t>(a)];
            for (Index b = 0; b < s.size(); ++b) {
                const auto& ib = s.indices()[static_cast<std::size_t>(b)];
                bool odd = false;
                for (int j = 0; j < s.r(); ++j) odd |= (ia[j] + ib[j] + (j == i ? 1 : 0)) % 2 != 0;
                if (odd) EXPECT_LE(std::abs(s.second_moment(i)(a, b)), 1e-14);
            }
        }
        EXPECT_NEAR((s.second_moment(i) - s.second_moment(i).transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    }
}

TEST(Gpc, MonteCarloGramIsIdentity)
{
    const GpcSpace s(3, 2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix gram = Matrix::Zero(s.size(), s.size());
    RowVector mean = RowVector::Zero(s.size());
    const int n = 200000;
    std::array<double, 3> xi{};
    for (int k = 0; k < n; ++k) {
        for (double& x : xi) x = u(rng);
        const RowVector h = s.evaluate(xi);
        gram += h.transpose() * h;
        mean += h;
    }
    gram /= n;
    mean /= n;
    EXPECT_LT((gram - Matrix::Identity(s.size(), s.size())).cwiseAbs().maxCoeff(), 0.03);
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 0.02);
}

TEST(Gpc, RejectsBadOrders)
{
    EXPECT_THROW(GpcSpace(0, 2), InvalidArgument);
    EXPECT_THROW(GpcSpace(2, 0), InvalidArgument);
}
