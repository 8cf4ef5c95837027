#include "ggclass/numeric.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <cmath>
#include <random>

using namespace ggc;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& pos) {
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (!pos[i] || pos[j]) continue;
            pairs += 1;
            if (s[i] > s[j]) wins += 1;
            else if (s[i] == s[j]) wins += 0.5;
        }
    return wins / pairs;
}

} // namespace

TEST_CASE("stable sigmoid") {
    CHECK(stable_sigmoid(0.0) == 0.5);
    CHECK(stable_sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    const double tiny = stable_sigmoid(-1e4);
    CHECK(tiny >= 0.0);
    CHECK(std::isfinite(tiny));
    CHECK(stable_sigmoid(1e4) == 1.0);
    CHECK(stable_sigmoid(-30.0) > 0.0);
}

TEST_CASE("softmax") {
    const Eigen::Vector4d equal = Eigen::Vector4d::Constant(3.7);
    const Eigen::VectorXd u = softmax(equal);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(u(i) == doctest::Approx(0.25).epsilon(1e-15));

    const Eigen::VectorXd big = softmax(Eigen::Vector2d(0.0, 1e4));
    CHECK(big.allFinite());
    CHECK(big(0) < 1e-300);
    CHECK(big(1) == 1.0);

    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 5.0);
    for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd z(5);
        for (Eigen::Index i = 0; i < 5; ++i) z(i) = g(rng);
        const Eigen::VectorXd p = softmax(z);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        Big denom = 0;
        for (Eigen::Index i = 0; i < 5; ++i) denom += boost::multiprecision::exp(Big(z(i)));
        for (Eigen::Index i = 0; i < 5; ++i) {
            const double oracle = static_cast<double>(boost::multiprecision::exp(Big(z(i))) / denom);
            CHECK(p(i) == doctest::Approx(oracle).epsilon(1e-13));
        }
    }

    Eigen::MatrixXd rows(2, 3);
    rows << 1, 2, 3, 0, 0, 0;
    const Eigen::MatrixXd sr = softmax_rows(rows);
    CHECK(sr.rowwise().sum().isApprox(Eigen::Vector2d::Ones()));
    CHECK(log_sum_exp(Eigen::Vector2d(1000.0, 1000.0)) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("least squares") {
    SUBCASE("identity design") {
        LeastSquaresProblem<double> p{Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Random(4, 2)};
        CHECK(solve_least_squares(p) == p.targets);
    }
    SUBCASE("single column average") {
        Eigen::MatrixXd h(2, 1);
        h << 1, 1;
        Eigen::MatrixXd y(2, 1);
        y << 0, 2;
        const Eigen::MatrixXd w = solve_least_squares(LeastSquaresProblem<double>{h, y});
        CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("overdetermined systems match the normal equations") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g;
        for (auto [rows, cols] : {std::pair{4, 2}, std::pair{20, 5}}) {
            Eigen::MatrixXd h(rows, cols);
            Eigen::MatrixXd y(rows, 1);
            for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = g(rng);
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = g(rng);
            h.topRows(cols) += 3.0 * Eigen::MatrixXd::Identity(cols, cols);
            const Eigen::MatrixXd oracle = (h.transpose() * h).ldlt().solve(h.transpose() * y);
            CHECK((solve_least_squares(LeastSquaresProblem<double>{h, y}) - oracle).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SUBCASE("rank deficient design gives the minimum-norm solution") {
        Eigen::MatrixXd h(3, 2);
        h << 1, 1, 1, 1, 1, 1;
        Eigen::MatrixXd y = Eigen::MatrixXd::Constant(3, 1, 2.0);
        const Eigen::MatrixXd w = solve_least_squares(LeastSquaresProblem<double>{h, y});
        CHECK(w(0, 0) == doctest::Approx(1.0));
        CHECK(w(1, 0) == doctest::Approx(1.0));
    }
    SUBCASE("invalid input") {
        CHECK_THROWS_AS(solve_least_squares(LeastSquaresProblem<double>{Eigen::MatrixXd::Ones(3, 2),
                                                                        Eigen::MatrixXd::Ones(2, 1)}),
                        std::invalid_argument);
        Eigen::MatrixXd h = Eigen::MatrixXd::Ones(2, 2);
        h(0, 0) = std::nan("");
        CHECK_THROWS_AS(solve_least_squares(LeastSquaresProblem<double>{h, Eigen::MatrixXd::Ones(2, 1)}),
                        std::invalid_argument);
    }
}

TEST_CASE("binary auc") {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    CHECK(*auc_binary(s, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(*auc_binary(s, std::vector<int>{1, 1, 0, 0}) == 0.0);
    const std::vector<double> flat(6, 0.3);
    CHECK(*auc_binary(flat, std::vector<int>{0, 1, 0, 1, 1, 0}) == 0.5);
    CHECK_FALSE(auc_binary(s, std::vector<int>{1, 1, 1, 1}).has_value());

    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> coarse(0, 9);
    std::bernoulli_distribution coin(0.4);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> sc(50);
        std::vector<int> pos(50);
        for (std::size_t i = 0; i < 50; ++i) {
            sc[i] = coarse(rng) / 10.0;
            pos[i] = coin(rng);
        }
        pos[0] = 1;
        pos[1] = 0;
        CHECK(*auc_binary(sc, pos) == pairwise_auc(sc, pos));
    }
}

TEST_CASE("one-vs-one auc") {
    SUBCASE("two classes reduce to the binary auc") {
        std::mt19937_64 rng(1);
        std::uniform_int_distribution<int> grid(0, 16);
        Eigen::MatrixXd p(30, 2);
        std::vector<int> y(30);
        std::vector<double> s(30);
        for (int i = 0; i < 30; ++i) {
            p(i, 1) = grid(rng) / 16.0;
            p(i, 0) = 1.0 - p(i, 1);
            y[static_cast<std::size_t>(i)] = i % 3 == 0;
            s[static_cast<std::size_t>(i)] = p(i, 1);
        }
        CHECK(*roc_auc_ovo(p, y) == doctest::Approx(*auc_binary(s, y)).epsilon(1e-15));
    }
    SUBCASE("perfect one-hot predictions") {
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(6, 3);
        std::vector<int> y{0, 1, 2, 2, 1, 0};
        for (int i = 0; i < 6; ++i) p(i, y[static_cast<std::size_t>(i)]) = 1.0;
        CHECK(*roc_auc_ovo(p, y) == 1.0);
    }
    SUBCASE("three classes against a pairwise oracle") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0, 1);
        Eigen::MatrixXd p(45, 3);
        std::vector<int> y(45);
        for (int i = 0; i < 45; ++i) {
            for (int c = 0; c < 3; ++c) p(i, c) = u(rng);
            p.row(i) /= p.row(i).sum();
            y[static_cast<std::size_t>(i)] = i % 3;
        }
        double total = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                std::vector<double> sa, sb;
                std::vector<int> ia, ib;
                for (int i = 0; i < 45; ++i) {
                    const int yi = y[static_cast<std::size_t>(i)];
                    if (yi != a && yi != b) continue;
                    sa.push_back(p(i, a));
                    sb.push_back(p(i, b));
                    ia.push_back(yi == a);
                    ib.push_back(yi == b);
                }
                total += 0.5 * (pairwise_auc(sa, ia) + pairwise_auc(sb, ib));
            }
        CHECK(*roc_auc_ovo(p, y) == doctest::Approx(total / 3).epsilon(1e-14));
    }
    SUBCASE("missing class") {
        Eigen::MatrixXd p = Eigen::MatrixXd::Constant(4, 3, 1.0 / 3);
        CHECK_FALSE(roc_auc_ovo(p, std::vector<int>{0, 1, 0, 1}).has_value());
    }
}

TEST_CASE("metric summary") {
    const MetricReport r = summarize({0.9, 1.0, 0.8});
    CHECK(r.mean == doctest::Approx(0.9));
    CHECK(r.stddev == doctest::Approx(std::sqrt(0.02 / 3)));
    CHECK(r.per_fold.size() == 3);
}
