#include "ggclass/harness.hpp"
#include "ggclass/regularization.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace ggc;
using testing::points;

namespace {

// One-sample query point at the origin with four Gabriel neighbours, one of its own class.
Dataset four_neighbour_star() {
    return points({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0, 0, 1, 1, 1});
}

} // namespace

TEST_CASE("gaussian kernel") {
    const Eigen::Vector2d a(0.3, -1.0);
    CHECK(gaussian_kernel(a, a, 0.5) == 1.0);
    const Eigen::Vector2d b(1.3, -1.0);
    CHECK(gaussian_kernel(a, b, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(gaussian_kernel(a, b, 1e6) >= 1.0 - 1e-9);
    CHECK_THROWS_AS(gaussian_kernel(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("cardinality membership") {
    const Dataset d = four_neighbour_star();
    const GabrielGraph g = build_graph(d);
    REQUIRE(g.degree(0) == 4);
    CHECK(membership_cardinality(g, d, 0) == 0.25);

    const Dataset pure = points({{0, 0}, {1, 0}, {0, 1}}, {1, 1, 1});
    const GabrielGraph gp = build_graph(pure);
    for (std::size_t i = 0; i < 3; ++i) CHECK(membership_cardinality(gp, pure, i) == 1.0);

    SUBCASE("recount over the adjacency row") {
        const Dataset r = testing::random_dataset(60, 2, 3, 17);
        const GabrielGraph gr = build_graph(r);
        const Eigen::VectorXd q = memberships_cardinality(gr, r);
        for (std::size_t i = 0; i < r.size(); ++i) {
            int same = 0;
            int total = 0;
            for (Eigen::Index k = 0; k < gr.adjacency.cols(); ++k) {
                if (!gr.adjacency(static_cast<Eigen::Index>(i), k)) continue;
                ++total;
                same += r.label(static_cast<std::size_t>(k)) == r.label(i);
            }
            CHECK(q(static_cast<Eigen::Index>(i)) == static_cast<double>(same) / total);
            CHECK(membership_cardinality(gr, r, i) == q(static_cast<Eigen::Index>(i)));
        }
    }
}

TEST_CASE("distance membership") {
    SUBCASE("pure neighbourhood is 1 for any sigma") {
        const Dataset pure = points({{0, 0}, {1, 0}, {0, 1}}, {1, 1, 1});
        const GabrielGraph g = build_graph(pure);
        for (double s : {0.01, 1.0, 100.0}) CHECK(membership_distance(g, pure, 0, s) == 1.0);
    }
    SUBCASE("nearby same-class neighbour dominates at small sigma") {
        const Dataset d = points({{0, 0}, {0.2, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0, 0, 1, 1, 1});
        const GabrielGraph g = build_graph(d);
        REQUIRE(g.degree(0) == 4);
        const double q = membership_cardinality(g, d, 0);
        const double qd = membership_distance(g, d, 0, 0.5);
        const double same = std::exp(-0.04 / 0.5);
        const double other = 3 * std::exp(-1.0 / 0.5);
        CHECK(qd == doctest::Approx(same / (same + other)).epsilon(1e-14));
        CHECK(qd > q);
    }
    SUBCASE("kernel underflow falls back to the nearest neighbour scale") {
        const Dataset d = points({{0, 0}, {100, 0}, {0, 300}}, {0, 0, 1});
        const GabrielGraph g = build_graph(d);
        const double qd = membership_distance(g, d, 0, 0.01);
        CHECK(std::isfinite(qd));
        CHECK(qd == doctest::Approx(1.0));
    }
    SUBCASE("matches a direct evaluation") {
        const Dataset r = testing::random_dataset(40, 3, 2, 8);
        const GabrielGraph g = build_graph(r);
        const Eigen::VectorXd qd = memberships_distance(g, r, 0.3);
        for (std::size_t i = 0; i < r.size(); ++i) {
            double same = 0;
            double total = 0;
            for (std::size_t k : g.neighbors(i)) {
                const Eigen::VectorXd a = r.features().row(static_cast<Eigen::Index>(i)).transpose();
                const Eigen::VectorXd b = r.features().row(static_cast<Eigen::Index>(k)).transpose();
                const double w = gaussian_kernel(a, b, 0.3);
                total += w;
                if (r.label(k) == r.label(i)) same += w;
            }
            CHECK(qd(static_cast<Eigen::Index>(i)) == doctest::Approx(same / total).epsilon(1e-12));
        }
    }
    SUBCASE("large sigma approaches the cardinality membership") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Dataset r = testing::random_dataset(50, 2, 2, 300 + seed);
            const GabrielGraph g = build_graph(r);
            const Eigen::VectorXd q = memberships_cardinality(g, r);
            double previous = std::numeric_limits<double>::infinity();
            for (double s : {1e2, 1e4, 1e6}) {
                const double gap = (memberships_distance(g, r, s) - q).cwiseAbs().maxCoeff();
                CHECK(gap < previous);
                previous = gap;
            }
            CHECK(previous < 1e-9);
        }
    }
    SUBCASE("bad sigma") {
        const Dataset d = four_neighbour_star();
        CHECK_THROWS_AS(membership_distance(build_graph(d), d, 0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("class thresholds") {
    const std::vector<double> ones(4, 1.0);
    const std::vector<int> labels{0, 1, 0, 1};
    CHECK(class_thresholds(ones, labels, 2) == std::vector<double>{1.0, 1.0});

    const std::vector<double> q{0.2, 0.4, 0.9, 0.7};
    const std::vector<int> y{0, 0, 0, 1};
    const auto t = class_thresholds(q, y, 2);
    CHECK(t[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t[1] == 0.7);

    SUBCASE("random vectors") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0, 1);
        std::vector<double> v(100);
        std::vector<int> lab(100);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = u(rng);
            lab[i] = static_cast<int>(i % 3);
        }
        const auto th = class_thresholds(v, lab, 3);
        for (int c = 0; c < 3; ++c) {
            double s = 0;
            int n = 0;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (lab[i] == c) {
                    s += v[i];
                    ++n;
                }
            CHECK(th[static_cast<std::size_t>(c)] == doctest::Approx(s / n).epsilon(1e-14));
        }
    }
    SUBCASE("equal values are never strictly below their own mean") {
        const std::vector<double> tenth(7, 0.1);
        const std::vector<int> zero(7, 0);
        CHECK(class_thresholds(tenth, zero, 1)[0] == 0.1);
    }
}

TEST_CASE("filter policies") {
    const Dataset d = testing::random_dataset(12, 2, 2, 1);
    FilterModel model;
    model.memberships = Eigen::VectorXd::Constant(12, 0.1);
    model.thresholds = class_thresholds({model.memberships.data(), 12}, d.labels(), 2);

    SUBCASE("equal memberships: threshold removes nothing") {
        model.policy = FilterPolicy::threshold();
        const FilterResult r = filter_samples(d, model);
        CHECK(r.removed.empty());
        CHECK(r.kept.size() == 12);
    }
    SUBCASE("strictly below the class mean is removed") {
        model.memberships(0) = 0.0;
        model.thresholds = class_thresholds({model.memberships.data(), 12}, d.labels(), 2);
        model.policy = FilterPolicy::threshold();
        CHECK(filter_samples(d, model).removed == IndexList{0});
    }
    SUBCASE("per-class count removes the unique minimum") {
        model.memberships(5) = 0.01;
        model.policy = FilterPolicy::per_class({1, 0});
        if (d.label(5) == 1) model.policy = FilterPolicy::per_class({0, 1});
        CHECK(filter_samples(d, model).removed == IndexList{5});
    }
    SUBCASE("per-class count breaks ties by lower index") {
        model.policy = FilterPolicy::per_class({1, 1});
        const FilterResult r = filter_samples(d, model);
        CHECK(r.removed == IndexList{0, 1});
    }
    SUBCASE("count reaching the class size is an error") {
        const auto sizes = d.class_sizes();
        model.policy = FilterPolicy::per_class({sizes[0], 0});
        CHECK_THROWS_AS(filter_samples(d, model), std::invalid_argument);
    }
    SUBCASE("a class that would be emptied keeps its best sample") {
        const Dataset small = points({{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
        FilterModel f;
        f.memberships = Eigen::Vector4d(0.2, 0.3, 0.9, 0.9);
        f.thresholds = {0.5, 0.5};
        f.policy = FilterPolicy::threshold();
        const FilterResult r = filter_samples(small, f);
        CHECK(r.removed == IndexList{0});
        CHECK(r.kept == IndexList{1, 2, 3});
        CHECK(r.guarded_classes == std::vector<int>{0});
    }
}

TEST_CASE("policy text round trip") {
    for (const std::string s : {"none", "threshold", "count:1/2/0"}) CHECK(FilterPolicy::parse(s, 3).describe() == s);
    CHECK(FilterPolicy::parse("count:2", 3) == FilterPolicy::per_class({2, 2, 2}));
    CHECK_THROWS_AS(FilterPolicy::parse("count:1/2", 3), std::invalid_argument);
    CHECK_THROWS_AS(FilterPolicy::parse("sometimes", 2), std::invalid_argument);
    CHECK_THROWS_AS(FilterPolicy::parse("count:x", 2), std::invalid_argument);
}

TEST_CASE("distance membership filters only planted outliers") {
    // Two 6x6 lattices three units apart, one mislabelled sample just outside the far edge of each.
    FeatureMatrix x(74, 2);
    LabelVector y;
    Eigen::Index row = 0;
    for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b, ++row) {
                x(row, 0) = a * 0.3 + c * 4.5 + 0.01 * b;
                x(row, 1) = b * 0.3 + 0.013 * a;
                y.push_back(c);
            }
    x.row(row) << -0.5, 0.76;
    y.push_back(1);
    const std::size_t outlier_a = static_cast<std::size_t>(row++);
    x.row(row) << 6.55, 0.74;
    y.push_back(0);
    const std::size_t outlier_b = static_cast<std::size_t>(row);
    const Dataset d(std::move(x), std::move(y), 2);
    const GabrielGraph g = build_graph(d);

    const IndexList outliers{outlier_a, outlier_b};
    SearchSpace grid;
    bool found = false;
    for (double sigma : grid.sigmas(0)) {
        const FilterModel f = make_filter_model(g, d, MembershipKind::distance, sigma, FilterPolicy::threshold());
        if (filter_samples(d, f).removed == outliers) found = true;
    }
    CHECK(found);

    const FilterModel card = make_filter_model(g, d, MembershipKind::cardinality, 1.0, FilterPolicy::threshold());
    const FilterResult by_count = filter_samples(d, card);
    CHECK(by_count.removed.size() > outliers.size());
}

TEST_CASE("membership report") {
    const Dataset d = four_neighbour_star();
    const GabrielGraph g = build_graph(d);
    const FilterModel f = make_filter_model(g, d, MembershipKind::cardinality, 1.0, FilterPolicy::threshold());
    const FilterResult r = filter_samples(d, f);
    std::ostringstream out;
    write_membership_report(out, g, d, f, r);
    std::istringstream lines(out.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "sample_index,class,q,q_d,threshold,removed_flag");
    std::string first;
    std::getline(lines, first);
    CHECK(first.rfind("0,0,0.25,", 0) == 0);
}
