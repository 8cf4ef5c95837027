#include "ggclass/errors.hpp"
#include "ggclass/harness.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

using namespace ggc;

TEST_CASE("stratified folds") {
    SUBCASE("ten balanced samples into five folds") {
        const LabelVector y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
        const auto folds = stratified_kfold(y, 2, 5, 3);
        REQUIRE(folds.size() == 5);
        std::multiset<std::size_t> seen;
        for (const auto& f : folds) {
            REQUIRE(f.test.size() == 2);
            CHECK(y[f.test[0]] != y[f.test[1]]);
            CHECK(f.train.size() == 8);
            seen.insert(f.test.begin(), f.test.end());
        }
        CHECK(seen.size() == 10);
        CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 10);
    }
    SUBCASE("same seed, same folds; other seed, other folds") {
        const Dataset d = testing::random_dataset(60, 2, 3, 1);
        const auto a = stratified_kfold(d, 5, 7);
        const auto b = stratified_kfold(d, 5, 7);
        const auto c = stratified_kfold(d, 5, 8);
        bool differs = false;
        for (std::size_t f = 0; f < a.size(); ++f) {
            CHECK(a[f].test == b[f].test);
            differs = differs || a[f].test != c[f].test;
        }
        CHECK(differs);
    }
    SUBCASE("per-class fold counts differ by at most one") {
        const Dataset d = testing::random_dataset(53, 2, 3, 2);
        const auto sizes = d.class_sizes();
        for (const auto& f : stratified_kfold(d, 5, 0)) {
            std::vector<std::size_t> per(3, 0);
            for (std::size_t i : f.test) ++per[static_cast<std::size_t>(d.label(i))];
            for (std::size_t c = 0; c < 3; ++c) {
                CHECK(per[c] >= sizes[c] / 5);
                CHECK(per[c] <= sizes[c] / 5 + 1);
            }
        }
    }
    SUBCASE("more folds than minority samples") {
        const LabelVector y{0, 0, 0, 0, 0, 1, 1};
        CHECK_THROWS_AS(stratified_kfold(y, 2, 5, 0), DataError);
    }
}

TEST_CASE("sigma search space") {
    SearchSpace s;
    const auto grid = s.sigmas(0);
    REQUIRE(grid.size() == 20);
    CHECK(grid.front() == doctest::Approx(0.1));
    CHECK(grid.back() == doctest::Approx(10.0));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[1] / grid[0]));
    s.sigma_draws = 8;
    const auto draws = s.sigmas(4);
    CHECK(draws.size() == 8);
    CHECK(draws == s.sigmas(4));
    for (double v : draws) {
        CHECK(v >= 0.1);
        CHECK(v <= 10.0);
    }
}

TEST_CASE("experiment config json") {
    ExperimentConfig c;
    c.dataset_path = "x.csv";
    c.architecture = Architecture::chipclass_tanh;
    c.filter = FilterPolicy::Kind::per_class_count;
    c.seed = 99;
    c.search.sigma_grid = 5;
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK_THROWS_AS(config_from_json({{"outer_folds", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json({{"architecture", "svm"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json({{"seed", "abc"}}), std::invalid_argument);
}

TEST_CASE("pipeline") {
    const Dataset raw = gaussian_blobs(25, 2, 3.0, 1.0, 5);
    SUBCASE("filtering removes samples and keeps preprocessing") {
        PipelineOptions o;
        o.policy = FilterPolicy::per_class({2, 2});
        const PipelineFit fit = train_model(raw, o);
        CHECK(fit.removed == 4);
        CHECK(fit.kept.size() == 46);
        CHECK(fit.model.preprocessing.output_dim() == 2);
        CHECK(fit.model.filter_policy == "count:2/2");
        CHECK(fit.model.sigma_used == 1.0);
        CHECK(evaluate_model(fit.model, raw) > 0.9);
    }
    SUBCASE("unfiltered cardinality model records no sigma") {
        PipelineOptions o;
        o.membership = MembershipKind::cardinality;
        o.policy = FilterPolicy::none();
        const PipelineFit fit = train_model(raw, o);
        CHECK(fit.removed == 0);
        CHECK(std::isnan(fit.model.sigma_used));
        CHECK(fit.model.membership == "none");
    }
    SUBCASE("heavy filtering still leaves a class boundary") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Dataset noisy = testing::random_dataset(40, 2, 2, 500 + seed);
            const PreparedSplit split = prepare_split(noisy);
            PipelineOptions o;
            o.membership = MembershipKind::cardinality;
            const auto sizes = split.train.class_sizes();
            o.policy = FilterPolicy::per_class({sizes[0] - 1, sizes[1] - 1});
            const PipelineFit fit = fit_pipeline(split, o);
            CHECK(fit.kept.size() == 2);
            CHECK_FALSE(fit.support_fallback);
            CHECK(fit.support_edges == 1);
        }
    }
}

TEST_CASE("nested cross-validation") {
    const Dataset blobs = gaussian_blobs(30, 2, 4.0, 0.6, 8);
    ExperimentConfig c;
    c.search.sigma_grid = 3;
    c.seed = 17;

    SUBCASE("separable blobs score near one and runs repeat exactly") {
        const CvReport a = run_nested_cv(blobs, c);
        const CvReport b = run_nested_cv(blobs, c);
        CHECK(a.summary.mean >= 0.99);
        CHECK(a.folds.size() == 5);
        CHECK(a.to_json().dump() == b.to_json().dump());
        CHECK(a.table().find("mean") != std::string::npos);
        for (const auto& f : a.folds) CHECK(f.metric_class0_positive == doctest::Approx(f.metric));
    }
    SUBCASE("no stage touches the outer test rows before evaluation") {
        c.filter = FilterPolicy::Kind::per_class_count;
        c.search.filter_counts = {0, 2};
        const auto outer = stratified_kfold(blobs, c.outer_folds, c.seed);
        std::map<std::string, int> calls;
        bool leaked = false;
        bool evaluated_on_test = true;
        run_nested_cv(blobs, c, [&](const std::string& stage, std::size_t fold, std::span<const std::size_t> rows) {
            ++calls[stage];
            const auto& test = outer[fold].test;
            if (stage == "evaluate") {
                evaluated_on_test = evaluated_on_test && IndexList(rows.begin(), rows.end()) == test;
                return;
            }
            for (std::size_t r : rows)
                if (std::binary_search(test.begin(), test.end(), r)) leaked = true;
        });
        CHECK_FALSE(leaked);
        CHECK(evaluated_on_test);
        CHECK(calls["refit"] == 5);
        CHECK(calls["evaluate"] == 5);
        CHECK(calls["inner_fit"] == 25);
        CHECK(calls["inner_validate"] == 25);
    }
    SUBCASE("three classes use the one-vs-one metric") {
        const Dataset three = gaussian_blobs(20, 3, 4.0, 0.5, 2);
        c.architecture = Architecture::ssv_multiclass;
        c.filter = FilterPolicy::Kind::none;
        const CvReport r = run_nested_cv(three, c);
        CHECK(r.metric_name == "roc_auc_ovo");
        CHECK(r.summary.mean >= 0.99);
        CHECK(std::isnan(r.folds[0].inner_score));
    }
}

TEST_CASE("recompute benchmark") {
    const Dataset d = synthetic_dataset(150, 3, 4);
    const std::vector<double> fractions{0.1, 0.5, 0.9};
    const auto records = bench_recompute(d, "synthetic", fractions, 3, 1);
    REQUIRE(records.size() == 3);
    for (const auto& r : records) {
        CHECK(r.fresh_seconds.size() == 3);
        CHECK(r.incremental_seconds.size() == 3);
        CHECK(r.mean_fresh() > 0.0);
        CHECK(r.std_incremental() >= 0.0);
    }
    std::ostringstream csv;
    write_bench_csv(csv, records);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "dataset,m,fraction,rep,method,seconds");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == 18);
    CHECK_THROWS_AS(bench_recompute(d, "x", fractions, 2, 1), std::invalid_argument);
}

TEST_CASE("synthetic generators") {
    const Dataset s = synthetic_dataset(100, 4, 3);
    CHECK(s.size() == 100);
    CHECK(s.dim() == 4);
    CHECK((s.features().array() >= 0.0).all());
    CHECK((s.features().array() <= 1.0).all());
    const Dataset b = gaussian_blobs(10, 4, 3.0, 0.2, 1);
    CHECK(b.size() == 40);
    CHECK(b.class_sizes() == std::vector<std::size_t>{10, 10, 10, 10});
}
