#include <catch2/catch_amalgamated.hpp>

#include <aga/interval_grid.hpp>

using namespace aga;
using Catch::Matchers::WithinAbs;

TEST_CASE("sliding windows for a metre-scale attribute") {
    IntervalGrid grid = build_grid("depth", 0.0, 1.0, 0.5, 0.0, 7.5, {1.0, 2.0});
    REQUIRE(grid.intervals.size() == 14);
    CHECK(grid.intervals.front().lo == 0.0);
    CHECK(grid.intervals.front().hi == 1.0);
    CHECK_THAT(grid.intervals.back().lo, WithinAbs(6.5, 1e-12));
    CHECK_THAT(grid.intervals.back().hi, WithinAbs(7.5, 1e-12));
}

TEST_CASE("sliding windows for a degree-scale attribute") {
    IntervalGrid grid = build_grid("pose", 0.0, 45.0, 25.0, 0.0, 180.0, {45.0});
    REQUIRE(grid.intervals.size() == 7);
    CHECK(grid.intervals.back().lo == 150.0);
    CHECK(grid.intervals.back().hi == 195.0);  // last window may overshoot the range
}

TEST_CASE("grid degenerates to a single window when the range fits in one") {
    IntervalGrid grid = build_grid("x", 0.0, 2.0, 1.0, 0.0, 1.5, {0.5});
    CHECK(grid.intervals.size() == 1);
}

TEST_CASE("grid construction rejects bad geometry") {
    CHECK_THROWS_AS(build_grid("x", 1.0, 1.0, 0.5, 0.0, 5.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid("x", 0.0, 1.0, 0.0, 0.0, 5.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid("x", 0.0, 1.0, 1.5, 0.0, 5.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid("x", 0.0, 1.0, 0.5, 5.0, 5.0, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid("x", 0.0, 1.0, 0.5, 0.0, 5.0, {}), std::invalid_argument);
}

TEST_CASE("membership lookup returns every covering window") {
    IntervalGrid grid = build_grid("depth", 0.0, 1.0, 0.5, 0.0, 7.5, {1.0});
    CHECK(containing_intervals(grid, 1.2) == std::vector<std::size_t>{1, 2});
    CHECK(containing_intervals(grid, 0.1) == std::vector<std::size_t>{0});
    // closed intervals: boundary values belong to every window touching them
    CHECK(containing_intervals(grid, 1.0) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("out-of-range values snap to the nearest window") {
    IntervalGrid grid = build_grid("depth", 0.0, 1.0, 0.5, 0.0, 7.5, {1.0});
    CHECK(containing_intervals(grid, -3.0) == std::vector<std::size_t>{0});
    CHECK(containing_intervals(grid, 99.0) == std::vector<std::size_t>{13});
    CHECK_THROWS_AS(containing_intervals(grid, std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
}

TEST_CASE("partition keeps strict membership and allows empty subsets") {
    IntervalGrid grid = build_grid("x", 0.0, 1.0, 0.5, 0.0, 2.0, {1.0});
    // windows: [0,1] [0.5,1.5] [1,2]
    const std::vector<double> values{0.2, 1.2, 9.0};
    const auto subsets = partition_by_intervals(grid, values);
    REQUIRE(subsets.size() == 3);
    CHECK(subsets[0] == std::vector<std::size_t>{0});
    CHECK(subsets[1] == std::vector<std::size_t>{1});
    CHECK(subsets[2] == std::vector<std::size_t>{1});  // 9.0 is outside every window

    for (std::size_t i = 0; i < subsets.size(); ++i)
        for (std::size_t v : subsets[i]) CHECK(grid.intervals[i].contains(values[v]));
}
