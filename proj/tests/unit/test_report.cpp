#include <cmath>
#include <string>

#include "doctest.h"
#include "plume_scout/errors.hpp"
#include "plume_scout/report.hpp"

using namespace plume_scout;
using namespace plume_scout::report;

namespace {

int count(const std::string& s, const std::string& needle) {
    int n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

const char* kCurve =
    "method,seed,step,eval_final_mae_mean,eval_final_mae_std,eval_step_mean_mae,team_return_mean\n"
    "da-diff,1,1000,1.0,0.2,1.5,3\n"
    "da-diff,2,1000,2.0,0.0,1.5,3\n"
    "da-diff,1,2000,0.8,0.1,1.2,3\n"
    "da-diff,2,2000,0.6,0.1,1.1,3\n"
    "da-equal,1,1000,1.4,0.3,1.6,2\n"
    "da-equal,1,2000,1.1,0.2,1.3,2\n";

}  // namespace

TEST_CASE("band aggregation pools seeds and episodes") {
    const auto bands = aggregate_bands(parse_learning_curve(kCurve));
    REQUIRE(bands.size() == 2);
    const auto& d = bands.at("da-diff");
    REQUIRE(d.size() == 2);
    CHECK(d[0].mean == doctest::Approx(1.5));
    // Pooled second moment (0.04 + 1 + 0 + 4) / 2 = 2.52; variance 2.52 - 2.25.
    CHECK(d[0].std == doctest::Approx(std::sqrt(0.27)));
}

TEST_CASE("learning-curve chart") {
    const std::string svg = learning_curve_svg(parse_learning_curve(kCurve));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count(svg, "class=\"series\"") == 2);
    CHECK(count(svg, "class=\"band\"") == 2);
    CHECK(svg.find("class=\"legend\"") != std::string::npos);
    CHECK(svg.find(">da-equal<") != std::string::npos);

    const std::string empty =
        learning_curve_svg(parse_learning_curve("method,seed,step,eval_final_mae_mean,eval_final_mae_std\n"));
    CHECK(empty.find("class=\"axes\"") != std::string::npos);
    CHECK(count(empty, "class=\"series\"") == 0);
    CHECK(empty.find("</svg>") != std::string::npos);
}

TEST_CASE("malformed CSV names the row") {
    const std::string bad = std::string(kCurve) + "da-diff,3,1000,oops,0.1,1,1\n";
    try {
        parse_learning_curve(bad);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 8") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_learning_curve("method,seed\nx,1\n"), FormatError);
    CHECK_THROWS_AS(parse_learning_curve("method,seed,step,eval_final_mae_mean,eval_final_mae_std\na,1,2\n"),
                    FormatError);
    CHECK_THROWS_AS(parse_learning_curve(""), FormatError);
}

TEST_CASE("summary table and budget chart") {
    const std::string csv =
        "# comment\n"
        "method,alpha,budget,n_agents,final_mae_mean,ci95_low,ci95_high,n_seeds\n"
        "da-diff,0.3,1000,2,0.5,0.4,0.6,3\n"
        "da-diff,0.3,2000,2,0.2,0.1,0.3,3\n"
        "random,0.3,1000,2,1.5,1.4,1.6,3\n";
    const auto rows = parse_summary(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].budget == 2000.0);
    const std::string md = summary_markdown(rows);
    CHECK(count(md, "\n| da-diff") == 2);
    const std::string svg = budget_svg(rows);
    CHECK(count(svg, "class=\"series\"") == 2);
    CHECK(svg.find("log scale") != std::string::npos);

    auto nonpositive = rows;
    nonpositive[0].final_mae_mean = 0.0;
    CHECK_THROWS_AS(budget_svg(nonpositive), InvalidArgument);
    CHECK(budget_svg({}).find("class=\"axes\"") != std::string::npos);
}
