#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "cmflow/model_io.hpp"
#include "cmflow/rng.hpp"
#include "cmflow/stats.hpp"
#include "cmflow/svg.hpp"

using namespace cmflow;
using flows::CopulaFlow;
using flows::Ddsf;
using flows::RealNvp2;
using marginal::TailBelief;
using marginal::TailFamily;
using marginal::TailSide;
using marginal::UnivariateMarginalFlow;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("tail belief json round trip, including infinite cut points") {
    TailBelief tb(-1.5, 2.0, TailSide{TailFamily::Gpd, 0.1, 0.3, 1.2},
                  TailSide{TailFamily::Exponential, 0.05, 2.0, 0.0});
    auto j = io::to_json(tb);
    CHECK(j["alpha"].get<double>() == -1.5);
    CHECK(j["left"]["family"] == "gpd");
    auto back = io::belief_from_json(j);
    CHECK(back.a() == tb.a());
    CHECK(back.b() == tb.b());
    CHECK(back.quantile(0.97) == tb.quantile(0.97));

    const double inf = std::numeric_limits<double>::infinity();
    TailBelief open(-inf, 1.0, std::nullopt,
                    TailSide{TailFamily::Exponential, 0.2, 1.0, 0.0});
    auto j2 = io::to_json(open);
    auto back2 = io::belief_from_json(j2);
    CHECK(back2.alpha() == -inf);
    CHECK(back2.beta() == 1.0);
}

TEST_CASE("ddsf json round trip is bit exact") {
    auto f = Ddsf::random({1, 6, 6, 1}, 3);
    auto g = io::ddsf_from_json(io::to_json(f));
    CHECK(g.widths() == f.widths());
    CHECK((g.raw() - f.raw()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.eval(0.37).value == f.eval(0.37).value);
}

TEST_CASE("marginal flow json round trip preserves the cdf") {
    double alpha = stats::normal_quantile(0.025);
    double beta = stats::normal_quantile(0.975);
    UnivariateMarginalFlow m(TailBelief::gaussian(0.0, 1.0, alpha, beta),
                             Ddsf::random({1, 8, 1}, 5));
    auto back = io::marginal_from_json(io::to_json(m));
    for (double x : {-2.5, -0.3, 0.9, 3.0}) CHECK(back.cdf(x) == m.cdf(x));
}

TEST_CASE("copula flow json round trip preserves samples") {
    for (bool constrained : {false, true}) {
        auto nvp = RealNvp2::make(4, 8, constrained, 7);
        auto rng = make_rng(8);
        std::normal_distribution<double> d(0.0, 0.2);
        grad::Vec raw = nvp.raw();
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
        nvp.set_raw(raw);
        CopulaFlow flow(std::move(nvp));
        auto back = io::copula_flow_from_json(io::to_json(flow));
        CHECK(back.constrained() == constrained);
        Eigen::MatrixXd u(3, 2);
        u << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
        CHECK((back.sample(u) - flow.sample(u)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("json file write and read round trip") {
    auto path = tmp_path("cmflow_io_test.json");
    io::json j = {{"a", 1.5}, {"b", {1, 2, 3}}};
    io::write_json(path, j);
    auto back = io::read_json(path);
    CHECK(back == j);
    std::remove(path.c_str());
    CHECK_THROWS(io::read_json(path));
}

TEST_CASE("grid csv round trip at full precision") {
    auto path = tmp_path("cmflow_grid_test.csv");
    const int mesh = 7;
    std::vector<double> vals(mesh * mesh);
    auto rng = make_rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : vals) v = u(rng) * 1e-3;
    io::write_grid_csv(path, mesh, vals);
    auto back = io::read_grid_csv(path);
    CHECK(back.mesh == mesh);
    REQUIRE(back.values.size() == vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(back.values[i] == vals[i]);
    std::remove(path.c_str());
}

TEST_CASE("columns csv round trip") {
    auto path = tmp_path("cmflow_cols_test.csv");
    io::write_columns_csv(path, {"step", "nll"}, {{1.0, 2.0, 3.0}, {0.5, 0.25, 0.125}});
    auto back = io::read_columns_csv(path);
    CHECK(back.header == std::vector<std::string>{"step", "nll"});
    REQUIRE(back.columns.size() == 2);
    CHECK(back.columns[0] == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(back.columns[1] == std::vector<double>{0.5, 0.25, 0.125});
    std::remove(path.c_str());
}

TEST_CASE("svg renderers produce well-formed files") {
    auto heat = tmp_path("cmflow_heat_test.svg");
    std::vector<double> vals(16, 1.0);
    vals[5] = std::nan("");
    vals[10] = 3.0;
    svg::render_heatmap(heat, 4, vals, "demo");
    auto curve = tmp_path("cmflow_curve_test.svg");
    svg::render_curve(curve, {1, 2, 3, 4}, {1.0, 0.1, 0.01, 0.001}, true, "decay");
    for (const auto& p : {heat, curve}) {
        std::ifstream in(p);
        REQUIRE(in.good());
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.find("<svg") != std::string::npos);
        CHECK(content.find("</svg>") != std::string::npos);
        std::remove(p.c_str());
    }
}
