#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmflow/cm_flow.hpp"
#include "cmflow/metrics.hpp"
#include "cmflow/model_io.hpp"
#include "cmflow/rng.hpp"
#include "cmflow/stats.hpp"
#include "cmflow/svg.hpp"
#include "cmflow/tailbound.hpp"

namespace fs = std::filesystem;
using namespace cmflow;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string out_file(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkConfig {
    std::string copula = "clayton";
    double theta = 2.0;
    bool constrained = false;
    std::uint64_t seed = 0;
    int batch = 3000;
    int eval_batch = 500000;
    int mesh = 300;
    int bins = 25;
    int max_steps = 50000;
    int check_every = 500;
    double lr = 1e-3;
    int depth = 6;
    int hidden = 32;
    double jsd_threshold = 1e-3;
    double t_threshold = 1e-2;
    double m_threshold = 8e-2;
    std::string out = "out";
};

json config_json(const BenchmarkConfig& c) {
    return {{"copula", c.copula},
            {"theta", c.theta},
            {"constrained", c.constrained},
            {"seed", c.seed},
            {"batch", c.batch},
            {"eval_batch", c.eval_batch},
            {"mesh", c.mesh},
            {"bins", c.bins},
            {"max_steps", c.max_steps},
            {"check_every", c.check_every},
            {"lr", c.lr},
            {"depth", c.depth},
            {"hidden", c.hidden},
            {"thresholds",
             {{"jsd", c.jsd_threshold}, {"t", c.t_threshold}, {"m", c.m_threshold}}},
            {"out", c.out}};
}

json metrics_json(const metrics::MetricReport& r) {
    return {{"jsd", r.jsd},   {"t1", r.t1},     {"t2", r.t2},
            {"m1", r.m1},     {"m2", r.m2},     {"nll", r.nll},
            {"mesh", r.mesh}, {"seed", r.seed}, {"eval_samples", r.eval_samples},
            {"pass", r.stop}};
}

int cmd_benchmark(const BenchmarkConfig& cfg) {
    copulas::ReferenceCopula target(copulas::family_from_string(cfg.copula), cfg.theta);
    flows::CopulaFlow flow(
        flows::RealNvp2::make(cfg.depth, cfg.hidden, cfg.constrained, mix_seed(cfg.seed, 10)));

    metrics::MetricConfig mcfg;
    mcfg.mesh = cfg.mesh;
    mcfg.bins = cfg.bins;
    mcfg.uniformity_samples = cfg.eval_batch;
    mcfg.seed = cfg.seed;
    mcfg.thresholds = {cfg.jsd_threshold, cfg.t_threshold, cfg.m_threshold};

    // deterministic training stream: one fresh sub-seed per batch
    std::uint64_t batch_counter = 0;
    auto sampler = [&](int n) {
        return target.sample(n, mix_seed(mix_seed(cfg.seed, 20), batch_counter++));
    };
    flows::CopulaTrainConfig tcfg;
    tcfg.batch_size = cfg.batch;
    tcfg.max_steps = cfg.max_steps;
    tcfg.check_every = cfg.check_every;
    tcfg.lr = cfg.lr;

    auto stop_check = [&](const flows::CopulaFlow& f, int step) {
        auto rep = metrics::metric_report(f, target, mcfg);
        std::cerr << "step " << step << "  jsd " << rep.jsd << "  T " << rep.t1 << "/"
                  << rep.t2 << "  M " << rep.m1 << "/" << rep.m2 << "  nll " << rep.nll
                  << "\n";
        return rep.stop;
    };
    auto hist = flow.train(sampler, tcfg, stop_check);
    if (hist.diverged) {
        std::cerr << "training diverged; parameters restored to the last good state\n";
        return kExitNumeric;
    }

    auto rep = metrics::metric_report(flow, target, mcfg);

    // artifacts
    std::vector<std::string> artifacts;
    auto density_map =
        metrics::jsd_pointwise_map(metrics::copula_density_fn(target),
                                   metrics::flow_density_fn(flow), cfg.mesh);
    std::vector<double> flow_density(cfg.mesh * cfg.mesh,
                                     std::numeric_limits<double>::quiet_NaN());
    auto fd = metrics::flow_density_fn(flow);
    for (int iy = 0; iy < cfg.mesh; ++iy)
        for (int ix = 0; ix < cfg.mesh; ++ix) {
            auto v = fd((ix + 0.5) / cfg.mesh, (iy + 0.5) / cfg.mesh);
            if (v) flow_density[iy * cfg.mesh + ix] = *v;
        }
    auto grid_path = out_file(cfg.out, "density_grid.csv");
    io::write_grid_csv(grid_path, cfg.mesh, flow_density);
    artifacts.push_back(grid_path);

    auto jsd_path = out_file(cfg.out, "jsd_map.csv");
    io::write_grid_csv(jsd_path, cfg.mesh, density_map.cells);
    artifacts.push_back(jsd_path);

    auto hist_path = out_file(cfg.out, "history.csv");
    std::vector<double> steps(hist.steps.begin(), hist.steps.end());
    io::write_columns_csv(hist_path, {"step", "nll"}, {steps, hist.nll});
    artifacts.push_back(hist_path);

    auto model_path = out_file(cfg.out, "model.json");
    io::write_json(model_path, io::to_json(flow));
    artifacts.push_back(model_path);

    auto density_svg = out_file(cfg.out, "density.svg");
    svg::render_heatmap(density_svg, cfg.mesh, flow_density, "model density");
    artifacts.push_back(density_svg);
    auto jsd_svg = out_file(cfg.out, "jsd_map.svg");
    svg::render_heatmap(jsd_svg, cfg.mesh, density_map.cells, "pointwise JSD");
    artifacts.push_back(jsd_svg);
    if (!hist.nll.empty()) {
        auto curve_svg = out_file(cfg.out, "history.svg");
        svg::render_curve(curve_svg, steps, hist.nll, false, "training NLL");
        artifacts.push_back(curve_svg);
    }

    json report = {{"config", config_json(cfg)},
                   {"metrics", metrics_json(rep)},
                   {"training",
                    {{"steps_run", hist.steps.empty() ? 0 : hist.steps.back()},
                     {"final_nll", hist.nll.empty() ? 0.0 : hist.nll.back()},
                     {"stopped_by_criterion", hist.stopped_by_criterion},
                     {"diverged", hist.diverged}}},
                   {"artifacts", artifacts}};
    io::write_json(out_file(cfg.out, "report.json"), report);
    return rep.stop ? kExitOk : kExitNumeric;
}

// --------------------------------------------------------------- tail-verify

struct TailVerifyConfig {
    std::string prior = "gaussian";
    int d0 = 2;
    int p = 2;
    int n = 1000000;
    int nets = 20;
    std::uint64_t seed = 0;
    std::string out = "out";
};

json bound_report_json(const tailbound::BoundCheckReport& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back({{"x", p.x},
                       {"lhs", p.lhs},
                       {"rhs", p.rhs},
                       {"margin", p.margin},
                       {"violated", p.violated}});
    return {{"violations", r.violations}, {"sample_count", r.sample_count}, {"points", pts}};
}

int cmd_tail_verify(const TailVerifyConfig& cfg) {
    tailbound::NoisePrior prior{tailbound::prior_from_string(cfg.prior), cfg.d0, 1.0};
    std::vector<double> grid;
    for (double x = 0.0; x <= 6.0; x += 0.25) grid.push_back(x);

    int violations = 0;
    json lemma = json::array();
    for (int d0 : {1, cfg.d0}) {
        auto rep = tailbound::check_lemma_sum_bound(0.8, 0.1, d0, prior, grid, cfg.n,
                                                    mix_seed(cfg.seed, 1000 + d0));
        violations += rep.violations;
        lemma.push_back({{"d0", d0}, {"report", bound_report_json(rep)}});
    }

    json theorem = json::array();
    std::vector<double> first_x, first_lhs, first_rhs;
    for (int k = 0; k < cfg.nets; ++k) {
        auto net = tailbound::NetworkSpec::random({cfg.d0, 16, 16, 2},
                                                  tailbound::Activation::Tanh,
                                                  mix_seed(cfg.seed, 2000 + k));
        double L = tailbound::lipschitz_upper_bound(net);
        double g0 = std::abs(net.eval(Eigen::VectorXd::Zero(cfg.d0))(0));
        std::vector<double> g;
        for (int i = 0; i <= 24; ++i) g.push_back(g0 + 0.25 * i * L);
        auto rep = tailbound::check_generator_tail_bound(net, prior, 0, g, cfg.n,
                                                         mix_seed(cfg.seed, 3000 + k));
        violations += rep.violations;
        theorem.push_back({{"net", k}, {"violations", rep.violations}});
        if (k == 0)
            for (const auto& p : rep.points) {
                first_x.push_back(p.x);
                first_lhs.push_back(p.lhs);
                first_rhs.push_back(p.rhs);
            }
    }

    auto moment = tailbound::check_moment_bound(
        tailbound::NetworkSpec::random({cfg.d0, 16, 2}, tailbound::Activation::Tanh,
                                       mix_seed(cfg.seed, 4000)),
        prior, cfg.p, cfg.n, mix_seed(cfg.seed, 4001));
    if (!moment.premise_violated && !moment.holds) ++violations;

    json report = {{"config",
                    {{"prior", cfg.prior},
                     {"d0", cfg.d0},
                     {"p", cfg.p},
                     {"n", cfg.n},
                     {"nets", cfg.nets},
                     {"seed", cfg.seed}}},
                   {"lemma", lemma},
                   {"theorem", theorem},
                   {"moment",
                    {{"premise_violated", moment.premise_violated},
                     {"estimate", moment.estimate},
                     {"bound", moment.bound},
                     {"holds", moment.holds}}},
                   {"violations", violations}};
    io::write_json(out_file(cfg.out, "tail_report.json"), report);
    if (!first_lhs.empty())
        io::write_columns_csv(out_file(cfg.out, "survival.csv"), {"x", "lhs", "rhs"},
                              {first_x, first_lhs, first_rhs});
    return violations == 0 ? kExitOk : kExitNumeric;
}

// ------------------------------------------------------------ train-marginal

struct TrainMarginalConfig {
    std::string data;
    std::string belief;
    std::string out = "out";
    std::uint64_t seed = 0;
    int epochs = 200;
    int batch = 1000;
    double lr = 1e-2;
};

int cmd_train_marginal(const TrainMarginalConfig& cfg) {
    auto belief = io::belief_from_json(io::read_json(cfg.belief));
    auto samples = io::read_scalar_csv(cfg.data);
    marginal::UnivariateMarginalFlow flow(
        belief, flows::Ddsf::random({1, 16, 16, 1}, mix_seed(cfg.seed, 1)));
    marginal::MarginalTrainConfig tcfg;
    tcfg.epochs = cfg.epochs;
    tcfg.batch_size = cfg.batch;
    tcfg.lr = cfg.lr;
    tcfg.seed = cfg.seed;
    auto history = flow.train(samples, tcfg);

    io::write_json(out_file(cfg.out, "model.json"), io::to_json(flow));
    std::vector<double> epochs(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) epochs[i] = static_cast<double>(i + 1);
    io::write_columns_csv(out_file(cfg.out, "loss.csv"), {"epoch", "nll"},
                          {epochs, history});

    // full-data NLL: body branch through the flow, tail branch through the
    // belief pdf; seam points are skipped
    double full_nll = 0.0;
    std::size_t used = 0;
    for (double x : samples) {
        if (x == belief.alpha() || x == belief.beta()) continue;
        full_nll -= (x > belief.alpha() && x < belief.beta()) ? flow.log_density(x)
                                                              : belief.log_pdf(x);
        ++used;
    }
    if (used > 0) full_nll /= static_cast<double>(used);

    json report = {{"config",
                    {{"data", cfg.data},
                     {"belief", cfg.belief},
                     {"seed", cfg.seed},
                     {"epochs", cfg.epochs},
                     {"batch", cfg.batch},
                     {"lr", cfg.lr}}},
                   {"final_body_nll", history.empty() ? 0.0 : history.back()},
                   {"full_nll", full_nll},
                   {"samples_used", used}};
    io::write_json(out_file(cfg.out, "train_report.json"), report);
    std::cerr << "final body NLL " << (history.empty() ? 0.0 : history.back())
              << "  full NLL " << full_nll << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------- sample

int cmd_sample(const std::string& model_path, int n, std::uint64_t seed,
               const std::string& out_path) {
    auto j = io::read_json(model_path);
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (j.contains("marginal1") && j.contains("copula")) {
        model::CmFlow flow = io::cm_flow_from_json(j);
        Eigen::MatrixXd u(n, 2);
        for (int i = 0; i < n; ++i) {
            u(i, 0) = unif(rng);
            u(i, 1) = unif(rng);
        }
        Eigen::MatrixXd x = flow.sample(u);
        std::vector<double> c1(n), c2(n);
        for (int i = 0; i < n; ++i) {
            c1[i] = x(i, 0);
            c2[i] = x(i, 1);
        }
        io::write_columns_csv(out_path, {"x1", "x2"}, {c1, c2});
    } else if (j.contains("net") || j.contains("depth")) {
        flows::CopulaFlow flow = io::copula_flow_from_json(j);
        Eigen::MatrixXd u(n, 2);
        for (int i = 0; i < n; ++i) {
            u(i, 0) = unif(rng);
            u(i, 1) = unif(rng);
        }
        Eigen::MatrixXd c = flow.sample(u);
        std::vector<double> c1(n), c2(n);
        for (int i = 0; i < n; ++i) {
            c1[i] = c(i, 0);
            c2[i] = c(i, 1);
        }
        io::write_columns_csv(out_path, {"c1", "c2"}, {c1, c2});
    } else if (j.contains("belief")) {
        marginal::UnivariateMarginalFlow flow = io::marginal_from_json(j);
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = flow.forward(unif(rng));
        io::write_columns_csv(out_path, {"x"}, {x});
    } else {
        throw std::invalid_argument("sample: unrecognized model file format");
    }
    return kExitOk;
}

// ------------------------------------------------------------------- render

int cmd_render(const std::string& data_path, const std::string& out_path, bool log_y,
               const std::string& title) {
    std::ifstream probe(data_path);
    if (!probe.good()) throw std::invalid_argument("render: cannot open " + data_path);
    std::string header;
    std::getline(probe, header);
    probe.close();
    if (header == "x,y,value") {
        auto grid = io::read_grid_csv(data_path);
        svg::render_heatmap(out_path, grid.mesh, grid.values, title);
    } else {
        auto cols = io::read_columns_csv(data_path);
        if (cols.columns.size() < 2)
            throw std::invalid_argument("render: need at least two columns");
        svg::render_curve(out_path, cols.columns[0], cols.columns[1], log_y, title);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    // CMFLOW_THREADS is honored as a cap; the current build is single-threaded
    // for reproducibility, so any positive value maps to one worker.
    if (const char* t = std::getenv("CMFLOW_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(t, &end, 10);
        if (end == t || v < 1) {
            std::cerr << "invalid CMFLOW_THREADS value\n";
            return kExitUsage;
        }
    }

    CLI::App app{"copula-and-marginal flow toolkit"};
    app.require_subcommand(1);

    BenchmarkConfig bench;
    auto* b = app.add_subcommand("benchmark", "train a copula flow on a reference copula");
    b->add_option("--copula", bench.copula, "clayton|frank|gumbel|independence");
    b->add_option("--theta", bench.theta, "copula parameter");
    b->add_flag("--constrained", bench.constrained, "pin coordinate 2 to the identity");
    b->add_option("--seed", bench.seed, "rng seed");
    b->add_option("--batch", bench.batch, "training batch size")->check(CLI::PositiveNumber);
    b->add_option("--eval-batch", bench.eval_batch, "uniformity sample count")
        ->check(CLI::PositiveNumber);
    b->add_option("--mesh", bench.mesh, "JSD mesh")->check(CLI::Range(2, 10000));
    b->add_option("--bins", bench.bins, "uniformity bins")->check(CLI::PositiveNumber);
    b->add_option("--max-steps", bench.max_steps, "training step cap")
        ->check(CLI::PositiveNumber);
    b->add_option("--check-every", bench.check_every, "steps between metric checks")
        ->check(CLI::PositiveNumber);
    b->add_option("--lr", bench.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    b->add_option("--depth", bench.depth, "coupling layers")->check(CLI::PositiveNumber);
    b->add_option("--hidden", bench.hidden, "conditioner width")->check(CLI::PositiveNumber);
    b->add_option("--jsd-threshold", bench.jsd_threshold)->check(CLI::PositiveNumber);
    b->add_option("--t-threshold", bench.t_threshold)->check(CLI::PositiveNumber);
    b->add_option("--m-threshold", bench.m_threshold)->check(CLI::PositiveNumber);
    b->add_option("--out", bench.out, "output directory");

    TailVerifyConfig tail;
    auto* tv = app.add_subcommand("tail-verify", "run the tail-bound Monte Carlo checks");
    tv->add_option("--prior", tail.prior, "gaussian|uniform|laplace|cauchy");
    tv->add_option("--d0", tail.d0, "input dimension")->check(CLI::PositiveNumber);
    tv->add_option("--p", tail.p, "moment order")->check(CLI::PositiveNumber);
    tv->add_option("--n", tail.n, "samples per estimate")->check(CLI::Range(100000, 100000000));
    tv->add_option("--nets", tail.nets, "random networks to test")->check(CLI::PositiveNumber);
    tv->add_option("--seed", tail.seed, "rng seed");
    tv->add_option("--out", tail.out, "output directory");

    TrainMarginalConfig tm;
    auto* t = app.add_subcommand("train-marginal", "fit a marginal flow body to data");
    t->add_option("--data", tm.data, "CSV, one value per line")->required();
    t->add_option("--belief", tm.belief, "tail belief JSON")->required();
    t->add_option("--seed", tm.seed, "rng seed");
    t->add_option("--epochs", tm.epochs)->check(CLI::PositiveNumber);
    t->add_option("--batch", tm.batch)->check(CLI::PositiveNumber);
    t->add_option("--lr", tm.lr)->check(CLI::PositiveNumber);
    t->add_option("--out", tm.out, "output directory");

    std::string model_path, sample_out = "samples.csv";
    int sample_n = 1000;
    std::uint64_t sample_seed = 0;
    auto* s = app.add_subcommand("sample", "draw from a stored model");
    s->add_option("--model", model_path, "model JSON")->required();
    s->add_option("--n", sample_n, "sample count")->check(CLI::NonNegativeNumber);
    s->add_option("--seed", sample_seed, "rng seed");
    s->add_option("--out", sample_out, "output CSV");

    std::string render_in, render_out = "plot.svg", render_title;
    bool render_log = false;
    auto* r = app.add_subcommand("render", "render a grid or curve CSV to SVG");
    r->add_option("--data", render_in, "input CSV")->required();
    r->add_option("--out", render_out, "output SVG");
    r->add_flag("--log", render_log, "logarithmic y-axis for curves");
    r->add_option("--title", render_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*b) return cmd_benchmark(bench);
        if (*tv) return cmd_tail_verify(tail);
        if (*t) return cmd_train_marginal(tm);
        if (*s) return cmd_sample(model_path, sample_n, sample_seed, sample_out);
        if (*r) return cmd_render(render_in, render_out, render_log, render_title);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
