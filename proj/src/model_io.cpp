#include "cmflow/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cmflow::io {

namespace {

json side_to_json(const marginal::TailSide& s) {
    return {{"family", marginal::to_string(s.family)},
            {"mass", s.mass},
            {"params", {s.p1, s.p2}}};
}

marginal::TailSide side_from_json(const json& j) {
    marginal::TailSide s;
    s.family = marginal::tail_family_from_string(j.at("family").get<std::string>());
    s.mass = j.at("mass").get<double>();
    auto p = j.at("params");
    s.p1 = p.at(0).get<double>();
    s.p2 = p.size() > 1 ? p.at(1).get<double>() : 1.0;
    return s;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
    return v;
}

double num_or_inf(const json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::invalid_argument("expected number or \"inf\"/\"-inf\"");
    }
    return j.get<double>();
}

json inf_or_num(double x) {
    if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
    return json(x);
}

}  // namespace

json to_json(const marginal::TailBelief& belief) {
    json j{{"alpha", inf_or_num(belief.alpha())}, {"beta", inf_or_num(belief.beta())}};
    if (belief.left()) j["left"] = side_to_json(*belief.left());
    if (belief.right()) j["right"] = side_to_json(*belief.right());
    return j;
}

marginal::TailBelief belief_from_json(const json& j) {
    std::optional<marginal::TailSide> left, right;
    if (j.contains("left") && !j.at("left").is_null()) left = side_from_json(j.at("left"));
    if (j.contains("right") && !j.at("right").is_null()) right = side_from_json(j.at("right"));
    return marginal::TailBelief(num_or_inf(j.at("alpha")), num_or_inf(j.at("beta")),
                                std::move(left), std::move(right));
}

json to_json(const flows::Ddsf& body) {
    return {{"widths", body.widths()}, {"raw", vec_to_json(body.raw())}};
}

flows::Ddsf ddsf_from_json(const json& j) {
    flows::Ddsf f(j.at("widths").get<std::vector<int>>());
    f.set_raw(vec_from_json(j.at("raw")));
    return f;
}

json to_json(const marginal::UnivariateMarginalFlow& flow) {
    return {{"belief", to_json(flow.belief())}, {"body", to_json(flow.body())}};
}

marginal::UnivariateMarginalFlow marginal_from_json(const json& j) {
    return marginal::UnivariateMarginalFlow(belief_from_json(j.at("belief")),
                                            ddsf_from_json(j.at("body")));
}

json to_json(const flows::RealNvp2& net) {
    return {{"depth", net.depth()},
            {"hidden", net.layer(0).conditioner.hidden()},
            {"constrained", net.constrained()},
            {"s_max", net.layer(0).s_max},
            {"raw", vec_to_json(net.raw())}};
}

flows::RealNvp2 nvp_from_json(const json& j) {
    auto net = flows::RealNvp2::make(j.at("depth").get<int>(), j.at("hidden").get<int>(),
                                     j.at("constrained").get<bool>(), 0,
                                     j.at("s_max").get<double>());
    net.set_raw(vec_from_json(j.at("raw")));
    return net;
}

json to_json(const flows::CopulaFlow& flow) {
    return {{"type", "copula_flow"}, {"net", to_json(flow.net())}, {"eps", flow.eps()}};
}

flows::CopulaFlow copula_flow_from_json(const json& j) {
    return flows::CopulaFlow(nvp_from_json(j.at("net")), j.at("eps").get<double>());
}

json to_json(const model::CmFlow& flow) {
    return {{"type", "cm_flow"},
            {"marginal1", to_json(flow.marginal().component(0))},
            {"marginal2", to_json(flow.marginal().component(1))},
            {"copula", to_json(flow.copula())}};
}

model::CmFlow cm_flow_from_json(const json& j) {
    marginal::BivariateMarginalFlow m(marginal_from_json(j.at("marginal1")),
                                      marginal_from_json(j.at("marginal2")));
    return model::CmFlow(std::move(m), copula_flow_from_json(j.at("copula")));
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    json j;
    in >> j;
    return j;
}

void write_grid_csv(const std::string& path, int mesh, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != mesh * mesh)
        throw std::invalid_argument("grid csv: size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "x,y,value\n";
    out.precision(17);
    for (int iy = 0; iy < mesh; ++iy)
        for (int ix = 0; ix < mesh; ++ix)
            out << (ix + 0.5) / mesh << ',' << (iy + 0.5) / mesh << ','
                << values[static_cast<std::size_t>(iy) * mesh + ix] << '\n';
}

GridCsv read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::string line;
    std::getline(in, line);  // header
    GridCsv g;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string x, y, v;
        std::getline(ss, x, ',');
        std::getline(ss, y, ',');
        std::getline(ss, v, ',');
        g.values.push_back(std::stod(v));
    }
    int mesh = static_cast<int>(std::lround(std::sqrt(static_cast<double>(g.values.size()))));
    if (mesh * mesh != static_cast<int>(g.values.size()))
        throw std::runtime_error("grid csv: not a square grid");
    g.mesh = mesh;
    return g;
}

void write_columns_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size())
        throw std::invalid_argument("columns csv: header/column mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? ',' : '\n');
    std::size_t rows = columns.empty() ? 0 : columns[0].size();
    for (const auto& c : columns)
        if (c.size() != rows) throw std::invalid_argument("columns csv: ragged columns");
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << columns[i][r] << (i + 1 < columns.size() ? ',' : '\n');
}

ColumnsCsv read_columns_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    ColumnsCsv out;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("columns csv: empty file " + path);
    std::istringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) out.header.push_back(tok);
    out.columns.resize(out.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::size_t i = 0;
        while (std::getline(ss, tok, ',') && i < out.columns.size())
            out.columns[i++].push_back(std::stod(tok));
    }
    return out;
}

std::vector<double> read_scalar_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(std::stod(line));
    }
    return out;
}

}  // namespace cmflow::io
