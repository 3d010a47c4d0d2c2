#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cmflow/cm_flow.hpp"

namespace cmflow::io {

using nlohmann::json;

json to_json(const marginal::TailBelief& belief);
marginal::TailBelief belief_from_json(const json& j);

json to_json(const flows::Ddsf& body);
flows::Ddsf ddsf_from_json(const json& j);

json to_json(const marginal::UnivariateMarginalFlow& flow);
marginal::UnivariateMarginalFlow marginal_from_json(const json& j);

json to_json(const flows::RealNvp2& net);
flows::RealNvp2 nvp_from_json(const json& j);

json to_json(const flows::CopulaFlow& flow);
flows::CopulaFlow copula_flow_from_json(const json& j);

json to_json(const model::CmFlow& flow);
model::CmFlow cm_flow_from_json(const json& j);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

// Grid CSV: header "x,y,value", row-major over a mesh x mesh grid of cell
// centers on [0,1]^2.
void write_grid_csv(const std::string& path, int mesh, const std::vector<double>& values);

struct GridCsv {
    int mesh = 0;
    std::vector<double> values;  // row-major
};
GridCsv read_grid_csv(const std::string& path);

// Column-oriented CSV with one header row.
void write_columns_csv(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

struct ColumnsCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};
ColumnsCsv read_columns_csv(const std::string& path);

std::vector<double> read_scalar_csv(const std::string& path);  // one float per line

}  // namespace cmflow::io
