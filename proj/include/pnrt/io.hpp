#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pnrt/design.hpp"
#include "pnrt/engines.hpp"
#include "pnrt/network.hpp"
#include "pnrt/sequential.hpp"
#include "pnrt/sim.hpp"
#include "pnrt/stats.hpp"

namespace pnrt::io {

using nlohmann::json;

// Dense distance matrix, optionally headed by a unit id row.
ProximityStructure load_matrix_csv(const std::string& path);

// id,x,y per row; Euclidean distances.
ProximityStructure load_coordinates_csv(const std::string& path);

// Long-form interval labels (assignment_id,unit_id,interval_label) plus a
// sidecar declaring the threshold grid and the assignment pool.
ProximityStructure load_membership(const std::string& csv_path, const std::string& sidecar_path);

// unit_id,y[,covariate...] with a header; rows are returned in unit_order.
OutcomeData load_outcomes_csv(const std::string& path, const std::vector<std::string>& unit_order,
                              std::vector<std::string>* covariate_names = nullptr);

// unit_id,treated rows, returned in unit_order.
AssignmentVector load_assignment_csv(const std::string& path,
                                     const std::vector<std::string>& unit_order);

// assignment_id,bits rows; bit k follows the network's unit order.
PoolDesign load_pool_csv(const std::string& path, std::size_t n_units);

// Canonical label of an exposure category on a grid.
std::string interval_label(const std::vector<double>& grid, std::uint8_t category);

// Distance-backed source reduced to label form for a finite pool.
MembershipTable membership_from_distances(const ProximityStructure& G,
                                          const std::vector<AssignmentVector>& pool,
                                          const std::vector<std::string>& pool_ids,
                                          const std::vector<double>& thresholds);

void write_membership(const MembershipTable& table, const std::string& csv_path,
                      const std::string& sidecar_path);

json test_result_json(const TestResult& res);
json sequential_result_json(const SequentialResult& res);
json two_step_result_json(const TwoStepResult& res);
json descent_result_json(const DescentResult& res);
json power_study_json(const PowerStudy& study);

std::string power_study_csv(const PowerStudy& study);
std::string imputability_grid_csv(const ImputabilityGrid& grid);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
json parse_json_file(const std::string& path);

}  // namespace pnrt::io
