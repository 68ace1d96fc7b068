#include "pnrt/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pnrt::io {

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string loc(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

struct Csv {
  std::string path;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // original line number per row
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  Csv csv;
  csv.path = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    // Quote-aware split: a cell starting with '"' runs to the matching quote,
    // with "" meaning a literal quote. Unquoted cells are trimmed.
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos < line.size() && line[pos] == '"') {
        std::string cell;
        ++pos;
        while (true) {
          if (pos >= line.size())
            throw InputError(loc(path, lineno) + ": unterminated quoted cell");
          if (line[pos] == '"') {
            if (pos + 1 < line.size() && line[pos + 1] == '"') {
              cell += '"';
              pos += 2;
            } else {
              ++pos;
              break;
            }
          } else {
            cell += line[pos++];
          }
        }
        cells.push_back(std::move(cell));
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos < line.size() && line[pos] != ',')
          throw InputError(loc(path, lineno) + ": stray text after a quoted cell");
      } else {
        std::size_t comma = line.find(',', pos);
        std::size_t end = comma == std::string::npos ? line.size() : comma;
        cells.push_back(trim(line.substr(pos, end - pos)));
        pos = end;
      }
      if (pos >= line.size()) break;
      ++pos;  // skip the comma
      if (pos == line.size()) {
        cells.emplace_back();
        break;
      }
    }
    csv.rows.push_back(std::move(cells));
    csv.lines.push_back(lineno);
  }
  if (csv.rows.empty()) throw InputError(path + " is empty");
  return csv;
}

// Wraps a cell in quotes when it would otherwise break the comma framing.
std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

bool try_parse_double(const std::string& s, double* out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  if (t == "inf" || t == "Inf" || t == "INF") {
    *out = kInf;
    return true;
  }
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

double parse_double(const Csv& csv, std::size_t row, std::size_t col) {
  double v;
  if (!try_parse_double(csv.rows[row][col], &v))
    throw InputError(loc(csv.path, csv.lines[row]) + ": '" + csv.rows[row][col] +
                     "' is not a number");
  return v;
}

void require_columns(const Csv& csv, std::size_t row, std::size_t want) {
  if (csv.rows[row].size() != want)
    throw InputError(loc(csv.path, csv.lines[row]) + ": expected " + std::to_string(want) +
                     " columns, found " + std::to_string(csv.rows[row].size()));
}

AssignmentVector parse_bits(const std::string& bits, std::size_t n, const std::string& where) {
  if (bits.size() != n)
    throw InputError(where + ": assignment has " + std::to_string(bits.size()) +
                     " digits, expected " + std::to_string(n));
  AssignmentVector d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (bits[i] == '1')
      d.set(i, true);
    else if (bits[i] != '0')
      throw InputError(where + ": assignment digits must be 0 or 1");
  }
  return d;
}

const char* decision_name(Decision d) {
  switch (d) {
    case Decision::reject: return "reject";
    case Decision::no_reject: return "no_reject";
    case Decision::no_decision: return "no_decision";
  }
  return "?";
}

// Infinities are legal statistic values but not legal JSON numbers.
json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
  if (!out) throw InputError("failed writing " + path);
}

json parse_json_file(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

ProximityStructure load_matrix_csv(const std::string& path) {
  Csv csv = read_csv(path);
  std::size_t n_cols = csv.rows[0].size();
  // A non-numeric first row is a unit id header.
  double probe;
  bool has_header = !try_parse_double(csv.rows[0][0], &probe);
  std::vector<std::string> ids;
  std::size_t first = 0;
  if (has_header) {
    ids = csv.rows[0];
    first = 1;
  }
  std::size_t n = csv.rows.size() - first;
  if (n != n_cols)
    throw InputError(path + ": matrix is " + std::to_string(n) + " rows by " +
                     std::to_string(n_cols) + " columns; it must be square");
  std::vector<double> m(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    require_columns(csv, first + r, n);
    for (std::size_t c = 0; c < n; ++c) m[r * n + c] = parse_double(csv, first + r, c);
  }
  return ProximityStructure::dense(std::move(m), n, std::move(ids));
}

ProximityStructure load_coordinates_csv(const std::string& path) {
  Csv csv = read_csv(path);
  require_columns(csv, 0, 3);
  if (csv.rows[0][0] != "id" || csv.rows[0][1] != "x" || csv.rows[0][2] != "y")
    throw InputError(loc(path, csv.lines[0]) + ": header must be id,x,y");
  std::vector<std::string> ids;
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    require_columns(csv, r, 3);
    ids.push_back(csv.rows[r][0]);
    xs.push_back(parse_double(csv, r, 1));
    ys.push_back(parse_double(csv, r, 2));
  }
  return ProximityStructure::coordinates(std::move(xs), std::move(ys), std::move(ids));
}

std::string interval_label(const std::vector<double>& grid, std::uint8_t category) {
  std::size_t K = grid.size() - 1;
  if (category == 0) return "[0," + fmt_g(grid[0]) + "]";
  if (category <= K) return "(" + fmt_g(grid[category - 1]) + "," + fmt_g(grid[category]) + "]";
  return "(" + fmt_g(grid[K]) + ",inf)";
}

ProximityStructure load_membership(const std::string& csv_path, const std::string& sidecar_path) {
  json side = parse_json_file(sidecar_path);
  if (!side.is_object()) throw InputError(sidecar_path + ": sidecar must be a JSON object");
  for (auto& [key, _] : side.items())
    if (key != "thresholds" && key != "units" && key != "assignments")
      throw InputError(sidecar_path + ": unrecognized key '" + key + "'");
  if (!side.contains("thresholds") || !side.contains("units") || !side.contains("assignments"))
    throw InputError(sidecar_path + ": sidecar needs thresholds, units, and assignments");

  MembershipTable table;
  for (const auto& t : side["thresholds"]) {
    if (!t.is_number()) throw InputError(sidecar_path + ": thresholds must be numbers");
    table.thresholds.push_back(t.get<double>());
  }
  for (const auto& u : side["units"]) {
    if (!u.is_string()) throw InputError(sidecar_path + ": unit ids must be strings");
    table.unit_ids.push_back(u.get<std::string>());
  }
  std::size_t n = table.unit_ids.size();
  std::unordered_map<std::string, std::size_t> unit_at;
  for (std::size_t i = 0; i < n; ++i)
    if (!unit_at.emplace(table.unit_ids[i], i).second)
      throw InputError(sidecar_path + ": duplicate unit id " + table.unit_ids[i]);

  bool derive_bits = false;
  std::unordered_map<std::string, std::size_t> assignment_at;
  for (const auto& a : side["assignments"]) {
    if (!a.is_object()) throw InputError(sidecar_path + ": assignments must be objects");
    for (auto& [key, _] : a.items())
      if (key != "id" && key != "bits")
        throw InputError(sidecar_path + ": unrecognized key '" + key + "' in an assignment");
    if (!a.contains("id")) throw InputError(sidecar_path + ": every assignment needs an id");
    std::string id = a["id"].get<std::string>();
    if (!assignment_at.emplace(id, table.assignment_ids.size()).second)
      throw InputError(sidecar_path + ": duplicate assignment id " + id);
    table.assignment_ids.push_back(id);
    if (a.contains("bits")) {
      table.pool.push_back(parse_bits(a["bits"].get<std::string>(), n, sidecar_path));
    } else if (table.thresholds.empty() || table.thresholds[0] != 0.0) {
      throw InputError(sidecar_path + ": assignment " + id +
                       " needs explicit bits because the grid does not start at 0");
    } else {
      derive_bits = true;
      table.pool.emplace_back(n);  // filled from the innermost labels below
    }
  }

  std::size_t n_assign = table.assignment_ids.size();
  std::size_t n_cat = table.thresholds.size() + 1;
  std::vector<std::string> labels(n_cat);
  std::unordered_map<std::string, std::uint8_t> label_at;
  for (std::size_t c = 0; c < n_cat; ++c) {
    labels[c] = interval_label(table.thresholds, static_cast<std::uint8_t>(c));
    label_at[labels[c]] = static_cast<std::uint8_t>(c);
  }

  Csv csv = read_csv(csv_path);
  require_columns(csv, 0, 3);
  if (csv.rows[0][0] != "assignment_id" || csv.rows[0][1] != "unit_id" ||
      csv.rows[0][2] != "interval_label")
    throw InputError(loc(csv_path, csv.lines[0]) +
                     ": header must be assignment_id,unit_id,interval_label");
  table.category.assign(n_assign, std::vector<std::uint8_t>(n, 255));
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    require_columns(csv, r, 3);
    auto a_it = assignment_at.find(csv.rows[r][0]);
    if (a_it == assignment_at.end())
      throw InputError(loc(csv_path, csv.lines[r]) + ": assignment id '" + csv.rows[r][0] +
                       "' is not declared in the sidecar");
    auto u_it = unit_at.find(csv.rows[r][1]);
    if (u_it == unit_at.end())
      throw InputError(loc(csv_path, csv.lines[r]) + ": unit id '" + csv.rows[r][1] +
                       "' is not declared in the sidecar");
    auto l_it = label_at.find(csv.rows[r][2]);
    if (l_it == label_at.end())
      throw InputError(loc(csv_path, csv.lines[r]) + ": interval label '" + csv.rows[r][2] +
                       "' is not on the declared grid");
    auto& cell = table.category[a_it->second][u_it->second];
    if (cell != 255)
      throw InputError(loc(csv_path, csv.lines[r]) + ": duplicate row for assignment '" +
                       csv.rows[r][0] + "', unit '" + csv.rows[r][1] + "'");
    cell = l_it->second;
  }
  for (std::size_t a = 0; a < n_assign; ++a)
    for (std::size_t i = 0; i < n; ++i)
      if (table.category[a][i] == 255)
        throw InputError(csv_path + ": no interval label for assignment '" +
                         table.assignment_ids[a] + "', unit '" + table.unit_ids[i] + "'");

  if (derive_bits) {
    // Grid starts at 0: the innermost class is exactly the treated set.
    for (std::size_t a = 0; a < n_assign; ++a)
      for (std::size_t i = 0; i < n; ++i)
        if (table.category[a][i] == 0) table.pool[a].set(i, true);
  }
  return ProximityStructure::membership(std::move(table));
}

OutcomeData load_outcomes_csv(const std::string& path, const std::vector<std::string>& unit_order,
                              std::vector<std::string>* covariate_names) {
  Csv csv = read_csv(path);
  const auto& header = csv.rows[0];
  if (header.size() < 2 || header[0] != "unit_id" || header[1] != "y")
    throw InputError(loc(path, csv.lines[0]) + ": header must start with unit_id,y");
  std::size_t n_cov = header.size() - 2;
  if (covariate_names) covariate_names->assign(header.begin() + 2, header.end());

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    require_columns(csv, r, header.size());
    if (!row_of.emplace(csv.rows[r][0], r).second)
      throw InputError(loc(path, csv.lines[r]) + ": duplicate unit id " + csv.rows[r][0]);
  }
  if (row_of.size() != unit_order.size())
    throw InputError(path + ": has " + std::to_string(row_of.size()) + " units, the network has " +
                     std::to_string(unit_order.size()));
  OutcomeData data;
  data.n_covariates = n_cov;
  data.unit_ids = unit_order;
  data.y.resize(unit_order.size());
  data.x.resize(unit_order.size() * n_cov);
  for (std::size_t i = 0; i < unit_order.size(); ++i) {
    auto it = row_of.find(unit_order[i]);
    if (it == row_of.end())
      throw InputError(path + ": missing outcome row for unit " + unit_order[i]);
    data.y[i] = parse_double(csv, it->second, 1);
    for (std::size_t c = 0; c < n_cov; ++c)
      data.x[i * n_cov + c] = parse_double(csv, it->second, 2 + c);
  }
  data.validate();
  return data;
}

AssignmentVector load_assignment_csv(const std::string& path,
                                     const std::vector<std::string>& unit_order) {
  Csv csv = read_csv(path);
  require_columns(csv, 0, 2);
  if (csv.rows[0][0] != "unit_id" || csv.rows[0][1] != "treated")
    throw InputError(loc(path, csv.lines[0]) + ": header must be unit_id,treated");
  std::unordered_map<std::string, bool> treated;
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    require_columns(csv, r, 2);
    const std::string& flag = csv.rows[r][1];
    if (flag != "0" && flag != "1")
      throw InputError(loc(path, csv.lines[r]) + ": treated must be 0 or 1");
    if (!treated.emplace(csv.rows[r][0], flag == "1").second)
      throw InputError(loc(path, csv.lines[r]) + ": duplicate unit id " + csv.rows[r][0]);
  }
  if (treated.size() != unit_order.size())
    throw InputError(path + ": has " + std::to_string(treated.size()) + " units, the network has " +
                     std::to_string(unit_order.size()));
  AssignmentVector d(unit_order.size());
  for (std::size_t i = 0; i < unit_order.size(); ++i) {
    auto it = treated.find(unit_order[i]);
    if (it == treated.end()) throw InputError(path + ": missing row for unit " + unit_order[i]);
    d.set(i, it->second);
  }
  return d;
}

PoolDesign load_pool_csv(const std::string& path, std::size_t n_units) {
  Csv csv = read_csv(path);
  require_columns(csv, 0, 2);
  if (csv.rows[0][0] != "assignment_id" || csv.rows[0][1] != "bits")
    throw InputError(loc(path, csv.lines[0]) + ": header must be assignment_id,bits");
  PoolDesign pool;
  for (std::size_t r = 1; r < csv.rows.size(); ++r) {
    require_columns(csv, r, 2);
    pool.ids.push_back(csv.rows[r][0]);
    pool.assignments.push_back(parse_bits(csv.rows[r][1], n_units, loc(path, csv.lines[r])));
  }
  return pool;
}

MembershipTable membership_from_distances(const ProximityStructure& G,
                                          const std::vector<AssignmentVector>& pool,
                                          const std::vector<std::string>& pool_ids,
                                          const std::vector<double>& thresholds) {
  DistanceThresholds check(thresholds);  // validates the grid
  if (pool.size() != pool_ids.size())
    throw InputError("pool ids do not match the pool size");
  MembershipTable table;
  table.thresholds = thresholds;
  table.unit_ids = G.unit_ids();
  table.assignment_ids = pool_ids;
  table.pool = pool;
  std::size_t K = thresholds.size() - 1;
  for (const auto& d : pool) {
    auto e = G.exposure_profile(d);
    std::vector<std::uint8_t> cat(G.size());
    for (std::size_t i = 0; i < G.size(); ++i) {
      std::uint8_t c = 0;
      while (c <= K && e[i] > thresholds[c]) ++c;
      cat[i] = c;  // c == K+1 means beyond the grid
    }
    table.category.push_back(std::move(cat));
  }
  return table;
}

void write_membership(const MembershipTable& table, const std::string& csv_path,
                      const std::string& sidecar_path) {
  std::ostringstream csv;
  csv << "assignment_id,unit_id,interval_label\n";
  for (std::size_t a = 0; a < table.assignment_ids.size(); ++a)
    for (std::size_t i = 0; i < table.unit_ids.size(); ++i)
      csv << csv_cell(table.assignment_ids[a]) << ',' << csv_cell(table.unit_ids[i]) << ','
          << csv_cell(interval_label(table.thresholds, table.category[a][i])) << '\n';
  write_file(csv_path, csv.str());

  json side;
  side["thresholds"] = table.thresholds;
  side["units"] = table.unit_ids;
  json assignments = json::array();
  for (std::size_t a = 0; a < table.assignment_ids.size(); ++a) {
    json entry;
    entry["id"] = table.assignment_ids[a];
    entry["bits"] = table.pool[a].to_bitstring();
    assignments.push_back(entry);
  }
  side["assignments"] = assignments;
  write_file(sidecar_path, side.dump(2) + "\n");
}

json test_result_json(const TestResult& res) {
  json j;
  j["engine"] = engine_name(res.engine);
  j["mode"] = res.mode == Mode::exhaustive ? "exhaustive" : "monte_carlo";
  j["pval"] = res.pval;
  j["resamples"] = res.resamples;
  j["n_ge"] = res.n_ge;
  j["n_tie"] = res.n_tie;
  j["decision"] = decision_name(res.decision);
  j["alpha"] = res.alpha;
  j["level_used"] = res.level_used;
  if (res.engine == EngineKind::pnrt_min) j["stat_threshold"] = json_number(res.stat_threshold);
  j["seed"] = res.seed;
  j["warnings"] = res.warnings;
  j["diagnostics"] = {{"empty_group", res.diagnostics.empty_group},
                      {"ill_conditioned", res.diagnostics.ill_conditioned},
                      {"zero_propensity", res.diagnostics.zero_propensity}};
  json draws = json::array();
  for (const auto& d : res.draws)
    draws.push_back({{"t", json_number(d.t)}, {"ref", json_number(d.t_ref)}, {"w", d.weight}});
  j["draws"] = draws;
  return j;
}

namespace {

json step_json(const StepOutcome& s) {
  json j;
  j["k"] = s.k;
  j["eps_s"] = s.eps_s;
  j["eps_c"] = json_number(s.eps_c);
  j["result"] = test_result_json(s.result);
  return j;
}

}  // namespace

json sequential_result_json(const SequentialResult& res) {
  json j;
  j["k_hat"] = res.k_hat;
  j["boundary"] = res.boundary;
  j["stopped_no_decision"] = res.stopped_no_decision;
  j["warnings"] = res.warnings;
  json steps = json::array();
  for (const auto& s : res.steps) steps.push_back(step_json(s));
  j["steps"] = steps;
  return j;
}

json two_step_result_json(const TwoStepResult& res) {
  json j;
  j["pretest"] = sequential_result_json(res.pretest);
  j["k_target"] = res.k_target;
  j["suppressed"] = res.suppressed;
  j["final"] = test_result_json(res.final);
  return j;
}

json descent_result_json(const DescentResult& res) {
  json j;
  j["k_hat"] = res.k_hat;
  j["boundary"] = res.boundary;
  j["stopped_no_decision"] = res.stopped_no_decision;
  j["warnings"] = res.warnings;
  json steps = json::array();
  for (const auto& s : res.steps) steps.push_back(step_json(s));
  j["steps"] = steps;
  return j;
}

json power_study_json(const PowerStudy& study) {
  json rows = json::array();
  for (const auto& c : study.cells) {
    json j;
    j["engine"] = engine_name(c.engine);
    j["unadjusted"] = c.unadjusted;
    j["level"] = c.level;
    j["tau"] = c.tau;
    j["hypothesis"] = c.hypothesis;
    j["rejections"] = c.rejections;
    j["no_decisions"] = c.no_decisions;
    j["sims"] = c.sims;
    j["rate"] = c.rate;
    j["se"] = c.se;
    rows.push_back(j);
  }
  json j;
  j["cells"] = rows;
  j["notes"] = study.notes;
  return j;
}

std::string power_study_csv(const PowerStudy& study) {
  std::ostringstream os;
  os << "engine,level,unadjusted,tau,hypothesis,rejections,no_decisions,sims,rate,se\n";
  char buf[256];
  for (const auto& c : study.cells) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%d,%.10g,%zu,%zu,%zu,%zu,%.10g,%.10g\n",
                  engine_name(c.engine), c.level, c.unadjusted ? 1 : 0, c.tau, c.hypothesis,
                  c.rejections, c.no_decisions, c.sims, c.rate, c.se);
    os << buf;
  }
  return os.str();
}

std::string imputability_grid_csv(const ImputabilityGrid& grid) {
  std::ostringstream os;
  os << "assignment";
  for (const auto& id : grid.unit_ids) os << ',' << csv_cell(id);
  os << '\n';
  for (std::size_t a = 0; a < grid.assignment_labels.size(); ++a) {
    os << csv_cell(grid.assignment_labels[a]);
    for (const auto& cell : grid.cells[a]) os << ',' << csv_cell(cell);
    os << '\n';
  }
  return os.str();
}

}  // namespace pnrt::io
