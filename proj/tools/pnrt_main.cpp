// Command line front end: single tests, threshold scans, synthetic data
// generation, power studies, and imputability grids, all driven by a JSON
// config. Reruns with the same config and seed produce byte-identical output.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "pnrt/engines.hpp"
#include "pnrt/io.hpp"
#include "pnrt/sequential.hpp"
#include "pnrt/sim.hpp"

using namespace pnrt;
using io::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InputError(where + " must be a JSON object");
  for (auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw InputError(where + ": unrecognized key '" + key + "'");
  }
}

const json& need(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw InputError(where + " needs '" + std::string(key) + "'");
  return obj[key];
}

double num(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + " must be a number");
  return v.get<double>();
}

std::size_t count_of(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw InputError(where + " must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::string str(const json& v, const std::string& where) {
  if (!v.is_string()) throw InputError(where + " must be a string");
  return v.get<std::string>();
}

std::vector<double> num_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(num(e, where));
  return out;
}

ProximityStructure load_network(const json& cfg) {
  const json& net = need(cfg, "config", "network");
  check_keys(net, "network", {"kind", "path", "sidecar"});
  std::string kind = str(need(net, "network", "kind"), "network.kind");
  std::string path = str(need(net, "network", "path"), "network.path");
  if (kind == "matrix") return io::load_matrix_csv(path);
  if (kind == "coordinates") return io::load_coordinates_csv(path);
  if (kind == "membership")
    return io::load_membership(path, str(need(net, "network", "sidecar"), "network.sidecar"));
  throw InputError("network.kind must be matrix, coordinates, or membership");
}

AssignmentMechanism load_design(const json& cfg, const ProximityStructure& G) {
  const json& d = need(cfg, "config", "design");
  check_keys(d, "design", {"kind", "p", "m", "strata", "counts", "path", "probs"});
  std::string kind = str(need(d, "design", "kind"), "design.kind");
  std::size_t n = G.size();
  if (kind == "bernoulli") {
    BernoulliDesign design;
    design.n = n;
    const json& p = need(d, "design", "p");
    if (p.is_number())
      design.probs = {p.get<double>()};
    else
      design.probs = num_list(p, "design.p");
    return AssignmentMechanism(design);
  }
  if (kind == "complete") {
    CompleteDesign design;
    design.n = n;
    design.m = count_of(need(d, "design", "m"), "design.m");
    return AssignmentMechanism(design);
  }
  if (kind == "stratified") {
    StratifiedDesign design;
    const json& strata = need(d, "design", "strata");
    if (!strata.is_array() || strata.size() != n)
      throw InputError("design.strata must list one stratum per unit");
    for (const auto& s : strata)
      design.strata.push_back(count_of(s, "design.strata"));
    for (const auto& c : need(d, "design", "counts"))
      design.m.push_back(count_of(c, "design.counts"));
    return AssignmentMechanism(design);
  }
  if (kind == "pool") {
    PoolDesign pool = io::load_pool_csv(str(need(d, "design", "path"), "design.path"), n);
    if (d.contains("probs")) pool.probs = num_list(d["probs"], "design.probs");
    return AssignmentMechanism(pool);
  }
  throw InputError("design.kind must be bernoulli, complete, stratified, or pool");
}

AssignmentVector load_observed(const json& cfg, const ProximityStructure& G) {
  const json& obs = need(cfg, "config", "observed");
  check_keys(obs, "observed", {"bits", "path"});
  if (obs.contains("bits")) {
    std::string bits = str(obs["bits"], "observed.bits");
    if (bits.size() != G.size())
      throw InputError("observed.bits has " + std::to_string(bits.size()) +
                       " digits, the network has " + std::to_string(G.size()) + " units");
    AssignmentVector d(G.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1')
        d.set(i, true);
      else if (bits[i] != '0')
        throw InputError("observed.bits must contain only 0 and 1");
    }
    return d;
  }
  if (obs.contains("path")) return io::load_assignment_csv(obs["path"], G.unit_ids());
  throw InputError("observed needs either 'bits' or 'path'");
}

StatKind parse_stat_kind(const std::string& s) {
  if (s == "diff_in_means") return StatKind::diff_in_means;
  if (s == "rank_diff") return StatKind::rank_diff;
  if (s == "regression_coefficient") return StatKind::regression_coefficient;
  throw InputError("statistic.kind must be diff_in_means, rank_diff, or regression_coefficient");
}

TieRule parse_tie_rule(const std::string& s) {
  if (s == "count_as_ge") return TieRule::count_as_ge;
  if (s == "half_discount") return TieRule::half_discount;
  if (s == "uniform_break") return TieRule::uniform_break;
  throw InputError("tie_rule must be count_as_ge, half_discount, or uniform_break");
}

struct StatRequest {
  StatisticSpec spec;
  bool residualize_outcomes = false;
  std::size_t propensity_draws = 2000;
  std::vector<std::string> covariate_names;
};

StatRequest parse_statistic(const json& cfg, const std::vector<std::string>& available_covs) {
  const json& s = need(cfg, "config", "statistic");
  check_keys(s, "statistic",
             {"kind", "sidedness", "eps_s", "eps_c", "covariates", "weighting", "propensity_draws",
              "residualize_outcomes", "pairwise_residuals"});
  StatRequest req;
  req.spec.kind = parse_stat_kind(str(need(s, "statistic", "kind"), "statistic.kind"));
  if (s.contains("sidedness")) {
    std::string side = str(s["sidedness"], "statistic.sidedness");
    if (side == "two_sided")
      req.spec.side = Sidedness::two_sided;
    else if (side == "one_sided_upper")
      req.spec.side = Sidedness::one_sided_upper;
    else
      throw InputError("statistic.sidedness must be two_sided or one_sided_upper");
  }
  req.spec.eps_s = num(need(s, "statistic", "eps_s"), "statistic.eps_s");
  if (s.contains("eps_c")) {
    if (s["eps_c"].is_string() && s["eps_c"].get<std::string>() == "inf")
      req.spec.eps_c = kInf;
    else
      req.spec.eps_c = num(s["eps_c"], "statistic.eps_c");
  }
  if (s.contains("covariates")) {
    for (const auto& c : s["covariates"]) {
      std::string name = str(c, "statistic.covariates");
      auto it = std::find(available_covs.begin(), available_covs.end(), name);
      if (it == available_covs.end())
        throw InputError("statistic.covariates: '" + name + "' is not a column in the outcome file");
      req.spec.covariates.push_back(static_cast<std::size_t>(it - available_covs.begin()));
      req.covariate_names.push_back(name);
    }
  }
  if (s.contains("weighting")) {
    std::string w = str(s["weighting"], "statistic.weighting");
    if (w == "inverse_propensity")
      req.spec.weighting = Weighting::inverse_propensity;
    else if (w != "none")
      throw InputError("statistic.weighting must be none or inverse_propensity");
  }
  if (s.contains("propensity_draws"))
    req.propensity_draws = count_of(s["propensity_draws"], "statistic.propensity_draws");
  if (s.contains("residualize_outcomes") && s["residualize_outcomes"].get<bool>())
    req.residualize_outcomes = true;
  if (s.contains("pairwise_residuals") && s["pairwise_residuals"].get<bool>())
    req.spec.pairwise_residuals = true;
  return req;
}

EngineConfig parse_engine(const json& cfg) {
  const json& e = need(cfg, "config", "engine");
  check_keys(e, "engine",
             {"name", "mode", "resamples", "alpha", "tie_rule", "unadjusted", "enumeration_cap",
              "store_draws", "store_draws_cap"});
  EngineConfig ec;
  std::string name = str(need(e, "engine", "name"), "engine.name");
  if (name == "frt")
    ec.engine = EngineKind::frt;
  else if (name == "naive_rt")
    ec.engine = EngineKind::naive_rt;
  else if (name == "pnrt_pair")
    ec.engine = EngineKind::pnrt_pair;
  else if (name == "pnrt_min")
    ec.engine = EngineKind::pnrt_min;
  else if (name == "crt")
    ec.engine = EngineKind::crt;
  else
    throw InputError("engine.name must be frt, naive_rt, pnrt_pair, pnrt_min, or crt");
  if (e.contains("mode")) {
    std::string mode = str(e["mode"], "engine.mode");
    if (mode == "monte_carlo")
      ec.mode = Mode::monte_carlo;
    else if (mode == "exhaustive")
      ec.mode = Mode::exhaustive;
    else
      throw InputError("engine.mode must be monte_carlo or exhaustive");
  }
  if (e.contains("resamples")) ec.resamples = count_of(e["resamples"], "engine.resamples");
  if (e.contains("alpha")) ec.alpha = num(e["alpha"], "engine.alpha");
  if (e.contains("tie_rule")) ec.tie_rule = parse_tie_rule(str(e["tie_rule"], "engine.tie_rule"));
  if (e.contains("unadjusted")) ec.unadjusted = e["unadjusted"].get<bool>();
  if (e.contains("enumeration_cap"))
    ec.enumeration_cap = count_of(e["enumeration_cap"], "engine.enumeration_cap");
  if (e.contains("store_draws")) ec.store_draws = e["store_draws"].get<bool>();
  if (e.contains("store_draws_cap"))
    ec.store_draws_cap = count_of(e["store_draws_cap"], "engine.store_draws_cap");
  return ec;
}

ConditioningEvent parse_event(const json& cfg, const ProximityStructure& G) {
  const json& e = need(cfg, "config", "event");
  check_keys(e, "event", {"focal_units", "assignments", "probs"});
  ConditioningEvent ev;
  const auto& ids = G.unit_ids();
  ev.focal_units = UnitSet(G.size());
  for (const auto& f : need(e, "event", "focal_units")) {
    std::string id = str(f, "event.focal_units");
    auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end())
      throw InputError("event.focal_units: '" + id + "' is not a unit in the network");
    ev.focal_units.add(static_cast<std::size_t>(it - ids.begin()));
  }
  for (const auto& a : need(e, "event", "assignments")) {
    std::string bits = str(a, "event.assignments");
    if (bits.size() != G.size())
      throw InputError("event.assignments: every assignment needs one digit per unit");
    AssignmentVector d(G.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == '1')
        d.set(i, true);
      else if (bits[i] != '0')
        throw InputError("event.assignments digits must be 0 or 1");
    }
    ev.assignments.push_back(std::move(d));
  }
  if (e.contains("probs")) ev.probs = num_list(e["probs"], "event.probs");
  return ev;
}

SimConfig parse_sim(const json& cfg) {
  const json& s = need(cfg, "config", "sim");
  check_keys(s, "sim",
             {"n", "n_hotspots", "n_treated", "mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy",
              "cluster_share", "cluster_scale", "thresholds", "base_shape", "base_scale",
              "hot_shape", "hot_scale", "direct_effect", "taus", "sims", "resamples", "pool_size",
              "hypotheses", "engines", "alpha", "tie_rule", "side", "stat", "redraw_schedule",
              "seed", "workers"});
  SimConfig sc;
  if (s.contains("n")) sc.n = count_of(s["n"], "sim.n");
  if (s.contains("n_hotspots")) sc.n_hotspots = count_of(s["n_hotspots"], "sim.n_hotspots");
  if (s.contains("n_treated")) sc.n_treated = count_of(s["n_treated"], "sim.n_treated");
  if (s.contains("mean_x")) sc.mean_x = num(s["mean_x"], "sim.mean_x");
  if (s.contains("mean_y")) sc.mean_y = num(s["mean_y"], "sim.mean_y");
  if (s.contains("cov_xx")) sc.cov_xx = num(s["cov_xx"], "sim.cov_xx");
  if (s.contains("cov_xy")) sc.cov_xy = num(s["cov_xy"], "sim.cov_xy");
  if (s.contains("cov_yy")) sc.cov_yy = num(s["cov_yy"], "sim.cov_yy");
  if (s.contains("cluster_share")) sc.cluster_share = num(s["cluster_share"], "sim.cluster_share");
  if (s.contains("cluster_scale")) sc.cluster_scale = num(s["cluster_scale"], "sim.cluster_scale");
  if (s.contains("thresholds")) sc.thresholds = num_list(s["thresholds"], "sim.thresholds");
  if (s.contains("base_shape")) sc.base_shape = num(s["base_shape"], "sim.base_shape");
  if (s.contains("base_scale")) sc.base_scale = num(s["base_scale"], "sim.base_scale");
  if (s.contains("hot_shape")) sc.hot_shape = num(s["hot_shape"], "sim.hot_shape");
  if (s.contains("hot_scale")) sc.hot_scale = num(s["hot_scale"], "sim.hot_scale");
  if (s.contains("direct_effect")) sc.direct_effect = num(s["direct_effect"], "sim.direct_effect");
  if (s.contains("taus")) sc.taus = num_list(s["taus"], "sim.taus");
  if (s.contains("sims")) sc.sims = count_of(s["sims"], "sim.sims");
  if (s.contains("resamples")) sc.resamples = count_of(s["resamples"], "sim.resamples");
  if (s.contains("pool_size")) sc.pool_size = count_of(s["pool_size"], "sim.pool_size");
  if (s.contains("hypotheses")) {
    sc.hypotheses.clear();
    for (const auto& h : s["hypotheses"]) sc.hypotheses.push_back(count_of(h, "sim.hypotheses"));
  }
  if (s.contains("engines")) {
    sc.engines.clear();
    for (const auto& e : s["engines"]) {
      std::string name = str(e, "sim.engines");
      if (name == "frt")
        sc.engines.push_back(EngineKind::frt);
      else if (name == "naive_rt")
        sc.engines.push_back(EngineKind::naive_rt);
      else if (name == "pnrt_pair")
        sc.engines.push_back(EngineKind::pnrt_pair);
      else if (name == "pnrt_min")
        sc.engines.push_back(EngineKind::pnrt_min);
      else
        throw InputError("sim.engines: unknown engine '" + name + "'");
    }
  }
  if (s.contains("alpha")) sc.alpha = num(s["alpha"], "sim.alpha");
  if (s.contains("tie_rule")) sc.tie_rule = parse_tie_rule(str(s["tie_rule"], "sim.tie_rule"));
  if (s.contains("side")) {
    std::string side = str(s["side"], "sim.side");
    if (side == "two_sided")
      sc.side = Sidedness::two_sided;
    else if (side == "one_sided_upper")
      sc.side = Sidedness::one_sided_upper;
    else
      throw InputError("sim.side must be two_sided or one_sided_upper");
  }
  if (s.contains("stat")) sc.stat = parse_stat_kind(str(s["stat"], "sim.stat"));
  if (s.contains("redraw_schedule")) sc.redraw_schedule = s["redraw_schedule"].get<bool>();
  if (s.contains("seed")) sc.seed = s["seed"].get<std::uint64_t>();
  if (s.contains("workers")) sc.workers = count_of(s["workers"], "sim.workers");
  return sc;
}

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON config file")->required();
  cmd->add_option("--seed", args->seed, "override the config seed");
  cmd->add_option("--workers", args->workers, "override worker count (0 = all cores)");
  cmd->add_option("--out", args->out, "output path (default: stdout)");
}

void emit(const CommonArgs& args, const std::string& text) {
  if (args.out.empty())
    std::cout << text;
  else
    io::write_file(args.out, text);
}

// The emitted artifact embeds the fully resolved config so a rerun needs no
// other state. No timestamps: identical runs must be byte identical.
json wrap_output(const json& cfg, json result) {
  json out;
  out["config"] = cfg;
  out["result"] = std::move(result);
  return out;
}

std::string render_test_text(const TestResult& res) {
  std::ostringstream os;
  os << "engine:    " << engine_name(res.engine) << "\n"
     << "mode:      " << (res.mode == Mode::exhaustive ? "exhaustive" : "monte_carlo") << "\n"
     << "p-value:   " << res.pval << "\n"
     << "decision:  "
     << (res.decision == Decision::reject
             ? "reject"
             : res.decision == Decision::no_reject ? "no_reject" : "no_decision")
     << " at level " << res.level_used << "\n"
     << "resamples: " << res.resamples << "\n";
  for (const auto& w : res.warnings) os << "warning:   " << w << "\n";
  return os.str();
}

int cmd_test(CommonArgs& args) {
  json cfg = io::parse_json_file(args.config_path);
  check_keys(cfg, "config",
             {"network", "outcomes", "design", "observed", "statistic", "engine", "event", "seed",
              "workers"});
  if (args.seed) cfg["seed"] = *args.seed;
  if (args.workers) cfg["workers"] = *args.workers;

  ProximityStructure G = load_network(cfg);
  std::vector<std::string> cov_names;
  const json& oc = need(cfg, "config", "outcomes");
  check_keys(oc, "outcomes", {"path"});
  OutcomeData data =
      io::load_outcomes_csv(str(need(oc, "outcomes", "path"), "outcomes.path"), G.unit_ids(),
                            &cov_names);
  AssignmentMechanism mech = load_design(cfg, G);
  AssignmentVector d_obs = load_observed(cfg, G);
  StatRequest stat = parse_statistic(cfg, cov_names);
  EngineConfig engine = parse_engine(cfg);
  if (cfg.contains("seed")) engine.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("workers")) engine.workers = count_of(cfg["workers"], "workers");

  if (stat.residualize_outcomes) {
    data = residualize(data, stat.spec.covariates);
    stat.spec.covariates.clear();
  }
  if (stat.spec.weighting == Weighting::inverse_propensity) {
    stat.spec.propensity = std::make_shared<PropensityTable>(exposure_propensity(
        mech, G, stat.spec.eps_s, stat.spec.eps_c, stat.propensity_draws, engine.seed));
  }

  TestResult res;
  if (engine.engine == EngineKind::crt) {
    ConditioningEvent event = parse_event(cfg, G);
    res = run_crt(engine, stat.spec, data, d_obs, event, G);
  } else {
    res = run_test(engine, stat.spec, data, d_obs, mech, G);
  }

  if (args.format == "text") {
    emit(args, render_test_text(res));
  } else {
    emit(args, wrap_output(cfg, io::test_result_json(res)).dump(2) + "\n");
  }
  return 0;
}

int cmd_sequential(CommonArgs& args) {
  json cfg = io::parse_json_file(args.config_path);
  check_keys(cfg, "config",
             {"network", "outcomes", "design", "observed", "statistic", "engine", "thresholds",
              "procedure", "k_target", "seed", "workers"});
  if (args.seed) cfg["seed"] = *args.seed;
  if (args.workers) cfg["workers"] = *args.workers;

  ProximityStructure G = load_network(cfg);
  std::vector<std::string> cov_names;
  const json& oc = need(cfg, "config", "outcomes");
  check_keys(oc, "outcomes", {"path"});
  OutcomeData data =
      io::load_outcomes_csv(str(need(oc, "outcomes", "path"), "outcomes.path"), G.unit_ids(),
                            &cov_names);
  AssignmentMechanism mech = load_design(cfg, G);
  AssignmentVector d_obs = load_observed(cfg, G);
  StatRequest stat = parse_statistic(cfg, cov_names);
  if (stat.residualize_outcomes) {
    data = residualize(data, stat.spec.covariates);
    stat.spec.covariates.clear();
  }

  SequentialConfig sc;
  sc.engine = parse_engine(cfg);
  if (cfg.contains("seed")) sc.engine.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("workers")) sc.engine.workers = count_of(cfg["workers"], "workers");
  sc.statistic = stat.spec;
  sc.thresholds = num_list(need(cfg, "config", "thresholds"), "thresholds");

  std::string procedure = cfg.contains("procedure") ? str(cfg["procedure"], "procedure") : "scan";
  json result;
  if (procedure == "scan") {
    result = io::sequential_result_json(sequential_test(sc, data, d_obs, mech, G));
  } else if (procedure == "pretest") {
    std::size_t k_target = count_of(need(cfg, "config", "k_target"), "k_target");
    result = io::two_step_result_json(two_step_pretest(sc, k_target, data, d_obs, mech, G));
  } else if (procedure == "descent") {
    result = io::descent_result_json(pure_control_descent(sc, data, d_obs, mech, G));
  } else {
    throw InputError("procedure must be scan, pretest, or descent");
  }
  emit(args, wrap_output(cfg, std::move(result)).dump(2) + "\n");
  return 0;
}

int cmd_simulate(CommonArgs& args, double tau) {
  json cfg = io::parse_json_file(args.config_path);
  check_keys(cfg, "config", {"sim", "seed", "workers"});
  if (args.seed) cfg["seed"] = *args.seed;
  SimConfig sc = parse_sim(cfg);
  if (cfg.contains("seed")) sc.seed = cfg["seed"].get<std::uint64_t>();
  sc.validate();
  if (args.out.empty()) throw InputError("simulate needs --out <directory>");
  std::filesystem::create_directories(args.out);

  SyntheticNetwork net = gen_network(sc, sc.seed);
  AssignmentMechanism mech = net.design(sc.n_treated);
  Schedule sched = gen_schedule(sc, net.hotspots, tau, derive_key(sc.seed, salt::schedule));
  Rng obs_rng = Rng::stream(sc.seed, salt::observed);
  AssignmentVector d_obs = mech.sample(obs_rng);
  std::vector<double> y = sched.outcomes_for(d_obs, net.G);

  std::ostringstream coords, outcomes, observed, hotspots;
  coords << "id,x,y\n";
  outcomes << "unit_id,y\n";
  observed << "unit_id,treated\n";
  hotspots << "unit_id,hotspot\n";
  char buf[128];
  const auto& ids = net.G.unit_ids();
  std::vector<bool> is_hot(sc.n, false);
  net.hotspots.for_each([&](std::size_t h) { is_hot[h] = true; });
  for (std::size_t i = 0; i < sc.n; ++i) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", ids[i].c_str(), net.xs[i], net.ys[i]);
    coords << buf;
    std::snprintf(buf, sizeof(buf), "%s,%.17g\n", ids[i].c_str(), y[i]);
    outcomes << buf;
    observed << ids[i] << ',' << (d_obs.treated(i) ? 1 : 0) << '\n';
    hotspots << ids[i] << ',' << (is_hot[i] ? 1 : 0) << '\n';
  }
  auto dir = std::filesystem::path(args.out);
  io::write_file((dir / "coordinates.csv").string(), coords.str());
  io::write_file((dir / "outcomes.csv").string(), outcomes.str());
  io::write_file((dir / "observed.csv").string(), observed.str());
  io::write_file((dir / "hotspots.csv").string(), hotspots.str());
  json meta;
  meta["config"] = cfg;
  meta["tau"] = tau;
  io::write_file((dir / "meta.json").string(), meta.dump(2) + "\n");
  std::cout << "wrote coordinates.csv, outcomes.csv, observed.csv, hotspots.csv, meta.json to "
            << args.out << "\n";
  return 0;
}

int cmd_power(CommonArgs& args) {
  json cfg = io::parse_json_file(args.config_path);
  check_keys(cfg, "config", {"sim", "seed", "workers"});
  if (args.seed) cfg["seed"] = *args.seed;
  if (args.workers) cfg["workers"] = *args.workers;
  SimConfig sc = parse_sim(cfg);
  if (cfg.contains("seed")) sc.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("workers")) sc.workers = count_of(cfg["workers"], "workers");

  PowerStudy study = run_power_study(sc);
  if (args.format == "csv")
    emit(args, io::power_study_csv(study));
  else
    emit(args, wrap_output(cfg, io::power_study_json(study)).dump(2) + "\n");
  return 0;
}

int cmd_oracle(CommonArgs& args, double eps_s) {
  json cfg = io::parse_json_file(args.config_path);
  // Accepts a full test config so the same file can drive both commands; the
  // statistic, engine, and observed sections are simply not consulted here.
  check_keys(cfg, "config",
             {"network", "outcomes", "design", "observed", "statistic", "engine", "event",
              "enumeration_cap", "seed", "workers"});
  ProximityStructure G = load_network(cfg);
  const json& oc = need(cfg, "config", "outcomes");
  check_keys(oc, "outcomes", {"path"});
  OutcomeData data =
      io::load_outcomes_csv(str(need(oc, "outcomes", "path"), "outcomes.path"), G.unit_ids(),
                            nullptr);
  AssignmentMechanism mech = load_design(cfg, G);
  std::size_t cap = kDefaultEnumerationCap;
  if (cfg.contains("enumeration_cap")) cap = count_of(cfg["enumeration_cap"], "enumeration_cap");
  emit(args, io::imputability_grid_csv(imputability_grid(data, mech, G, eps_s, cap)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Randomization tests for interference on networks.\n"
      "Every command reads a JSON config; --seed and --workers override it."};
  app.require_subcommand(1);

  CommonArgs test_args, seq_args, sim_args, power_args, oracle_args;
  double sim_tau = 0.0, oracle_eps = 0.0;

  auto* t = app.add_subcommand(
      "test",
      "Run one test.\n"
      "Config keys: network{kind,path,sidecar} outcomes{path}\n"
      "design{kind,p,m,strata,counts,path,probs} observed{bits|path}\n"
      "statistic{kind,sidedness,eps_s,eps_c,covariates,weighting,propensity_draws,"
      "residualize_outcomes,pairwise_residuals}\n"
      "engine{name,mode,resamples,alpha,tie_rule,unadjusted,enumeration_cap,store_draws,"
      "store_draws_cap} event{focal_units,assignments,probs} seed workers");
  add_common(t, &test_args);
  t->add_option("--format", test_args.format, "json or text")
      ->check(CLI::IsMember({"json", "text"}));

  auto* s = app.add_subcommand(
      "sequential",
      "Scan a threshold grid.\n"
      "Config keys: as for test, plus thresholds (ascending grid),\n"
      "procedure (scan|pretest|descent), k_target (pretest only)");
  add_common(s, &seq_args);

  auto* g = app.add_subcommand(
      "simulate",
      "Write one synthetic dataset (coordinates, outcomes, observed, hotspots).\n"
      "Config keys: sim{n,n_hotspots,n_treated,mean_x,mean_y,cov_xx,cov_xy,cov_yy,\n"
      "cluster_share,cluster_scale,thresholds,base_shape,base_scale,hot_shape,hot_scale,\n"
      "direct_effect,taus,sims,resamples,pool_size,hypotheses,engines,alpha,tie_rule,side,\n"
      "stat,redraw_schedule,seed,workers} seed");
  add_common(g, &sim_args);
  g->add_option("--tau", sim_tau, "spillover amplitude for the generated outcomes");

  auto* p = app.add_subcommand("power",
                               "Run a power study over sim.taus and sim.hypotheses.\n"
                               "Config keys: sim{...} (as for simulate) seed workers");
  add_common(p, &power_args);
  p->add_option("--format", power_args.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* o = app.add_subcommand(
      "oracle",
      "Print the imputability grid: one row per assignment in the design's\n"
      "support, '?' where a unit's outcome is not imputable at --eps-s.\n"
      "Config keys: network{...} outcomes{path} design{...} enumeration_cap");
  add_common(o, &oracle_args);
  o->add_option("--eps-s", oracle_eps, "spillover threshold for imputability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (t->parsed()) return cmd_test(test_args);
    if (s->parsed()) return cmd_sequential(seq_args);
    if (g->parsed()) return cmd_simulate(sim_args, sim_tau);
    if (p->parsed()) return cmd_power(power_args);
    if (o->parsed()) return cmd_oracle(oracle_args, oracle_eps);
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
