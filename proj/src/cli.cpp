#include "bbrel/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bbrel/ap_survey.hpp"
#include "bbrel/cohort_stats.hpp"
#include "bbrel/core_model.hpp"
#include "bbrel/csv.hpp"
#include "bbrel/dns_availability.hpp"
#include "bbrel/experiments.hpp"
#include "bbrel/failover_sim.hpp"
#include "bbrel/multihome_sim.hpp"
#include "bbrel/report.hpp"
#include "bbrel/synthetic.hpp"

namespace bbrel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad threshold: '" + item + "'");
    }
  }
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path.filename().string(), "", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

std::string csv_banner(const std::string& hash) { return "# config_sha256=" + hash + "\n"; }

struct Context {
  RunConfig config;
  std::string command;
  std::string hash;
  std::vector<fs::path> inputs;
  std::vector<std::string> notes;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

void finish(Context& ctx, OutputSet& outputs) {
  std::vector<std::string> names;
  for (const auto& p : outputs.commit()) names.push_back(p.filename().string());
  auto manifest = make_manifest(ctx.command, ctx.config.to_json(), ctx.inputs, names);
  if (!ctx.notes.empty()) manifest["notes"] = ctx.notes;
  OutputSet m(outputs.dir());
  m.file("run_manifest.json") << dump_json(manifest);
  m.commit();
  *ctx.out << ctx.command << ": wrote " << names.size() << " report(s) to " << outputs.dir().string() << "\n";
}

// --- synth -------------------------------------------------------------------

int cmd_synth(Context& ctx) {
  auto spec = synth_spec_from_json(ctx.config.synth);
  if (ctx.config.seed) spec.seed = *ctx.config.seed;
  auto data = generate_synthetic(spec);
  OutputSet out(ctx.config.out_dir);
  write_units_csv(out.file("units.csv"), data.units);
  write_pings_csv(out.file("pings.csv"), data.pings);
  if (!data.traffic.empty()) write_traffic_csv(out.file("traffic.csv"), data.traffic);
  if (!data.dns.empty()) write_dns_csv(out.file("dns.csv"), data.dns);
  finish(ctx, out);
  return 0;
}

// --- ingest ------------------------------------------------------------------

int cmd_ingest(Context& ctx) {
  auto ds = load_dataset(ctx.config.in_dir);
  ctx.inputs = ds.inputs;
  OutputSet out(ctx.config.out_dir);
  auto& hourly = out.file("hourly.csv");
  hourly << csv_banner(ctx.hash);
  write_hourly_csv(hourly, ds.hourly());

  auto& report = out.file("ingest_report.jsonl");
  std::ostringstream lines;
  ds.report.write_jsonl(lines);
  std::istringstream in(lines.str());
  for (std::string line; std::getline(in, line);) {
    auto j = json::parse(line);
    j["config_hash"] = ctx.hash;
    report << j.dump() << "\n";
  }

  auto& rejected = out.file("units_rejected.csv");
  rejected << csv_banner(ctx.hash) << "unit_id,reason\n";
  for (const auto& r : ds.rejected_units) write_csv_row(rejected, {r.unit_id, r.reason});
  finish(ctx, out);
  return 0;
}

// --- stats -------------------------------------------------------------------

std::vector<GroupKey> group_keys(const json& stats) {
  std::vector<GroupKey> keys;
  auto names = stats.value("group_by", std::vector<std::string>{"isp"});
  for (const auto& n : names) {
    auto k = parse_group_key(n);
    if (!k) throw UsageError("unknown group key: " + n);
    keys.push_back(*k);
  }
  return keys;
}

void write_stats_rows(std::ostream& os, const std::vector<GroupStats>& rows) {
  for (const auto& g : rows) {
    const auto& p = g.pooled;
    write_csv_row(os, {g.scope, format_number(g.threshold), std::to_string(p.uptime_hours),
                       std::to_string(p.downtime_hours), std::to_string(p.failures), format_optional(p.mtbf_hours),
                       format_optional(p.mdt_hours), format_number(g.mean_availability),
                       format_number(g.annual_downtime_hours())});
  }
}

int cmd_stats(Context& ctx) {
  const auto& cfg = ctx.config;
  auto ds = load_dataset(cfg.in_dir);
  ctx.inputs = ds.inputs;
  auto series = ds.series();
  if (series.empty()) throw ReliabilityError("empty-scope", "no observed hours for any accepted unit");

  auto keys = group_keys(cfg.stats);
  bool peak = cfg.stats.value("peak", true);

  OutputSet out(cfg.out_dir);
  auto& stats = out.file("stats.csv");
  stats << csv_banner(ctx.hash) << "scope,threshold,uptime,downtime,failures,mtbf,mdt,availability,annual_downtime\n";
  auto& cdf = out.file("cdf.csv");
  cdf << csv_banner(ctx.hash) << "group,loss,cum_fraction\n";
  auto& exceed = out.file("exceedance.csv");
  exceed << csv_banner(ctx.hash) << "group,threshold,fraction_at_or_above,hours\n";

  for (auto key : keys) {
    AggregateOptions opt;
    opt.key = key;
    opt.thresholds = cfg.thresholds;
    opt.peak_window = cfg.peak_window;
    opt.jobs = cfg.jobs;
    std::vector<std::string> warnings;
    write_stats_rows(stats, aggregate_by(series, ds.units, opt, &warnings));
    if (peak) {
      opt.peak_only = true;
      write_stats_rows(stats, aggregate_by(series, ds.units, opt, &warnings));
    }
    for (auto& w : warnings) ctx.notes.push_back(std::move(w));

    for (const auto& c : loss_cdf_by(series, ds.units, key, cfg.thresholds)) {
      for (const auto& p : c.points) write_csv_row(cdf, {c.group, format_number(p.loss), format_number(p.cum_fraction)});
      for (const auto& [t, frac] : c.at_or_above) {
        write_csv_row(exceed, {c.group, format_number(t), format_number(frac), std::to_string(c.hours)});
      }
    }
  }

  // Feature ranking: one record per unit, target = availability bin.
  auto& ig = out.file("infogain.csv");
  ig << csv_banner(ctx.hash) << "threshold,attribute,gain,rank\n";
  std::string binning = cfg.stats.value("binning", std::string("quartiles"));
  if (binning != "quartiles" && binning != "thresholds") throw UsageError("unknown binning: " + binning);
  for (double t : cfg.thresholds) {
    std::vector<double> avail;
    std::vector<const UnitMeta*> who;
    for (const auto& u : ds.units) {
      auto it = series.find(u.unit_id);
      if (it == series.end() || it->second.empty()) continue;
      avail.push_back(to_double(compute_stats(it->second, t).availability));
      who.push_back(&u);
    }
    auto cuts = binning == "quartiles" ? quartile_cuts(avail) : threshold_complement_cuts(cfg.thresholds);
    std::vector<FeatureRecord> records;
    for (std::size_t i = 0; i < who.size(); ++i) {
      records.push_back({{{"isp", who[i]->isp},
                          {"technology", std::string(to_string(who[i]->technology))},
                          {"capacity", capacity_bin(who[i]->down_capacity_bps)},
                          {"region", who[i]->region}},
                         bin_label(avail[i], cuts)});
    }
    auto ranked = rank_attributes(records);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      write_csv_row(ig, {format_number(t), ranked[r].attribute, format_number(ranked[r].gain), std::to_string(r + 1)});
    }
  }

  // Demographic correlation, when region indicators are supplied.
  auto indicators_path = cfg.in_dir / "indicators.csv";
  if (fs::exists(indicators_path)) {
    std::ifstream in(indicators_path);
    auto indicators = read_indicators_csv(in, "indicators.csv", ds.report);
    ctx.inputs.push_back(indicators_path);
    auto& corr = out.file("correlations.csv");
    corr << csv_banner(ctx.hash) << "threshold,x,y,r,n\n";
    for (double t : cfg.thresholds) {
      AggregateOptions opt;
      opt.key = GroupKey::Region;
      opt.thresholds = {t};
      std::map<std::string, double> unavail;
      for (const auto& g : aggregate_by(series, ds.units, opt)) {
        unavail[g.scope.substr(std::string("region=").size())] = to_double(g.mean_unavailability());
      }
      std::vector<double> y, urban, density, gsp;
      for (const auto& ind : indicators) {
        auto it = unavail.find(ind.region);
        if (it == unavail.end()) continue;
        y.push_back(it->second);
        urban.push_back(ind.urban_fraction);
        density.push_back(ind.population_density);
        gsp.push_back(ind.gsp_per_capita);
      }
      for (auto [name, x] : {std::pair{"urban_fraction", &urban}, std::pair{"pop_density", &density},
                             std::pair{"gsp_per_capita", &gsp}}) {
        try {
          auto r = pearson(*x, y, name, "unavailability");
          write_csv_row(corr, {format_number(t), r.x_name, r.y_name, format_number(r.r), std::to_string(r.n)});
        } catch (const std::invalid_argument& e) {
          ctx.notes.push_back(std::string("correlation ") + name + " at " + format_number(t) + ": " + e.what());
        }
      }
    }
  }
  finish(ctx, out);
  return 0;
}

// --- dns ---------------------------------------------------------------------

int cmd_dns(Context& ctx) {
  auto ds = load_dataset(ctx.config.in_dir);
  ctx.inputs = ds.inputs;
  std::size_t skipped = 0;
  auto hours = build_dns_hours(ds.dns, ds.loss, &skipped);
  if (skipped) ctx.notes.push_back(std::to_string(skipped) + " DNS hours without a loss measurement skipped");
  std::vector<std::string> no_data;
  auto probs = dns_failure_probabilities_by_isp(hours, ds.units, &no_data);
  for (const auto& isp : no_data) ctx.notes.push_back("no-data: " + isp);
  if (probs.empty()) throw DnsNoData("no-data: no ISP has a usable DNS hour");
  OutputSet out(ctx.config.out_dir);
  auto& f = out.file("dns_probs.csv");
  f << csv_banner(ctx.hash) << "isp,p_one,p_two,hours_used,hours_excluded\n";
  for (const auto& p : probs) {
    write_csv_row(f, {p.isp, format_number(p.p_one), format_number(p.p_two), std::to_string(p.hours_used),
                      std::to_string(p.hours_excluded)});
  }
  finish(ctx, out);
  return 0;
}

// --- experiment --------------------------------------------------------------

int cmd_experiment(Context& ctx) {
  json exp_json = ctx.config.experiment;
  if (!exp_json.contains("peak_window")) {
    exp_json["peak_window"] = {ctx.config.peak_window.start_hour, ctx.config.peak_window.end_hour};
  }
  ExperimentConfig exp;
  try {
    exp = experiment_config_from_json(exp_json);
  } catch (const std::exception& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  }
  auto ds = load_dataset(ctx.config.in_dir);
  ctx.inputs = ds.inputs;
  auto run = run_experiment(exp, ds);

  json report;
  report["config_hash"] = ctx.hash;
  report["experiment"] = to_json(exp);
  report["matching"] = {{"method", "greedy-one-to-one"},
                        {"capacity_rule", "|a-b|/max(a,b) <= tolerance, download and upload"},
                        {"same_region", true},
                        {"tolerance", exp.tolerance}};
  report["results"] = json::array();
  for (const auto& r : run.results) report["results"].push_back(to_json(r));
  report["notes"] = run.notes;
  OutputSet out(ctx.config.out_dir);
  out.file("experiment.json") << dump_json(report);
  finish(ctx, out);
  return 0;
}

// --- multihome ---------------------------------------------------------------

int cmd_multihome(Context& ctx) {
  auto ds = load_dataset(ctx.config.in_dir);
  ctx.inputs = ds.inputs;
  auto series = ds.series();
  auto pairs = build_pairs(series, ds.units, ctx.config.min_overlap);
  auto report = sim_report(pairs, series, ctx.config.thresholds);
  ctx.notes.push_back("pairs are unweighted; a unit may appear in several pairs");
  for (auto& n : report.notes) ctx.notes.push_back(std::move(n));
  OutputSet out(ctx.config.out_dir);
  auto& f = out.file("multihome.csv");
  f << csv_banner(ctx.hash) << "cohort,threshold,availability,mtbf,mdt,pairs\n";
  for (const auto& row : report.rows) {
    const auto& s = row.stats;
    write_csv_row(f, {std::string(to_string(row.cohort)), format_number(s.threshold), format_number(s.mean_availability),
                      format_optional(s.pooled.mtbf_hours), format_optional(s.pooled.mdt_hours),
                      std::to_string(row.pairs)});
  }
  finish(ctx, out);
  return 0;
}

// --- apsurvey ----------------------------------------------------------------

int cmd_apsurvey(Context& ctx) {
  const auto& dir = ctx.config.in_dir;
  IngestReport report;
  auto scans_path = dir / "scans.csv";
  std::ifstream scans_in(scans_path);
  if (!scans_in) throw CsvError("scans.csv", "", "cannot open input file " + scans_path.string());
  auto scans = read_scans_csv(scans_in, "scans.csv", report);
  ctx.inputs.push_back(scans_path);

  std::map<std::string, std::string> clients;
  if (auto p = dir / "clients.csv"; fs::exists(p)) {
    std::ifstream in(p);
    clients = read_clients_csv(in, "clients.csv", report);
    ctx.inputs.push_back(p);
  }
  ScanReportOptions opt;
  if (auto p = dir / "isp_rules.txt"; fs::exists(p)) {
    std::ifstream in(p);
    opt.rules = read_isp_rules(in);
    ctx.inputs.push_back(p);
  }
  const auto& cfg = ctx.config.apsurvey;
  opt.viability_cutoff_pct = cfg.value("viability_cutoff_pct", opt.viability_cutoff_pct);
  if (cfg.contains("blocklist")) opt.blocklist = cfg.at("blocklist").get<std::vector<std::string>>();
  if (scans.empty()) throw DnsNoData("no-data: scans.csv has no usable scans");

  auto result = scan_report(scans, clients, opt);
  auto j = result.to_json();
  j["config_hash"] = ctx.hash;
  j["viability_cutoff_pct"] = opt.viability_cutoff_pct;
  j["rejected_rows"] = report.count("rejected");
  OutputSet out(ctx.config.out_dir);
  out.file("ap_report.json") << dump_json(j);
  finish(ctx, out);
  return 0;
}

// --- failover ----------------------------------------------------------------

json default_scenario() {
  return json::parse(R"({
    "primary": {"name": "cable", "capacity_bps": 10000000, "outages": [[60, 360]]},
    "secondary": {"name": "neighbor-ap", "capacity_bps": 8000000},
    "policy": {"detection_delay_s": 5},
    "client": {"buffer_s": 220, "buffer_cap_s": 220},
    "duration_s": 600,
    "dt": 0.1
  })");
}

int cmd_failover(Context& ctx) {
  json sj = ctx.config.scenario.empty() ? default_scenario() : ctx.config.scenario;
  Scenario sc;
  try {
    sc = scenario_from_json(sj);
  } catch (const std::exception& e) {
    throw UsageError(std::string("scenario: ") + e.what());
  }
  auto traj = run_scenario(sc);
  OutputSet out(ctx.config.out_dir);
  auto& f = out.file("trajectory.csv");
  f << csv_banner(ctx.hash) << "t,capacity,buffer,quality,stalled\n";
  for (const auto& s : traj.samples) {
    write_csv_row(f, {format_number(s.t), format_number(s.capacity_bps), format_number(s.buffer_s),
                      sc.client.ladder[s.quality].label, s.stalled ? "1" : "0"});
  }
  auto summary = to_json(traj.summary, sc.client.ladder);
  summary["config_hash"] = ctx.hash;
  out.file("failover_summary.json") << dump_json(summary);
  finish(ctx, out);
  return 0;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  static const std::set<std::string> known{"thresholds", "peak_window", "min_overlap", "seed",     "jobs",
                                           "in",         "out",         "synth",       "stats",    "experiment",
                                           "scenario",   "apsurvey"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  RunConfig c;
  if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::vector<double>>();
  if (j.contains("peak_window")) {
    c.peak_window.start_hour = j.at("peak_window").at(0).get<int>();
    c.peak_window.end_hour = j.at("peak_window").at(1).get<int>();
  }
  c.min_overlap = j.value("min_overlap", c.min_overlap);
  if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("in")) c.in_dir = j.at("in").get<std::string>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  for (auto [key, field] : {std::pair{"synth", &c.synth}, std::pair{"stats", &c.stats},
                            std::pair{"experiment", &c.experiment}, std::pair{"scenario", &c.scenario},
                            std::pair{"apsurvey", &c.apsurvey}}) {
    if (j.contains(key)) *field = j.at(key);
  }
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["thresholds"] = thresholds;
  j["peak_window"] = {peak_window.start_hour, peak_window.end_hour};
  j["min_overlap"] = min_overlap;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["synth"] = synth;
  j["stats"] = stats;
  j["experiment"] = experiment;
  j["scenario"] = scenario;
  j["apsurvey"] = apsurvey;
  return j;
}

void RunConfig::validate() const {
  if (thresholds.empty()) throw std::invalid_argument("at least one threshold is required");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0 && thresholds[i] <= 1)) throw std::invalid_argument("thresholds must lie in (0, 1]");
    if (i && thresholds[i] <= thresholds[i - 1]) throw std::invalid_argument("thresholds must be ascending");
  }
  if (peak_window.start_hour < 0 || peak_window.end_hour > 24 || peak_window.start_hour >= peak_window.end_hour) {
    throw std::invalid_argument("peak window must satisfy 0 <= start < end <= 24");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Broadband reliability analysis toolkit", "bbrel"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, thresholds, in_dir, out_dir, experiment_path, scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--thresholds", thresholds, "comma-separated loss thresholds, e.g. 0.01,0.05,0.1");
  app.add_option("--in", in_dir, "input directory");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed (synth)");
  app.add_option("--jobs", jobs, "worker threads");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "generate a synthetic telemetry dataset"},
      {"ingest", "clean raw telemetry into hourly records"},
      {"stats", "failure, availability, CDF and feature-ranking reports"},
      {"dns", "DNS server failure probabilities per ISP"},
      {"experiment", "natural experiment with matched pairs and a binomial test"},
      {"multihome", "simulated multihomed connections per census block"},
      {"apsurvey", "wireless scan clustering and failover candidates"},
      {"failover", "dual-link failover and streaming buffer simulation"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    subs[name] = sub;
  }
  subs["experiment"]->add_option("--experiment", experiment_path, "experiment config (JSON)");
  subs["failover"]->add_option("--scenario", scenario_path, "scenario file (JSON)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return static_cast<int>(ExitCode::kUsage);
  }

  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) ctx.command = name;
  }

  try {
    try {
      json cj = config_path.empty() ? json::object() : read_json_file(config_path);
      ctx.config = RunConfig::from_json(cj);
      if (!thresholds.empty()) ctx.config.thresholds = parse_thresholds(thresholds);
      if (!in_dir.empty()) ctx.config.in_dir = in_dir;
      if (!out_dir.empty()) ctx.config.out_dir = out_dir;
      if (seed) ctx.config.seed = seed;
      if (jobs) ctx.config.jobs = *jobs;
      if (!experiment_path.empty()) ctx.config.experiment = read_json_file(experiment_path);
      if (!scenario_path.empty()) ctx.config.scenario = read_json_file(scenario_path);
      ctx.config.validate();
    } catch (const CsvError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    ctx.hash = config_hash(ctx.config.to_json());

    if (ctx.command == "synth") return cmd_synth(ctx);
    if (ctx.command == "ingest") return cmd_ingest(ctx);
    if (ctx.command == "stats") return cmd_stats(ctx);
    if (ctx.command == "dns") return cmd_dns(ctx);
    if (ctx.command == "experiment") return cmd_experiment(ctx);
    if (ctx.command == "multihome") return cmd_multihome(ctx);
    if (ctx.command == "apsurvey") return cmd_apsurvey(ctx);
    if (ctx.command == "failover") return cmd_failover(ctx);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kUsage);
  } catch (const CsvError& e) {
    err << "error: missing input: " << e.what();
    if (!e.column().empty()) err << " (file " << e.file() << ", column " << e.column() << ")";
    err << "\n";
    return static_cast<int>(ExitCode::kMissingInput);
  } catch (const ExperimentError& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return static_cast<int>(e.code() == "no-matches" ? ExitCode::kNoMatches : ExitCode::kBadInput);
  } catch (const ReliabilityError& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return static_cast<int>(e.code() == "empty-scope" ? ExitCode::kNoData : ExitCode::kBadInput);
  } catch (const DnsNoData& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kNoData);
  } catch (const std::invalid_argument& e) {
    err << "error: bad input: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kBadInput);
  } catch (const json::exception& e) {
    err << "error: bad input: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kBadInput);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace bbrel::cli
